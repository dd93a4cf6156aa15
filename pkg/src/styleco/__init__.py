"""Style co-analysis of 3D shape collections via multi-view feature-line patches."""

__version__ = "0.1.0"
