"""Downstream applications of localized style regions."""

from .simplify import SimplifyResult, simplify, simplify_stats
from .viewselect import ViewChoice, best_view, view_match_counts

__all__ = ["SimplifyResult", "simplify", "simplify_stats", "ViewChoice", "best_view",
           "view_match_counts"]
