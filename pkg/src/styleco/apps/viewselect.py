"""Style-aware best-view selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_TAU_B = 0.7


@dataclass(frozen=True)
class ViewChoice:
    view_index: int
    counts: tuple  # matching sampled patches per view
    warning: str | None = None

    @property
    def count(self) -> int:
        return int(self.counts[self.view_index])


def _unit_rows(patches):
    m = np.stack([np.asarray(p.hog if hasattr(p, "hog") else p, dtype=np.float64).reshape(-1)
                  for p in patches])
    n = np.linalg.norm(m, axis=1, keepdims=True)
    return np.divide(m, n, out=np.zeros_like(m), where=n > 0)


def view_match_counts(view_patches, style_patches, n_views=None, tau_b=DEFAULT_TAU_B) -> np.ndarray:
    """Per view, number of distinct sampled patches with HOG cosine >= tau_b to any style patch.

    ``view_patches`` maps view index -> sampled patches (objects with ``.hog``
    or raw HOG blocks). Patches whose shape differs from every style patch
    are never compared.
    """
    n_views = n_views if n_views is not None else (max(view_patches, default=-1) + 1)
    counts = np.zeros(n_views, dtype=np.int64)
    if not style_patches:
        return counts
    shapes = {}
    for sp in style_patches:
        h = np.asarray(sp.hog if hasattr(sp, "hog") else sp)
        shapes.setdefault(h.shape, []).append(h)
    banks = {s: _unit_rows(hs) for s, hs in shapes.items()}
    for p, cands in view_patches.items():
        for c in cands:
            h = np.asarray(c.hog if hasattr(c, "hog") else c)
            bank = banks.get(h.shape)
            if bank is None:
                continue
            u = _unit_rows([h])[0]
            if (bank @ u).max() >= tau_b:
                counts[p] += 1
    return counts


def best_view(view_patches, style_patches, cameras=None, tau_b=DEFAULT_TAU_B) -> ViewChoice:
    """View with the most sampled patches resembling a style patch; ties go to the lower index."""
    n_views = len(cameras) if cameras is not None else (max(view_patches, default=-1) + 1)
    if sum(len(v) for v in view_patches.values()) == 0:
        raise ValueError("shape has no sampled patches")
    counts = view_match_counts(view_patches, style_patches, n_views, tau_b)
    k = int(np.argmax(counts))  # first maximum
    warning = None
    if counts[k] == 0:
        warning = "no sampled patch reaches tau_b; defaulting to view 0"
        log.warning(warning)
    return ViewChoice(k, tuple(int(c) for c in counts), warning)
