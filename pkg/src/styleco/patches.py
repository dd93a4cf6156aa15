"""Mid-level patches: sampling at projected seeds, k-means pre-selection,
support matrices and cluster-guided discriminant re-selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.cluster import KMeans

from .hog import CELL, HogMap

PATCH_SIZE = 48
MIN_INK = 0.01
DEFAULT_MU = 0.07
DEFAULT_TAU_S = 0.55


@dataclass(frozen=True)
class Patch:
    """A cell-aligned square window of one line image.

    ``window`` is (row, col, size) in pixels; ``hog`` is the matching block of
    the full image's HOG map, so a patch correlates to exactly 1 with its source.
    """

    patch_id: str
    shape_id: str
    seed_id: int
    view_index: int
    window: tuple[int, int, int]
    hog: np.ndarray = field(repr=False, compare=False)

    @property
    def center(self):
        r, c, s = self.window
        return (c + s / 2, r + s / 2)


def patch_id(shape_id, view_index, seed_id, tag="s"):
    return f"{shape_id}:v{view_index}:{tag}{seed_id}"


def sample_patches(image, image_map: HogMap, seeds, size: int = PATCH_SIZE,
                   min_ink: float = MIN_INK, tag: str = "s") -> list[Patch]:
    """One patch per visible projected seed of this view.

    The window is snapped to the HOG cell grid (at most half a cell from the
    seed-centred window). Windows leaving the image or with less than
    ``min_ink`` nonzero pixels are dropped.
    """
    if size % CELL:
        raise ValueError(f"patch size must be a multiple of {CELL}")
    pixels = image.pixels
    H, W = pixels.shape
    ncell = size // CELL
    out = []
    for ps in seeds:
        if not ps.visible or ps.view_index != image.view_index:
            continue
        u, v = ps.pixel
        x0, y0 = u - size / 2, v - size / 2
        if x0 < 0 or y0 < 0 or x0 + size > W or y0 + size > H:
            continue
        c0 = int(round(x0 / CELL))
        r0 = int(round(y0 / CELL))
        if r0 < 0 or c0 < 0 or r0 + ncell > image_map.shape[0] or c0 + ncell > image_map.shape[1]:
            continue
        r, c = r0 * CELL, c0 * CELL
        win = pixels[r : r + size, c : c + size]
        if np.count_nonzero(win) < min_ink * win.size:
            continue
        out.append(Patch(
            patch_id(image.shape_id, image.view_index, ps.seed_id, tag), image.shape_id,
            ps.seed_id, image.view_index, (r, c, size),
            image_map.cells[r0 : r0 + ncell, c0 : c0 + ncell],
        ))
    return out


def preselect_kmeans(patches: list[Patch], k: int, rng_seed=0, max_iter: int = 100) -> list[Patch]:
    """Representative patches of one view: the real patch nearest each k-means centre."""
    if not patches:
        raise ValueError("no patches to cluster")
    if len(patches) <= k:
        return list(patches)
    X = np.stack([p.hog.reshape(-1) for p in patches])
    km = KMeans(n_clusters=k, init="k-means++", n_init=1, max_iter=max_iter,
                random_state=rng_seed).fit(X)
    d = ((X[:, None, :] - km.cluster_centers_[None]) ** 2).sum(-1)  # (n, k)
    chosen = []
    for j in range(k):
        members = np.flatnonzero(km.labels_ == j)
        pool = members if len(members) else np.arange(len(patches))
        i = int(pool[np.argmin(d[pool, j])])
        if i not in chosen:
            chosen.append(i)
    return [patches[i] for i in sorted(chosen)]


@dataclass(frozen=True)
class SupportMatrix:
    x: np.ndarray  # (N_shapes, N_p) in {0, 1}
    tau_s: float
    shape_ids: tuple
    patch_ids: tuple


def compute_support(features, tau_s: float = DEFAULT_TAU_S) -> SupportMatrix:
    """x_ij = 1 iff the whole-image pooled activation of filter j on shape i,
    maximised over views that use the filter, reaches tau_s.

    ``features`` maps view -> (matrix (5K, N), filter_ids, shape_ids).
    """
    best = {}
    shape_ids = None
    for view in sorted(features):
        mat, fids, sids = features[view]
        if shape_ids is None:
            shape_ids = tuple(sids)
        elif tuple(sids) != shape_ids:
            raise ValueError("views disagree on shape order")
        whole = np.asarray(mat)[0::5]  # (K, N)
        for j, fid in enumerate(fids):
            best[fid] = np.maximum(best[fid], whole[j]) if fid in best else whole[j]
    patch_ids = tuple(best)
    act = np.stack([best[f] for f in patch_ids], axis=1) if patch_ids else np.zeros((0, 0))
    return SupportMatrix((act >= tau_s).astype(np.int8), tau_s, shape_ids or (), patch_ids)


@dataclass(frozen=True)
class DiscriminantSelection:
    clusters: tuple  # cluster labels, row order of delta
    selected: dict  # cluster label -> tuple of column indices
    delta: np.ndarray  # (C, N_p)
    thresholds: np.ndarray  # (C,)
    weights: np.ndarray  # (C, N)
    mu: float
    patch_ids: tuple = ()

    @property
    def union(self) -> np.ndarray:
        cols = set()
        for s in self.selected.values():
            cols.update(s)
        return np.array(sorted(cols), dtype=np.int64)

    @property
    def selected_ids(self) -> set:
        return {self.patch_ids[j] for j in self.union} if self.patch_ids else set(self.union)


def reselect_discriminant(support, clusters, mu: float = DEFAULT_MU) -> DiscriminantSelection:
    """Patches frequent within a single cluster.

    delta_lj = |sum_i w_li (2 x_ij - 1)| with w_li = [i in l] / C - 1 / N_p, and
    patch j kept for cluster l when delta_lj > mu * N_p / C.
    """
    if isinstance(support, SupportMatrix):
        x, pids = np.asarray(support.x, dtype=np.float64), support.patch_ids
    else:
        x, pids = np.asarray(support, dtype=np.float64), ()
    clusters = np.asarray(clusters)
    labels = tuple(np.unique(clusters).tolist())
    C = len(labels)
    if C == 0:
        raise ValueError("no clusters")
    n_p = x.shape[1]
    if n_p == 0:
        raise ValueError("no patches")
    member = np.stack([clusters == lab for lab in labels]).astype(np.float64)  # (C, N)
    w = member / C - 1.0 / n_p
    delta = np.abs(w @ (2 * x - 1))
    thr = np.full(C, mu * n_p / C)
    selected = {lab: tuple(np.flatnonzero(delta[i] > thr[i]).tolist()) for i, lab in enumerate(labels)}
    return DiscriminantSelection(labels, selected, delta, thr, w, mu, tuple(pids))
