"""HOG feature maps, HOG-space patch convolution and pyramid pooling.

Dalal-Triggs defaults: 8-px cells, 9 unsigned orientation bins (centres at
0, 20, ..., 160 degrees), 2x2-cell blocks with L2-hys normalization. Each cell
carries the four normalizations of the blocks that contain it, giving a
36-dimensional descriptor per cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

CELL = 8
NBINS = 9
CLIP = 0.2
DESC = 4 * NBINS
_EPS = 1e-3


@dataclass(frozen=True)
class HogMap:
    cells: np.ndarray  # (H, W, 36)
    cell_size: int = CELL

    @property
    def shape(self):
        return self.cells.shape[:2]

    def window(self, r0, c0, h, w) -> "HogMap":
        return HogMap(self.cells[r0 : r0 + h, c0 : c0 + w], self.cell_size)


def gradients(image):
    """Centred differences; the outermost pixel ring gets zero gradient."""
    im = np.asarray(image, dtype=np.float64)
    gx = np.zeros_like(im)
    gy = np.zeros_like(im)
    gx[1:-1, 1:-1] = im[1:-1, 2:] - im[1:-1, :-2]
    gy[1:-1, 1:-1] = im[2:, 1:-1] - im[:-2, 1:-1]
    return gx, gy


def cell_histograms(image, cell=CELL):
    """Orientation histograms per cell with bilinear spatial and orientation votes."""
    im = np.asarray(image, dtype=np.float64)
    H, W = im.shape[0] // cell, im.shape[1] // cell
    im = im[: H * cell, : W * cell]
    gx, gy = gradients(im)
    mag = np.hypot(gx, gy)
    theta = np.degrees(np.arctan2(gy, gx)) % 180.0
    pos = theta / (180.0 / NBINS)
    b0 = np.floor(pos).astype(np.int64)
    wb1 = pos - b0
    b0 %= NBINS
    b1 = (b0 + 1) % NBINS

    ys, xs = np.mgrid[0 : H * cell, 0 : W * cell]
    cy = (ys + 0.5) / cell - 0.5
    cx = (xs + 0.5) / cell - 0.5
    r0 = np.floor(cy).astype(np.int64)
    c0 = np.floor(cx).astype(np.int64)
    wy1 = cy - r0
    wx1 = cx - c0

    hist = np.zeros(H * W * NBINS)
    nz = mag > 0
    for dr, wr in ((0, 1 - wy1), (1, wy1)):
        rr = r0 + dr
        for dc, wc in ((0, 1 - wx1), (1, wx1)):
            cc = c0 + dc
            ok = nz & (rr >= 0) & (rr < H) & (cc >= 0) & (cc < W)
            base = (rr[ok] * W + cc[ok]) * NBINS
            w = (mag * wr * wc)[ok]
            hist += np.bincount(base + b0[ok], weights=w * (1 - wb1[ok]), minlength=hist.size)
            hist += np.bincount(base + b1[ok], weights=w * wb1[ok], minlength=hist.size)
    return hist.reshape(H, W, NBINS)


def _l2hys(v):
    n = np.sqrt((v * v).sum(-1, keepdims=True) + _EPS**2)
    v = np.minimum(v / n, CLIP)
    n = np.sqrt((v * v).sum(-1, keepdims=True) + _EPS**2)
    return v / n


def normalize_blocks(hist):
    H, W, _ = hist.shape
    pad = np.zeros((H + 2, W + 2, NBINS))
    pad[1:-1, 1:-1] = hist
    # block (a, b) in padded coordinates covers pad[a:a+2, b:b+2]
    blocks = np.concatenate(
        [pad[:-1, :-1], pad[:-1, 1:], pad[1:, :-1], pad[1:, 1:]], axis=-1
    )  # (H+1, W+1, 36), cell order TL, TR, BL, BR
    blocks = _l2hys(blocks)
    out = np.empty((H, W, DESC))
    # context k = 2a + b: block with padded top-left (i+a, j+b); the cell sits
    # at position (1-a, 1-b) inside it
    for a in (0, 1):
        for b in (0, 1):
            k = 2 * a + b
            slot = 2 * (1 - a) + (1 - b)
            out[..., k * NBINS : (k + 1) * NBINS] = blocks[
                a : a + H, b : b + W, slot * NBINS : (slot + 1) * NBINS
            ]
    return out


def hog(image) -> HogMap:
    im = np.asarray(image, dtype=np.float64)
    if im.ndim != 2 or min(im.shape) < 2 * CELL:
        raise ValueError("image smaller than one HOG block")
    return HogMap(normalize_blocks(cell_histograms(im)))


def _as_cells(m):
    return m.cells if isinstance(m, HogMap) else np.asarray(m, dtype=np.float64)


def window_norms(image_map, h, w) -> np.ndarray:
    """L2 norm of every flattened h x w window, shape (H-h+1, W-w+1)."""
    cells = _as_cells(image_map)
    sq = np.einsum("ijk,ijk->ij", cells, cells)
    return np.sqrt(np.maximum(sliding_window_view(sq, (h, w)).sum(axis=(-2, -1)), 0.0))


def convolve_bank(image_map, filters) -> np.ndarray:
    """Normalized correlation of equally sized filters at every valid offset: (K, H', W')."""
    cells = _as_cells(image_map)
    filters = np.asarray(filters, dtype=np.float64)
    K, h, w, _ = filters.shape
    H, W, _ = cells.shape
    if h > H or w > W:
        raise ValueError("filter larger than image map")
    Ho, Wo = H - h + 1, W - w + 1
    fnorm = np.linalg.norm(filters.reshape(K, -1), axis=1)
    fb = np.divide(filters, fnorm[:, None, None, None], out=np.zeros_like(filters),
                   where=fnorm[:, None, None, None] > 0)
    num = np.zeros((Ho, Wo, K))
    for dr in range(h):
        for dc in range(w):
            num += cells[dr : dr + Ho, dc : dc + Wo] @ fb[:, dr, dc, :].T
    wn = window_norms(cells, h, w)[..., None]
    act = np.divide(num, wn, out=np.zeros_like(num), where=wn > 0)
    return np.moveaxis(act, -1, 0)


def patch_convolve(image_map, filter_map) -> np.ndarray:
    """Normalized correlation of one filter with every valid window, in [-1, 1]."""
    return convolve_bank(image_map, _as_cells(filter_map)[None])[0]


def pyramid_pool(act) -> np.ndarray:
    """Max over the whole grid and its four quadrants, clamped at zero.

    Odd sizes split with the extra row/column in the top/left quadrant.
    """
    act = np.asarray(act, dtype=np.float64)
    if act.ndim == 2:
        return _pool_stack(act[None])[0]
    return _pool_stack(act)


def _pool_stack(act):
    K, H, W = act.shape
    if H == 0 or W == 0:
        raise ValueError("empty activation grid")
    hr, wc = -(-H // 2), -(-W // 2)
    out = np.zeros((K, 5))
    out[:, 0] = act.reshape(K, -1).max(1)
    for q, (rs, cs) in enumerate(
        [(slice(0, hr), slice(0, wc)), (slice(0, hr), slice(wc, W)),
         (slice(hr, H), slice(0, wc)), (slice(hr, H), slice(wc, W))], start=1
    ):
        sub = act[:, rs, cs]
        if sub.size:
            out[:, q] = sub.reshape(K, -1).max(1)
    return np.maximum(out, 0.0)


@dataclass(frozen=True)
class ViewFeature:
    shape_id: str
    view_index: int
    vector: np.ndarray
    filter_ids: tuple


def encode_map(image_map, filters) -> np.ndarray:
    """5K pooled activations for filters (sequence of HogMaps or (K,h,w,36) array)."""
    if isinstance(filters, np.ndarray) and filters.ndim == 4:
        stacks = {filters.shape[1:3]: (np.arange(len(filters)), filters)}
        K = len(filters)
    else:
        cells = [_as_cells(f) for f in filters]
        K = len(cells)
        groups = {}
        for i, c in enumerate(cells):
            groups.setdefault(c.shape[:2], []).append(i)
        stacks = {s: (np.array(ix), np.stack([cells[i] for i in ix])) for s, ix in groups.items()}
    if K == 0:
        raise ValueError("need at least one filter")
    out = np.zeros((K, 5))
    for idx, stack in stacks.values():
        out[idx] = _pool_stack(convolve_bank(image_map, stack))
    return out.reshape(-1)


def encode_view(image, filters, filter_ids=None) -> ViewFeature:
    """Encode a LineImage (or raw pixel grid) against a filter bank."""
    pixels = getattr(image, "pixels", image)
    vec = encode_map(hog(pixels), filters)
    if filter_ids is None:
        filter_ids = tuple(range(len(vec) // 5))
    return ViewFeature(getattr(image, "shape_id", ""), getattr(image, "view_index", 0), vec,
                       tuple(filter_ids))


def cosine(a, b) -> float:
    a = _as_cells(a).reshape(-1)
    b = _as_cells(b).reshape(-1)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))
