"""Slow, independent reference implementations used only by the tests.

None of these import the code they check; they are written as plain loops
straight from the textbook definitions.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

CELL, NBINS, CLIP, EPS = 8, 9, 0.2, 1e-3


def hog_oracle(image):
    """Dalal-Triggs HOG by scalar loops: (H, W, 36) with the block layout of the package."""
    im = np.asarray(image, dtype=np.float64)
    H, W = im.shape[0] // CELL, im.shape[1] // CELL
    im = im[: H * CELL, : W * CELL]
    hist = np.zeros((H, W, NBINS))
    for y in range(1, H * CELL - 1):
        for x in range(1, W * CELL - 1):
            gx = im[y, x + 1] - im[y, x - 1]
            gy = im[y + 1, x] - im[y - 1, x]
            mag = math.hypot(gx, gy)
            if mag == 0:
                continue
            ang = math.degrees(math.atan2(gy, gx)) % 180.0
            pos = ang / 20.0
            b0 = int(math.floor(pos))
            fb = pos - b0
            cy = (y + 0.5) / CELL - 0.5
            cx = (x + 0.5) / CELL - 0.5
            r0, c0 = int(math.floor(cy)), int(math.floor(cx))
            fy, fx = cy - r0, cx - c0
            for r, wr in ((r0, 1 - fy), (r0 + 1, fy)):
                for c, wc in ((c0, 1 - fx), (c0 + 1, fx)):
                    if 0 <= r < H and 0 <= c < W:
                        hist[r, c, b0 % NBINS] += mag * wr * wc * (1 - fb)
                        hist[r, c, (b0 + 1) % NBINS] += mag * wr * wc * fb
    out = np.zeros((H, W, 4 * NBINS))
    for i in range(H):
        for j in range(W):
            k = 0
            for a in (0, 1):
                for b in (0, 1):
                    # block whose top-left cell is (i - 1 + a, j - 1 + b)
                    top, left = i - 1 + a, j - 1 + b
                    block = []
                    for r in (top, top + 1):
                        for c in (left, left + 1):
                            block.append(hist[r, c] if 0 <= r < H and 0 <= c < W else np.zeros(NBINS))
                    v = np.concatenate(block)
                    v = v / math.sqrt((v * v).sum() + EPS**2)
                    v = np.minimum(v, CLIP)
                    v = v / math.sqrt((v * v).sum() + EPS**2)
                    slot = (i - top) * 2 + (j - left)
                    out[i, j, k * NBINS : (k + 1) * NBINS] = v[slot * NBINS : (slot + 1) * NBINS]
                    k += 1
    return out


def conv_oracle(cells, filt):
    """Normalized correlation at every valid offset by nested loops."""
    H, W, _ = cells.shape
    h, w, _ = filt.shape
    f = filt.reshape(-1)
    fn = math.sqrt(float(f @ f))
    out = np.zeros((H - h + 1, W - w + 1))
    for r in range(H - h + 1):
        for c in range(W - w + 1):
            win = cells[r : r + h, c : c + w].reshape(-1)
            wn = math.sqrt(float(win @ win))
            if fn > 0 and wn > 0:
                out[r, c] = float(win @ f) / (fn * wn)
    return out


def pool_oracle(act):
    H, W = act.shape
    hr, wc = (H + 1) // 2, (W + 1) // 2
    regions = [(0, H, 0, W), (0, hr, 0, wc), (0, hr, wc, W), (hr, H, 0, wc), (hr, H, wc, W)]
    out = []
    for r0, r1, c0, c1 in regions:
        vals = [act[r, c] for r in range(r0, r1) for c in range(c0, c1)]
        out.append(max(0.0, max(vals)) if vals else 0.0)
    return np.array(out)


def lee_seung(X, W, H, iters, eps=1e-12):
    """Classic Frobenius NMF multiplicative updates (H first, then W)."""
    W, H = W.copy(), H.copy()
    for _ in range(iters):
        H *= (W.T @ X) / (W.T @ W @ H + eps)
        W *= (X @ H.T) / (W @ H @ H.T + eps)
    R = X - W @ H
    return float((R * R).sum())


def nnls_exhaustive(A, b):
    """min ||A y - b|| over y >= 0 by enumerating every support set."""
    n = A.shape[1]
    best, best_y = float(b @ b), np.zeros(n)
    for k in range(1, n + 1):
        for S in itertools.combinations(range(n), k):
            sub = A[:, S]
            y_s, *_ = np.linalg.lstsq(sub, b, rcond=None)
            if (y_s < -1e-12).any():
                continue
            y = np.zeros(n)
            y[list(S)] = np.maximum(y_s, 0)
            r = A @ y - b
            if float(r @ r) < best - 1e-15:
                best, best_y = float(r @ r), y
    return best_y


def best_ncut(A):
    """Exhaustive minimum normalized cut over all 2-partitions."""
    n = len(A)
    deg = A.sum(1)
    best, arg = math.inf, None
    for mask in range(1, 2 ** (n - 1)):
        S = np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)
        cut = A[S][:, ~S].sum()
        val = cut / deg[S].sum() + cut / deg[~S].sum()
        if val < best:
            best, arg = val, S
    return arg


def discriminant_oracle(x, clusters, mu):
    """delta and selection from the discriminant formula, by loops."""
    labels = sorted(set(clusters))
    C, N, Np = len(labels), len(clusters), x.shape[1]
    delta = np.zeros((C, Np))
    for li, lab in enumerate(labels):
        for j in range(Np):
            s = 0.0
            for i in range(N):
                w = (1.0 if clusters[i] == lab else 0.0) / C - 1.0 / Np
                s += w * (2 * x[i, j] - 1)
            delta[li, j] = abs(s)
    thr = mu * Np / C
    return delta, {lab: {j for j in range(Np) if delta[li, j] > thr} for li, lab in enumerate(labels)}


def point_segment_distance(p, a, b):
    ab = b - a
    t = 0.0 if not ab.any() else float(np.clip((p - a) @ ab / (ab @ ab), 0, 1))
    return float(np.linalg.norm(p - (a + t * ab)))


def purity_oracle(assign, truth):
    N = len(assign)
    total = 0.0
    for c in set(assign):
        members = [i for i in range(N) if assign[i] == c]
        best = max(sum(truth[i] == lab for i in members) / len(members) for lab in set(truth))
        total += len(members) / N * best
    return total
