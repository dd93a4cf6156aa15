"""Style clustering: self-tuning spectral clustering, pairwise constraints from
triplets, symmetric non-negative tri-factorization, and clustering purity."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans

log = logging.getLogger(__name__)

LOCAL_SCALE_NEIGHBOR = 7
DEFAULT_C_MAX = 12
EPS = 1e-12


def self_tuning_affinity(points: np.ndarray) -> np.ndarray:
    """exp(-d_ij^2 / (sigma_i sigma_j)), sigma_i = distance to the 7th neighbour.

    ``points`` holds one sample per row. The diagonal is zero.
    """
    d = cdist(points, points)
    n = len(points)
    k = min(LOCAL_SCALE_NEIGHBOR, n - 1)
    sigma = np.sort(d, axis=1)[:, k]
    pos = sigma[sigma > 0]
    floor = pos.min() * 1e-3 if len(pos) else 1.0
    sigma = np.maximum(sigma, floor)
    A = np.exp(-(d**2) / np.outer(sigma, sigma))
    np.fill_diagonal(A, 0.0)
    return A


def normalized_laplacian_spectrum(A: np.ndarray):
    """Ascending eigenpairs of I - D^-1/2 A D^-1/2."""
    deg = A.sum(1)
    inv = np.divide(1.0, np.sqrt(deg), out=np.zeros_like(deg), where=deg > 0)
    L = np.eye(len(A)) - inv[:, None] * A * inv[None, :]
    return np.linalg.eigh((L + L.T) / 2)


def eigengap_count(eigvals, c_max: int = DEFAULT_C_MAX) -> int:
    """Number of clusters = position of the largest gap among the first c_max eigenvalues."""
    m = min(c_max, len(eigvals))
    if m < 2:
        return 1
    gaps = np.diff(eigvals[:m + 1]) if m < len(eigvals) else np.diff(eigvals[:m])
    return int(np.argmax(gaps)) + 1


def spectral_cluster(V: np.ndarray, c_max: int = DEFAULT_C_MAX, rng_seed=0):
    """Self-tuning spectral clustering of the columns of V.

    Returns (labels, n_clusters). The cluster count is chosen by eigengap.
    """
    pts = np.asarray(V, dtype=np.float64).T
    n = len(pts)
    if n < 2:
        raise ValueError("need at least two samples")
    if np.ptp(pts, axis=0).max() == 0:
        return np.zeros(n, dtype=np.int64), 1
    A = self_tuning_affinity(pts)
    vals, vecs = normalized_laplacian_spectrum(A)
    C = eigengap_count(vals, c_max)
    if C == 1:
        return np.zeros(n, dtype=np.int64), 1
    emb = vecs[:, :C]
    emb = emb / np.maximum(np.linalg.norm(emb, axis=1, keepdims=True), EPS)
    km = KMeans(n_clusters=C, n_init=10, random_state=rng_seed).fit(emb)
    return canonical_labels(km.labels_), C


def canonical_labels(labels) -> np.ndarray:
    """Relabel clusters in order of first appearance."""
    labels = np.asarray(labels)
    out = np.empty(len(labels), dtype=np.int64)
    seen = {}
    for i, lab in enumerate(labels.tolist()):
        out[i] = seen.setdefault(lab, len(seen))
    return out


# -- pairwise constraints ----------------------------------------------------


def _pair(a, b):
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class ConstraintSet:
    must_links: frozenset = frozenset()
    cannot_links: frozenset = frozenset()
    triplets: tuple = ()

    def __post_init__(self):
        ml = frozenset(_pair(*p) for p in self.must_links)
        cl = frozenset(_pair(*p) for p in self.cannot_links)
        if ml & cl:
            raise ValueError(f"pairs in both must-link and cannot-link: {sorted(ml & cl)[:3]}")
        object.__setattr__(self, "must_links", ml)
        object.__setattr__(self, "cannot_links", cl)

    def __len__(self):
        return len(self.must_links) + len(self.cannot_links)

    def satisfaction(self, assignment: dict) -> float:
        """Fraction of must/cannot pairs respected by a shape_id -> cluster map."""
        ok = sum(assignment[a] == assignment[b] for a, b in self.must_links)
        ok += sum(assignment[a] != assignment[b] for a, b in self.cannot_links)
        return ok / len(self) if len(self) else 1.0


def decompose_triplets(triplets) -> ConstraintSet:
    """(a, b, c) -> must-link(a, b) and cannot-link(a, c).

    A pair voted both ways keeps the majority kind; exact ties are dropped.
    """
    must, cannot = Counter(), Counter()
    for a, b, c in triplets:
        if len({a, b, c}) != 3:
            raise ValueError(f"triplet members must be distinct: {(a, b, c)}")
        must[_pair(a, b)] += 1
        cannot[_pair(a, c)] += 1
    ml, cl, dropped = set(), set(), []
    for p in set(must) | set(cannot):
        m, c = must[p], cannot[p]
        if m > c:
            ml.add(p)
        elif c > m:
            cl.add(p)
        else:
            dropped.append(p)
    if dropped:
        log.warning("dropped %d pairs with tied must/cannot votes", len(dropped))
    return ConstraintSet(frozenset(ml), frozenset(cl), tuple(map(tuple, triplets)))


@dataclass(frozen=True)
class SimilarityMatrix:
    A: np.ndarray
    source: str = "VtV"


def similarity_from_features(V) -> SimilarityMatrix:
    """A = V^T V scaled so its largest entry is 1."""
    V = np.asarray(V, dtype=np.float64)
    A = V.T @ V
    A = (A + A.T) / 2
    m = A.max()
    return SimilarityMatrix(A / m if m > 0 else A, "VtV")


def apply_triplets(A, constraints: ConstraintSet, shape_ids) -> SimilarityMatrix:
    """A' = A + N_must - N_cannot, clamped to [0, 2]."""
    A = getattr(A, "A", A)
    Ap = np.array(A, dtype=np.float64, copy=True)
    index = {s: i for i, s in enumerate(shape_ids)}
    for links, sign in ((constraints.must_links, 1.0), (constraints.cannot_links, -1.0)):
        for a, b in links:
            i, j = index[a], index[b]
            Ap[i, j] += sign
            if i != j:
                Ap[j, i] += sign
    return SimilarityMatrix(np.clip(Ap, 0.0, 2.0), "modified")


# -- symmetric tri-factorization -------------------------------------------


@dataclass(frozen=True)
class ClusterIndicator:
    Y: np.ndarray  # (N, C)
    S: np.ndarray  # (C, C)
    labels: np.ndarray
    objective_trace: list = field(default_factory=list)


def _symnmf_objective(A, Y, S):
    R = A - Y @ S @ Y.T
    return float(np.einsum("ij,ij->", R, R))


def symnmf_cluster(A, C: int, rng_seed=0, max_iters: int = 500, tol: float = 1e-7,
                   init=None) -> ClusterIndicator:
    """min ||A - Y S Y^T||_F^2 over Y, S >= 0 by alternating multiplicative steps.

    S uses the Lee-Seung step (the problem is quadratic in S). The Y step is
    the cube-root multiplicative rule, damped geometrically towards the current
    Y whenever it would raise the objective, so the trace never increases.
    ``init`` optionally gives initial hard labels; Y then starts at their
    indicator plus a small random floor.
    """
    A = np.asarray(getattr(A, "A", A), dtype=np.float64)
    A = (A + A.T) / 2
    if C < 1:
        raise ValueError("C must be positive")
    if (A < 0).any():
        raise ValueError("similarity must be non-negative")
    N = len(A)
    rng = np.random.default_rng(rng_seed)
    scale = np.sqrt(max(A.mean(), EPS))
    Y = rng.random((N, C)) * scale + EPS
    if init is not None:
        Y = 0.1 * Y + scale * np.eye(C)[np.asarray(init) % C]
    S = np.eye(C) + 0.1 * rng.random((C, C))
    S = (S + S.T) / 2
    f = _symnmf_objective(A, Y, S)
    trace = [f]
    for _ in range(max_iters):
        YtY = Y.T @ Y
        S = S * (Y.T @ A @ Y) / (YtY @ S @ YtY + EPS)
        f_s = _symnmf_objective(A, Y, S)
        ratio = (A @ Y @ S) / (Y @ S @ YtY @ S + EPS)
        ratio = np.where(Y > 0, ratio, 1.0)
        expo, accepted = 1.0 / 3.0, False
        for _ in range(30):
            Y_new = Y * ratio**expo
            f_y = _symnmf_objective(A, Y_new, S)
            if f_y <= f_s:
                Y, f_new, accepted = Y_new, f_y, True
                break
            expo /= 2
        if not accepted:
            f_new = f_s
        trace.append(f_new)
        done = f - f_new <= tol * max(f, EPS)
        f = f_new
        if done:
            break
    labels = np.argmax(Y, axis=1)  # argmax returns the lowest index on ties
    return ClusterIndicator(Y, S, labels, trace)


# -- evaluation ---------------------------------------------------------------


def purity(assignment, ground_truth) -> float:
    """sum_c |c|/N * max_l |c & l| / |c| for aligned label sequences or id maps."""
    if isinstance(assignment, dict):
        keys = sorted(assignment)
        if set(keys) != set(ground_truth):
            raise ValueError("assignment and ground truth cover different shapes")
        a = [assignment[k] for k in keys]
        g = [ground_truth[k] for k in keys]
    else:
        a, g = list(assignment), list(ground_truth)
        if len(a) != len(g):
            raise ValueError("length mismatch")
    if not a:
        raise ValueError("empty clustering")
    table = Counter(zip(a, g))
    best = {}
    for (c, _), n in table.items():
        best[c] = max(best.get(c, 0), n)
    return sum(best.values()) / len(a)
