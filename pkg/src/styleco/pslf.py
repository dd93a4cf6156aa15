"""Partially shared latent factor (PSLF) multi-view NMF.

Each view p is factorized as X^p ~ U^p [V_s^p; V_c] where V_c is shared by all
views. View weights pi live on the simplex and are smoothed by lam * ||pi||^2.
An optional label term beta * ||V_l - W Y||^2 + gamma * ||W||_{2,1} ties the
labeled columns of the stacked factor matrix to class centres W.

All factor updates are multiplicative (ratio of the positive and negative parts
of each block gradient), so factors stay non-negative and every block step is
a majorize-minimize step on the objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import nnls

EPS = 1e-12


@dataclass(frozen=True)
class PslfConfig:
    n_specific: int = 40
    n_common: int = 10
    lam: float = 20.0
    beta: float = 1.0
    gamma: float = 0.1
    max_iters: int = 500
    tol: float = 1e-5
    restarts: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_specific < 0 or self.n_common < 1:
            raise ValueError("need n_specific >= 0 and n_common >= 1")
        if min(self.lam, self.beta, self.gamma) < 0:
            raise ValueError("lam, beta and gamma must be non-negative")

    @property
    def n_factors(self) -> int:
        return self.n_specific + self.n_common

    @property
    def eta(self) -> float:
        return self.n_common / self.n_factors

    @classmethod
    def from_eta(cls, n_factors: int, eta: float, **kw) -> "PslfConfig":
        if not 0 < eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        kc = min(n_factors, max(1, int(round(eta * n_factors))))
        return cls(n_specific=n_factors - kc, n_common=kc, **kw)


@dataclass
class PslfModel:
    U: list
    Vs: list
    Vc: np.ndarray
    pi: np.ndarray
    objective_trace: list = field(default_factory=list)
    config: PslfConfig = field(default_factory=PslfConfig)

    @property
    def n_views(self) -> int:
        return len(self.U)

    def V(self, p: int) -> np.ndarray:
        return np.vstack([self.Vs[p], self.Vc])

    def fused(self) -> np.ndarray:
        """Stacked [V_s^1; ...; V_s^P; V_c], shape (K_s * P + K_c, N)."""
        return np.vstack(list(self.Vs) + [self.Vc])

    def metric(self) -> np.ndarray:
        """G = sum_p pi_p B_p^T U^p^T U^p B_p, with B_p selecting [V_s^p; V_c] from the stack.

        (v_i - v_j)^T G (v_i - v_j) is the pi-weighted squared distance between
        the reconstructions of shapes i and j.
        """
        Ks, Kc, P = self.Vs[0].shape[0], self.Vc.shape[0], self.n_views
        D = Ks * P + Kc
        G = np.zeros((D, D))
        for p in range(P):
            idx = np.r_[p * Ks : (p + 1) * Ks, Ks * P : D]
            G[np.ix_(idx, idx)] += self.pi[p] * (self.U[p].T @ self.U[p])
        return (G + G.T) / 2

    def metric_root(self) -> np.ndarray:
        """Symmetric square root G^(1/2) of the basis-induced metric."""
        w, Q = np.linalg.eigh(self.metric())
        return (Q * np.sqrt(np.maximum(w, 0.0))) @ Q.T

    def embedding(self) -> np.ndarray:
        """Fused features in the geometry of the learned bases: G^(1/2) V."""
        return self.metric_root() @ self.fused()

    def residuals(self, X) -> np.ndarray:
        return np.array([_sqnorm(X[p] - self.U[p] @ self.V(p)) for p in range(self.n_views)])


def _sqnorm(a) -> float:
    return float(np.einsum("ij,ij->", a, a))


def update_view_weights(residuals, lam: float) -> np.ndarray:
    """argmin_pi sum_p pi_p R_p + lam * sum_p pi_p^2 over the probability simplex.

    pi_p = max(0, (nu - R_p) / (2 lam)) with nu found by bisection.
    """
    R = np.asarray(residuals, dtype=np.float64)
    P = len(R)
    if lam <= 0:
        pi = (R == R.min()).astype(np.float64)
        return pi / pi.sum()
    if np.isinf(lam) or np.ptp(R) == 0:
        return np.full(P, 1.0 / P)
    total = lambda nu: np.maximum(0.0, (nu - R) / (2 * lam)).sum()  # noqa: E731
    lo, hi = R.min(), R.max() + 2 * lam
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    pi = np.maximum(0.0, (0.5 * (lo + hi) - R) / (2 * lam))
    return pi / pi.sum()


def _check_inputs(X, cfg):
    X = [np.asarray(x, dtype=np.float64) for x in X]
    if not X:
        raise ValueError("need at least one view")
    N = X[0].shape[1]
    for x in X:
        if x.shape[1] != N:
            raise ValueError("all views need the same number of columns")
        if (x < 0).any():
            raise ValueError("input features must be non-negative")
    if cfg.n_factors > min(x.shape[0] for x in X):
        raise ValueError("n_specific + n_common exceeds the smallest view dimension")
    return X


def init_factors(X, cfg: PslfConfig, rng):
    """Uniform(0,1) factors scaled by sqrt(mean(X^p) / K)."""
    K, N = cfg.n_factors, X[0].shape[1]
    scales = [np.sqrt(max(x.mean(), EPS) / K) for x in X]
    U = [rng.random((x.shape[0], K)) * s for x, s in zip(X, scales)]
    Vs = [rng.random((cfg.n_specific, N)) * s for s in scales]
    Vc = rng.random((cfg.n_common, N)) * float(np.mean(scales))
    return U, Vs, Vc


def _l21(W) -> float:
    return float(np.linalg.norm(W, axis=1).sum())


class _Problem:
    """Objective and block updates shared by the unsupervised and labeled fits."""

    def __init__(self, X, cfg, Y=None):
        self.X = X
        self.cfg = cfg
        self.P = len(X)
        self.Ks, self.Kc = cfg.n_specific, cfg.n_common
        self.Y = None if Y is None else np.asarray(Y, dtype=np.float64)
        self.labeled = self.Y is not None and cfg.beta > 0
        self.nl = 0 if self.Y is None else self.Y.shape[1]

    def objective(self, U, Vs, Vc, pi, W=None):
        R = self.residual_vector(U, Vs, Vc)
        f = float(pi @ R) + self.cfg.lam * float(pi @ pi)
        if self.labeled:
            V = np.vstack(list(Vs) + [Vc])
            f += self.cfg.beta * _sqnorm(V[:, : self.nl] - W @ self.Y) + self.cfg.gamma * _l21(W)
        return f, R

    def residual_vector(self, U, Vs, Vc):
        return np.array([
            _sqnorm(self.X[p] - U[p] @ np.vstack([Vs[p], Vc])) for p in range(self.P)
        ])

    def step(self, U, Vs, Vc, pi, W=None):
        """One sweep: codes V_s, V_c (and W) first, then bases U, as in Lee-Seung."""
        X, beta, nl, Ks = self.X, self.cfg.beta, self.nl, self.Ks
        WY = W @ self.Y if self.labeled else None
        if Ks:
            for p in range(self.P):
                Us = U[p][:, :Ks]
                R = U[p] @ np.vstack([Vs[p], Vc])
                if not self.labeled:
                    Vs[p] *= (Us.T @ X[p]) / (Us.T @ R + EPS)
                    continue
                rows = slice(p * Ks, (p + 1) * Ks)
                num = pi[p] * (Us.T @ X[p])
                den = pi[p] * (Us.T @ R)
                num[:, :nl] += beta * WY[rows]
                den[:, :nl] += beta * Vs[p][:, :nl]
                Vs[p] *= np.where(den > 0, num / (den + EPS), 1.0)
        num = np.zeros_like(Vc)
        den = np.zeros_like(Vc)
        for p in range(self.P):
            if pi[p] == 0:
                continue
            Uc = U[p][:, Ks:]
            num += pi[p] * (Uc.T @ X[p])
            den += pi[p] * (Uc.T @ (U[p] @ np.vstack([Vs[p], Vc])))
        if self.labeled:
            rows = slice(self.P * Ks, None)
            num[:, :nl] += beta * WY[rows]
            den[:, :nl] += beta * Vc[:, :nl]
        Vc *= np.where(den > 0, num / (den + EPS), 1.0)
        if self.labeled:
            W = self.update_W(Vs, Vc, W)
        for p in range(self.P):
            Vp = np.vstack([Vs[p], Vc])
            U[p] *= (X[p] @ Vp.T) / (U[p] @ (Vp @ Vp.T) + EPS)
        return U, Vs, Vc, W

    def update_W(self, Vs, Vc, W):
        """Multiplicative step on beta||V_l - WY||^2 + gamma||W||_21.

        ||w_r|| is majorized by ||w_r||^2 / (2||w_r^old||) + const, which keeps
        the step monotone.
        """
        V_l = np.vstack(list(Vs) + [Vc])[:, : self.nl]
        beta, gamma, Y = self.cfg.beta, self.cfg.gamma, self.Y
        norms = np.linalg.norm(W, axis=1, keepdims=True)
        shrink = np.divide(gamma, norms, out=np.zeros_like(norms), where=norms > 0)
        return W * (beta * V_l @ Y.T) / (beta * W @ (Y @ Y.T) + 0.5 * shrink * W + EPS)


def _run(problem: _Problem, U, Vs, Vc, W=None):
    cfg = problem.cfg
    pi = np.full(problem.P, 1.0 / problem.P)
    f, R = problem.objective(U, Vs, Vc, pi, W)
    trace = [f]
    for _ in range(cfg.max_iters):
        U, Vs, Vc, W = problem.step(U, Vs, Vc, pi, W)
        R = problem.residual_vector(U, Vs, Vc)
        pi = update_view_weights(R, cfg.lam)
        f_new, _ = problem.objective(U, Vs, Vc, pi, W)
        trace.append(f_new)
        done = abs(f - f_new) <= cfg.tol * max(abs(f), EPS)
        f = f_new
        if done:
            break
    return PslfModel(U, Vs, Vc, pi, trace, cfg), W


def class_means(V_l, Y):
    Y = np.asarray(Y, dtype=np.float64)
    counts = np.maximum(Y.sum(1), 1.0)
    return (V_l @ Y.T) / counts


def fit_unsupervised(X, cfg: PslfConfig = PslfConfig(), init=None) -> PslfModel:
    """Fit the view-weighted PSLF objective. Best of ``cfg.restarts`` starts."""
    X = _check_inputs(X, cfg)
    return _fit(X, cfg, None, init)[0]


def _fit(X, cfg, Y, init):
    problem = _Problem(X, cfg, Y)
    rng = np.random.default_rng(cfg.rng_seed)
    best = None
    starts = 1 if init is not None else max(1, cfg.restarts)
    for _ in range(starts):
        if init is not None:
            U, Vs, Vc = (
                [u.copy() for u in init[0]], [v.copy() for v in init[1]], init[2].copy()
            )
        else:
            U, Vs, Vc = init_factors(X, cfg, rng)
        W = None
        if problem.labeled:
            V = np.vstack(list(Vs) + [Vc])
            W = class_means(V[:, : problem.nl], Y) + EPS
        model, W = _run(problem, U, Vs, Vc, W)
        if best is None or model.objective_trace[-1] < best[0].objective_trace[-1]:
            best = (model, W)
    return best


def fit_labeled(X, Y, cfg: PslfConfig = PslfConfig(), init=None):
    """Label-constrained fit; the first Y.shape[1] columns of every X^p are labeled.

    Returns (model, W) with W of shape (K_s * P + K_c, C).
    """
    X = _check_inputs(X, cfg)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 2:
        raise ValueError("need at least two classes")
    if Y.shape[1] > X[0].shape[1]:
        raise ValueError("more labels than shapes")
    if not np.allclose(Y.sum(0), 1) or not np.isin(Y, (0, 1)).all():
        raise ValueError("label matrix columns must be one-hot")
    model, W = _fit(X, cfg, Y, init)
    if W is None:  # beta == 0: label term absent, W taken from the final factors
        W = class_means(model.fused()[:, : Y.shape[1]], Y)
    return model, W


def one_hot(labels, n_classes=None) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    C = int(labels.max()) + 1 if n_classes is None else n_classes
    Y = np.zeros((C, len(labels)))
    Y[labels, np.arange(len(labels))] = 1
    return Y


@dataclass(frozen=True)
class LabelPrediction:
    scores: np.ndarray  # (C, n)
    labels: np.ndarray  # argmax, lowest index on ties
    confident: np.ndarray  # False where the score column is all zero


def predict_labels(W, V_u) -> LabelPrediction:
    """Non-negative least squares scores y >= 0 minimizing ||v - W y|| per column."""
    W = np.asarray(W, dtype=np.float64)
    V_u = np.asarray(V_u, dtype=np.float64).reshape(W.shape[0], -1)
    if not np.any(W):
        raise ValueError("degenerate basis: W is all zero")
    scores = np.zeros((W.shape[1], V_u.shape[1]))
    for j in range(V_u.shape[1]):
        scores[:, j] = nnls(W, V_u[:, j])[0]
    labels = np.argmax(scores, axis=0)
    return LabelPrediction(scores, labels, scores.max(axis=0) > 0)


def with_seed(cfg: PslfConfig, seed: int) -> PslfConfig:
    return replace(cfg, rng_seed=seed)
