import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import best_ncut, purity_oracle
from styleco.cluster import (ConstraintSet, apply_triplets, decompose_triplets, purity,
                             self_tuning_affinity, similarity_from_features, spectral_cluster,
                             symnmf_cluster)


def _blobs(rng, n=20, spread=0.01, sep=1.0, dim=5):
    a = rng.normal(0, spread, (n, dim))
    b = rng.normal(0, spread, (n, dim)) + sep
    return np.vstack([a, b]).T, np.r_[np.zeros(n, int), np.ones(n, int)]


def test_spectral_two_blobs():
    rng = np.random.default_rng(0)
    V, truth = _blobs(rng)
    labels, C = spectral_cluster(V)
    assert C == 2
    assert purity(labels, truth) == 1.0


def test_spectral_blobs_agree_with_exhaustive_ncut():
    rng = np.random.default_rng(1)
    V, truth = _blobs(rng)
    labels, C = spectral_cluster(V)
    sub = np.r_[0:4, 20:24]
    cut = best_ncut(self_tuning_affinity(V.T)[np.ix_(sub, sub)])
    assert C == 2
    assert purity(labels[sub], cut.astype(int)) == 1.0 and purity(cut.astype(int), truth[sub]) == 1.0


def test_spectral_identical_points_and_errors():
    labels, C = spectral_cluster(np.ones((3, 10)))
    assert C == 1 and not labels.any()
    with pytest.raises(ValueError):
        spectral_cluster(np.ones((3, 1)))


def test_spectral_deterministic_and_scale_invariant():
    rng = np.random.default_rng(2)
    V = np.hstack([rng.normal(c, 0.3, (4, 10)) for c in (0, 3, 6)])
    l1, c1 = spectral_cluster(V, rng_seed=5)
    l2, c2 = spectral_cluster(V, rng_seed=5)
    np.testing.assert_array_equal(l1, l2)
    for s in (1e-3, 7.5, 1e4):
        ls, cs = spectral_cluster(V * s, rng_seed=5)
        assert cs == c1
        np.testing.assert_array_equal(ls, l1)


def test_apply_triplets_examples():
    A = np.full((3, 3), 0.3)
    ids = ["s0", "s1", "s2"]
    np.testing.assert_array_equal(apply_triplets(A, ConstraintSet(), ids).A, A)
    m = apply_triplets(A, ConstraintSet(must_links={("s0", "s1")}), ids).A
    assert m[0, 1] == m[1, 0] == pytest.approx(1.3)
    c = apply_triplets(A, ConstraintSet(cannot_links={("s2", "s0")}), ids).A
    assert c[0, 2] == c[2, 0] == 0.0
    assert c[0, 1] == 0.3
    with pytest.raises(ValueError):
        ConstraintSet(must_links={("a", "b")}, cannot_links={("b", "a")})


def test_decompose_triplets_rules(caplog):
    cs = decompose_triplets([("s1", "s2", "s3")])
    assert cs.must_links == {("s1", "s2")} and cs.cannot_links == {("s1", "s3")}
    cs = decompose_triplets([("s1", "s2", "s3"), ("s3", "s2", "s1")])
    assert ("s1", "s3") in cs.cannot_links and ("s1", "s3") not in cs.must_links
    with caplog.at_level(logging.WARNING):
        cs = decompose_triplets([("s1", "s2", "s3"), ("s1", "s3", "s2")])
    assert len(cs) == 0 and "tied" in caplog.text
    cs = decompose_triplets([("a", "b", "c"), ("b", "a", "c")])
    assert cs.must_links == {("a", "b")}
    with pytest.raises(ValueError):
        decompose_triplets([("a", "a", "b")])


def test_symnmf_block_diagonal_and_identity():
    A = np.zeros((10, 10))
    A[:4, :4] = 1
    A[4:, 4:] = 1
    ind = symnmf_cluster(A, 2, rng_seed=0)
    assert purity(ind.labels, [0] * 4 + [1] * 6) == 1.0
    assert len(set(ind.labels[:4])) == 1 and ind.labels[0] != ind.labels[5]
    eye = symnmf_cluster(np.eye(5), 5, rng_seed=0, max_iters=5000, tol=0)
    assert eye.objective_trace[-1] < 1e-3
    assert sorted(eye.labels) == list(range(5))


def test_symnmf_monotone_nonnegative():
    for seed in range(200):
        rng = np.random.default_rng(seed)
        N = int(rng.integers(4, 20))
        B = rng.random((N, N))
        ind = symnmf_cluster((B + B.T) / 2, int(rng.integers(2, 5)), rng_seed=seed, max_iters=50)
        t = np.asarray(ind.objective_trace)
        assert np.all(t[1:] <= t[:-1] * (1 + 1e-12))
        assert ind.Y.min() >= 0 and ind.S.min() >= 0


def test_symnmf_rejects_negative():
    with pytest.raises(ValueError):
        symnmf_cluster(-np.eye(3), 2)


def test_constraints_satisfied_on_planted_blocks():
    rng = np.random.default_rng(3)
    sizes = [10, 10, 10]
    truth = np.repeat(np.arange(3), sizes)
    N = len(truth)
    ids = [f"s{i}" for i in range(N)]
    V = rng.random((6, N)) * 0.5
    for k in range(3):
        V[2 * k : 2 * k + 2, truth == k] += 0.6
    A = similarity_from_features(V)
    pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]
    chosen = rng.choice(len(pairs), size=int(0.1 * len(pairs)), replace=False)
    ml = {(ids[pairs[c][0]], ids[pairs[c][1]]) for c in chosen if truth[pairs[c][0]] == truth[pairs[c][1]]}
    cl = {(ids[pairs[c][0]], ids[pairs[c][1]]) for c in chosen if truth[pairs[c][0]] != truth[pairs[c][1]]}
    cs = ConstraintSet(ml, cl)
    ind = symnmf_cluster(apply_triplets(A, cs, ids), 3, rng_seed=0)
    assert cs.satisfaction(dict(zip(ids, ind.labels))) >= 0.9


def test_purity_examples():
    assign = {"a": 0, "b": 0, "c": 0, "d": 1, "e": 1}
    truth = {"a": "x", "b": "x", "d": "x", "c": "y", "e": "y"}
    assert purity(assign, truth) == pytest.approx(0.6)
    assert purity([0, 0, 1], ["p", "p", "q"]) == 1.0
    with pytest.raises(ValueError):
        purity([0], [0, 1])


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 3)), min_size=1, max_size=40),
       st.permutations(range(5)), st.permutations(range(4)))
def test_purity_relabel_invariant_and_oracle(pairs, pa, pt):
    a = [p[0] for p in pairs]
    t = [p[1] for p in pairs]
    base = purity(a, t)
    assert base == pytest.approx(purity_oracle(a, t))
    assert purity([pa[x] for x in a], [pt[x] for x in t]) == pytest.approx(base)
    assert 0 < base <= 1


def test_purity_random_floor():
    rng = np.random.default_rng(4)
    truth = np.repeat(np.arange(4), 10)
    vals = [purity(rng.integers(0, 4, len(truth)), truth) for _ in range(1000)]
    assert np.mean(vals) >= 1 / 4


def test_symnmf_warm_start_keeps_block_partition():
    A = np.zeros((9, 9))
    A[:3, :3] = A[3:6, 3:6] = A[6:, 6:] = 1
    init = np.repeat([2, 0, 1], 3)
    ind = symnmf_cluster(A, 3, rng_seed=1, init=init)
    np.testing.assert_array_equal(ind.labels, init)
    t = np.asarray(ind.objective_trace)
    assert np.all(t[1:] <= t[:-1])
