import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import discriminant_oracle
from styleco.hog import hog, patch_convolve
from styleco.lineproj import LineImage, ProjectedSeed
from styleco.patches import (Patch, compute_support, preselect_kmeans, reselect_discriminant,
                             sample_patches)


def _busy_image(seed=0):
    rng = np.random.default_rng(seed)
    im = np.zeros((200, 200))
    im[::20, :] = 0.5  # background grid keeps every window above the ink floor
    for _ in range(60):
        r, c = rng.integers(0, 200, 2)
        if rng.random() < 0.5:
            im[r, max(0, c - 30) : c + 30] = 1
        else:
            im[max(0, r - 30) : r + 30, c] = 1
    return LineImage("s", 0, im)


def _seeds(points, view=0, visible=True):
    return [ProjectedSeed(i, view, (float(u), float(v)), visible) for i, (u, v) in enumerate(points)]


def test_one_patch_per_visible_interior_seed():
    img = _busy_image()
    m = hog(img.pixels)
    pts = np.random.default_rng(1).uniform(40, 160, (30, 2))
    patches = sample_patches(img, m, _seeds(pts))
    assert len(patches) == 30
    for p in patches:
        r, c, s = p.window
        assert s == 48 and r % 8 == 0 and c % 8 == 0
        assert 0 <= r and r + s <= 200 and 0 <= c and c + s <= 200
        assert p.hog.shape == (6, 6, 36)
        # snapped at most half a cell from the seed-centred window
        u, v = pts[p.seed_id]
        assert abs(c - (u - 24)) <= 4 and abs(r - (v - 24)) <= 4
        assert patch_convolve(m, p.hog)[r // 8, c // 8] == pytest.approx(1.0)
    assert len(sample_patches(img, m, _seeds(pts, visible=False))) == 0


def test_border_and_blank_patches_dropped():
    img = _busy_image()
    m = hog(img.pixels)
    assert sample_patches(img, m, _seeds([(10, 100), (100, 190)])) == []
    blank = LineImage("b", 0, np.zeros((200, 200)))
    assert sample_patches(blank, hog(blank.pixels), _seeds([(100, 100)])) == []
    with pytest.raises(ValueError):
        sample_patches(img, m, _seeds([(100, 100)]), size=50)


def _patch(i, h, shape="s"):
    return Patch(f"{shape}:v0:s{i}", shape, i, 0, (0, 0, 16), np.asarray(h, dtype=np.float64))


def test_preselect_identical_and_small_pools():
    h = np.random.default_rng(0).random((2, 2, 36))
    pats = [_patch(i, h) for i in range(3)]
    assert preselect_kmeans(pats, 1) == [pats[0]]
    assert preselect_kmeans(pats[:2], 5) == pats[:2]


def test_preselect_two_groups():
    rng = np.random.default_rng(2)
    a, b = np.zeros((2, 2, 36)), np.zeros((2, 2, 36))
    a[..., :18], b[..., 18:] = 1, 1
    pats = [_patch(i, (a if i % 2 else b) + 0.01 * rng.random((2, 2, 36))) for i in range(20)]
    reps = preselect_kmeans(pats, 2, rng_seed=3)
    assert len(reps) == 2
    assert {r.seed_id % 2 for r in reps} == {0, 1}
    # the representative is the real member closest to its group mean
    for r in reps:
        group = [p for p in pats if p.seed_id % 2 == r.seed_id % 2]
        mean = np.mean([p.hog for p in group], axis=0)
        d = [np.linalg.norm(p.hog - mean) for p in group]
        assert group[int(np.argmin(d))].patch_id == r.patch_id


def test_preselect_k50_and_deterministic():
    rng = np.random.default_rng(4)
    pats = [_patch(i, rng.random((2, 2, 36))) for i in range(120)]
    a = preselect_kmeans(pats, 50, rng_seed=9)
    b = preselect_kmeans(pats, 50, rng_seed=9)
    assert len(a) <= 50 and [p.patch_id for p in a] == [p.patch_id for p in b]


def _features():
    img = _busy_image(5)
    m = hog(img.pixels)
    pats = sample_patches(img, m, _seeds([(60, 60), (120, 100)]))
    filters = np.stack([p.hog for p in pats])
    from styleco.hog import encode_map

    other = hog(_busy_image(6).pixels)
    mat = np.stack([encode_map(m, filters), encode_map(other, filters)], axis=1)
    return {0: (mat, tuple(p.patch_id for p in pats), ("s", "t"))}


def test_support_examples():
    feats = _features()
    sup = compute_support(feats, 0.99)
    assert sup.x[0].all()  # a filter always fires on its own source image
    assert compute_support(feats, 0.0).x.all()
    assert not compute_support(feats, 1.01).x.any()


def test_discriminant_hand_example():
    # N_p = 4 patches; patch 0 is supported exactly by cluster 0
    x = np.array([[1, 1, 0, 1], [1, 0, 1, 1], [0, 1, 0, 1], [0, 0, 1, 1]])
    sel = reselect_discriminant(x, [0, 0, 1, 1], 0.07)
    assert sel.delta[0, 0] == pytest.approx(1.0)
    assert sel.thresholds[0] == pytest.approx(0.14)
    assert sel.selected[0] == (0,)
    assert sel.delta[0, 3] == pytest.approx(0.0)  # supported by all four shapes
    assert 3 not in sel.selected[0]
    with pytest.raises(ValueError):
        reselect_discriminant(np.ones((0, 3)), [], 0.07)


@given(st.integers(2, 9), st.integers(1, 12), st.integers(1, 4), st.integers(0, 10**6))
def test_discriminant_matches_loop_oracle(n, n_p, c, seed):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, (n, n_p))
    clusters = rng.integers(0, c, n)
    sel = reselect_discriminant(x, clusters, 0.07)
    delta, chosen = discriminant_oracle(x, list(clusters), 0.07)
    np.testing.assert_allclose(sel.delta, delta, atol=1e-12)
    assert {k: set(v) for k, v in sel.selected.items()} == chosen


@given(st.integers(3, 10), st.integers(2, 8), st.integers(0, 10**6))
def test_discriminant_invariant_to_order_and_relabel(n, n_p, seed):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, (n, n_p))
    clusters = rng.integers(0, 3, n)
    pids = tuple(f"p{j}" for j in range(n_p))
    from styleco.patches import SupportMatrix

    base = reselect_discriminant(SupportMatrix(x, 0.5, tuple(range(n)), pids), clusters)
    perm = rng.permutation(n)
    relabel = {0: 7, 1: 3, 2: 5}
    moved = reselect_discriminant(SupportMatrix(x[perm], 0.5, tuple(perm), pids),
                                  [relabel[c] for c in clusters[perm]])
    assert base.selected_ids == moved.selected_ids


@given(st.integers(4, 10), st.integers(0, 10**6))
def test_member_only_column_has_max_delta(n, seed):
    rng = np.random.default_rng(seed)
    clusters = rng.integers(0, 3, n)
    x = rng.integers(0, 2, (n, 6))
    labels = np.unique(clusters)
    cols = np.concatenate([x, (clusters[:, None] == labels[None]).astype(int)], axis=1)
    sel = reselect_discriminant(cols, clusters)
    for li in range(len(labels)):
        assert sel.delta[li, 6 + li] >= sel.delta[li].max() - 1e-12
