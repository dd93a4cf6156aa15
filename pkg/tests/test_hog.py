import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import conv_oracle, hog_oracle, pool_oracle
from styleco.hog import (CELL, NBINS, HogMap, convolve_bank, encode_map, encode_view, hog,
                         patch_convolve, pyramid_pool)
from styleco.lineproj import LineImage

MIRROR = [(-k) % NBINS for k in range(NBINS)]  # theta -> 180 - theta


def _cell_sums(cells):
    return cells.reshape(*cells.shape[:2], 4, NBINS).sum(2)


def test_zero_image():
    m = hog(np.zeros((32, 32)))
    assert m.shape == (4, 4)
    assert not m.cells.any()


def test_too_small_image():
    with pytest.raises(ValueError):
        hog(np.zeros((8, 40)))


def test_vertical_step_edge_matches_oracle():
    im = np.zeros((32, 32))
    im[:, 15:] = 1.0
    m = hog(im)
    np.testing.assert_allclose(m.cells, hog_oracle(im), atol=1e-12)
    sums = _cell_sums(m.cells)
    for r in range(1, 3):
        for c in (1, 2):  # interior cells touching the edge column
            assert np.argmax(sums[r, c]) == 0  # horizontal gradient, 0 degrees


@given(arrays(np.float64, (24, 32), elements=st.floats(0, 1)))
def test_hog_matches_scalar_oracle(im):
    np.testing.assert_allclose(hog(im).cells, hog_oracle(im), atol=1e-10)


@given(arrays(np.float64, (32, 40), elements=st.floats(0, 1)))
def test_hog_entries_bounded(im):
    c = hog(im).cells
    assert c.min() >= 0 and c.max() <= 1.0


@given(arrays(np.float64, (32, 32), elements=st.floats(0, 1)))
def test_mirror_permutes_bins(im):
    a = hog(im).cells.reshape(4, 4, 4, NBINS)
    b = hog(im[:, ::-1]).cells.reshape(4, 4, 4, NBINS)[:, ::-1]
    # left/right block contexts swap (TL<->TR, BL<->BR) and theta -> 180 - theta
    b = b[:, :, [1, 0, 3, 2]][..., MIRROR]
    np.testing.assert_allclose(a, b, atol=1e-12)


@given(st.lists(st.floats(0, 1), min_size=63, max_size=63), st.booleans())
def test_rotation_90_on_diagonal_images(profile, anti):
    # gradients of f(x + y) or f(x - y) lie exactly at 45 or 135 degrees, where a
    # quarter turn coincides with the mirror permutation of the 9 bins
    y, x = np.mgrid[0:32, 0:32]
    idx = (x - y + 31) if anti else (x + y)
    im = np.asarray(profile)[idx]
    a = _cell_sums(hog(im).cells)
    b = _cell_sums(hog(np.rot90(im)).cells)
    b = np.rot90(b, -1)[..., MIRROR]
    np.testing.assert_allclose(a[1:-1, 1:-1], b[1:-1, 1:-1], atol=1e-10)


def test_patch_convolve_oracle_100_cases():
    rng = np.random.default_rng(7)
    for _ in range(100):
        cells = rng.random((6, 6, 36))
        filt = rng.random((3, 3, 36))
        np.testing.assert_allclose(patch_convolve(cells, filt), conv_oracle(cells, filt), atol=1e-6)


def test_self_window_is_global_max():
    rng = np.random.default_rng(1)
    cells = rng.random((8, 9, 36))
    act = patch_convolve(HogMap(cells), HogMap(cells).window(2, 3, 4, 4))
    assert act[2, 3] == pytest.approx(1.0, abs=1e-12)
    assert np.unravel_index(np.argmax(act), act.shape) == (2, 3)


def test_zero_filter_and_too_large():
    cells = np.random.default_rng(2).random((5, 5, 36))
    assert not patch_convolve(cells, np.zeros((2, 2, 36))).any()
    with pytest.raises(ValueError):
        patch_convolve(cells, np.ones((6, 2, 36)))


@given(arrays(np.float64, (5, 5, 36), elements=st.floats(-1, 1)),
       arrays(np.float64, (2, 3, 36), elements=st.floats(-1, 1)))
def test_activations_in_unit_interval(cells, filt):
    act = patch_convolve(cells, filt)
    assert act.shape == (4, 3)
    assert np.all(np.abs(act) <= 1 + 1e-12)


def test_pool_examples():
    np.testing.assert_allclose(pyramid_pool(np.full((4, 5), 0.3)), [0.3] * 5)
    g = -np.ones((6, 6))
    g[1, 1] = 0.8
    np.testing.assert_allclose(pyramid_pool(g), [0.8, 0.8, 0, 0, 0])


@given(arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)), elements=st.floats(-1, 1)))
def test_pool_matches_region_max(act):
    np.testing.assert_allclose(pyramid_pool(act), pool_oracle(act))


def test_convolve_bank_matches_single():
    rng = np.random.default_rng(3)
    cells = rng.random((7, 7, 36))
    bank = rng.random((4, 3, 3, 36))
    stacked = convolve_bank(cells, bank)
    for k in range(4):
        np.testing.assert_allclose(stacked[k], patch_convolve(cells, bank[k]), atol=1e-12)


def _motif_image(dx=0, dy=0):
    im = np.zeros((200, 200))
    r0, c0 = 16 + dy, 16 + dx  # stays clear of windows in other quadrants
    for k in range(0, 40, 8):
        im[r0 + k, c0 : c0 + 40] = 1.0
        im[r0 : r0 + 40, c0 + k] = 1.0
    im[r0 : r0 + 40, c0:c0 + 40] = np.maximum(im[r0 : r0 + 40, c0:c0 + 40],
                                               np.eye(40)[:, ::-1])
    return im


def test_encode_view_dims_and_self_match():
    im = _motif_image()
    m = hog(im)
    filt = m.window(2, 2, 6, 6)
    v = encode_view(LineImage("s", 0, im), [filt])
    assert v.vector[0] == pytest.approx(1.0, abs=1e-6)
    rng = np.random.default_rng(0)
    bank = [HogMap(rng.random((6, 6, 36))) for _ in range(50)]
    f = encode_view(LineImage("s", 0, im), bank)
    assert f.vector.shape == (250,) and len(f.filter_ids) == 50
    assert (f.vector >= 0).all()
    blank = encode_view(LineImage("s", 0, np.zeros((200, 200))), bank)
    assert not blank.vector.any()


def test_encode_shift_tolerance():
    m = hog(_motif_image())
    filt = m.window(2, 2, 6, 6).cells
    base = encode_map(m, filt[None])
    for dx in range(0, 2 * CELL + 1, 2):
        for dy in range(0, 2 * CELL + 1, 3):
            shifted = encode_map(hog(_motif_image(dx, dy)), filt[None])
            assert np.abs(shifted - base).max() < 0.15, (dx, dy)


def test_encode_deterministic():
    im = _motif_image(3, 1)
    bank = np.random.default_rng(5).random((3, 6, 6, 36))
    assert np.array_equal(encode_map(hog(im), bank), encode_map(hog(im), bank))
