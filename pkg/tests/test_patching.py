import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptive_cs.errors import ContractError
from adaptive_cs.patching import PatchGrid, expand_mask, patchify, unpatchify


def test_single_patch_is_row_major_flattening():
    img = np.arange(64.0).reshape(8, 8)
    patches = patchify(img, 8)
    assert patches.shape == (1, 64)
    np.testing.assert_array_equal(patches[0], img.ravel())
    np.testing.assert_array_equal(unpatchify(patches, PatchGrid.for_shape((8, 8), 8)), img)


def test_patch_order_is_row_major_over_blocks():
    img = np.zeros((16, 16))
    img[:8, 8:] = 1.0  # top-right block
    patches = patchify(img, 8)
    assert patches.shape == (4, 64)
    np.testing.assert_array_equal(patches.sum(axis=1), [0, 64, 0, 0])
    grid = PatchGrid.for_shape((16, 16), 8)
    assert grid.block(1) == (0, 1)
    assert grid.index(0, 1) == 1


def test_patch_count():
    grid = PatchGrid.for_shape((128, 128), 8)
    assert (grid.rows, grid.cols, grid.patch_count, grid.n) == (16, 16, 256, 64)
    assert patchify(np.zeros((128, 128)), 8).shape == (256, 64)


@pytest.mark.parametrize("shape, p", [((10, 16), 8), ((16, 12), 8), ((16, 16), 0)])
def test_non_divisible_rejected(shape, p):
    with pytest.raises(ContractError):
        PatchGrid.for_shape(shape, p)


def test_block_index_bijection():
    grid = PatchGrid.for_shape((24, 40), 8)
    seen = {grid.block(j) for j in range(grid.patch_count)}
    assert len(seen) == grid.patch_count
    assert all(grid.index(*grid.block(j)) == j for j in range(grid.patch_count))


def test_random_round_trip_bitwise():
    img = np.random.default_rng(1).standard_normal((64, 64))
    grid = PatchGrid.for_shape(img.shape, 8)
    assert np.array_equal(unpatchify(patchify(img, 8), grid), img)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_round_trip_property(rows, cols, p, seed):
    img = np.random.default_rng(seed).uniform(-1e6, 1e6, (rows * p, cols * p))
    grid = PatchGrid.for_shape(img.shape, p)
    assert np.array_equal(unpatchify(patchify(img, p), grid), img)
    perm = np.random.default_rng(seed).permutation(grid.patch_count)
    assert np.array_equal(unpatchify(patchify(img, p)[perm], grid, perm), img)


def test_duplicate_or_missing_index_rejected():
    grid = PatchGrid.for_shape((16, 16), 8)
    patches = np.zeros((4, 64))
    with pytest.raises(ContractError):
        unpatchify(patches, grid, [0, 1, 1, 3])
    with pytest.raises(ContractError):
        unpatchify(patches[:3], grid)


def test_expand_mask_examples():
    grid = PatchGrid.for_shape((16, 16), 8)
    np.testing.assert_array_equal(expand_mask(np.ones(4), grid), np.ones((16, 16)))
    single = expand_mask(np.array([1, 0, 0, 0]), grid)
    assert single[:8, :8].all() and single.sum() == 64
    with pytest.raises(ContractError):
        expand_mask(np.ones(5), grid)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 5), st.data())
def test_expand_mask_preserves_area(rows, cols, p, data):
    grid = PatchGrid(p, rows, cols)
    bits = np.array(data.draw(st.lists(st.integers(0, 1), min_size=grid.patch_count, max_size=grid.patch_count)))
    assert expand_mask(bits, grid).sum() == bits.sum() * p * p
