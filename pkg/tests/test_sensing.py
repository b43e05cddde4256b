import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptive_cs.errors import ContractError
from adaptive_cs.patching import PatchGrid, patchify
from adaptive_cs.sensing import (
    MeasurementSet,
    NoiseSpec,
    SensingMatrix,
    adjoint_apply,
    counter_normals,
    gen_matrix,
    gen_stage_matrix,
    measure_patch,
    measure_stage,
)


def test_matrix_is_deterministic_and_stage_keyed():
    a = gen_matrix(42, 1, 16, 64)
    b = gen_matrix(42, 1, 16, 64)
    assert np.array_equal(a.entries, b.entries)
    assert not np.allclose(a.entries, gen_matrix(42, 2, 16, 64).entries)
    assert not np.allclose(a.entries, gen_matrix(43, 1, 16, 64).entries)
    assert not np.allclose(a.entries, gen_matrix(42, 1, 16, 64, patch=1).entries)
    assert (a.stage, a.m, a.n, a.seed) == (1, 16, 64, 42)


def test_stream_prefix_and_moments():
    # element e depends only on the key and e, never on the draw length
    assert np.array_equal(counter_normals(0, 1, 1, 0, 3), counter_normals(0, 1, 1, 0, 5)[:3])
    z = counter_normals(0, 1, 1, 0, 100_000)
    assert abs(z.mean()) < 0.02 and abs(z.std() - 1) < 0.01


def test_entry_depends_on_position_not_shape():
    # element (r, c) consumes the same counter words whatever m is, for equal n
    small = gen_matrix(5, 3, 4, 64).entries * np.sqrt(4)
    big = gen_matrix(5, 3, 8, 64).entries * np.sqrt(8)
    np.testing.assert_allclose(small, big[:4], rtol=1e-15, atol=0)


@pytest.mark.parametrize("m, n", [(0, 64), (65, 64)])
def test_bad_dimensions(m, n):
    with pytest.raises(ContractError):
        gen_matrix(0, 1, m, n)


def test_variance():
    e = gen_matrix(9, 1, 64, 64).entries
    assert abs(e.var() * 64 - 1) < 0.05


def test_norm_preservation_monte_carlo():
    rng = np.random.default_rng(0)
    ratios = []
    for t in range(1000):
        z = np.zeros(64)
        z[rng.choice(64, 4, replace=False)] = rng.standard_normal(4)
        z /= np.linalg.norm(z)
        phi = gen_matrix(1, 1, 32, 64, patch=t)
        ratios.append(np.sum(measure_patch(phi, z) ** 2))
    ratios = np.array(ratios)
    assert 0.9 <= ratios.mean() <= 1.1
    assert np.mean((ratios > 0.3) & (ratios < 1.9)) >= 0.95


def test_measure_patch_examples():
    phi = gen_matrix(3, 1, 8, 64)
    np.testing.assert_array_equal(measure_patch(phi, np.zeros(64)), np.zeros(8))
    x = np.random.default_rng(2).standard_normal(64)
    np.testing.assert_array_equal(measure_patch(SensingMatrix.identity(64), x), x)
    with pytest.raises(ContractError):
        measure_patch(phi, np.zeros(63))


@settings(max_examples=30, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.integers(0, 2**32 - 1))
def test_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    x1, x2 = rng.uniform(0, 255, (2, 64))
    phi = gen_matrix(seed, 1, 16, 64)
    lhs = measure_patch(phi, a * x1 + b * x2)
    rhs = a * measure_patch(phi, x1) + b * measure_patch(phi, x2)
    scale = max(1.0, np.abs(lhs).max())
    assert np.abs(lhs - rhs).max() <= 1e-9 * scale


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_adjoint_identity(m, seed):
    rng = np.random.default_rng(seed)
    phi = gen_matrix(seed, 2, m, 64)
    x, v = rng.standard_normal(64), rng.standard_normal(m)
    lhs = measure_patch(phi, x) @ v
    rhs = x @ adjoint_apply(phi, v)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_adjoint_examples():
    phi = gen_matrix(0, 1, 5, 64)
    np.testing.assert_array_equal(adjoint_apply(phi, np.zeros(5)), np.zeros(64))
    v = np.arange(64.0)
    np.testing.assert_array_equal(adjoint_apply(SensingMatrix.identity(64), v), v)
    with pytest.raises(ContractError):
        adjoint_apply(phi, np.zeros(4))


def test_measure_stage_subsets():
    img = np.random.default_rng(4).uniform(0, 255, (32, 32))
    grid = PatchGrid.for_shape(img.shape, 8)
    phi = gen_stage_matrix(1, 1, 6, 64, grid.patch_count)
    full = measure_stage(phi, img, range(grid.patch_count))
    assert len(full) == grid.patch_count
    empty = measure_stage(phi, img, set())
    assert len(empty) == 0 and empty.sampled_patches == set()
    part = measure_stage(phi, img, {9, 2, 14})
    assert part.sampled_patches == {2, 9, 14}
    patches = patchify(img, 8)
    for j in (2, 9, 14):
        assert np.array_equal(part[j], measure_patch(phi, patches[j], patch_index=j))
        assert np.array_equal(part[j], full[j])
    assert 3 not in part
    with pytest.raises(KeyError):
        part[3]
    with pytest.raises(ContractError):
        measure_stage(phi, img, {16})
    with pytest.raises(ContractError):
        measure_stage(gen_stage_matrix(1, 1, 6, 64, 4), img, {0})


def test_measure_stage_matches_masked_image():
    # measuring E_a * x and dropping zero blocks gives the same vectors
    img = np.random.default_rng(5).uniform(0, 255, (16, 24))
    grid = PatchGrid.for_shape(img.shape, 8)
    phi = gen_stage_matrix(2, 2, 10, 64, grid.patch_count)
    sel = [1, 4]
    bits = np.zeros(grid.patch_count)
    bits[sel] = 1
    from adaptive_cs.patching import expand_mask

    masked = measure_stage(phi, img * expand_mask(bits, grid), range(grid.patch_count))
    part = measure_stage(phi, img, sel)
    for j in range(grid.patch_count):
        if j in sel:
            np.testing.assert_allclose(masked[j], part[j], rtol=0, atol=1e-12)
        else:
            assert not masked[j].any()


def test_stage_matrix_is_order_independent():
    stack = gen_stage_matrix(8, 3, 5, 64, 6)
    for j in (5, 0, 3):
        assert np.array_equal(stack.block(j), gen_matrix(8, 3, 5, 64, patch=j).entries)


def test_noise():
    img = np.full((16, 16), 50.0)
    grid = PatchGrid.for_shape(img.shape, 8)
    phi = gen_stage_matrix(1, 1, 32, 64, grid.patch_count)
    clean = measure_stage(phi, img, range(4))
    a = measure_stage(phi, img, range(4), NoiseSpec(sigma=2.0, seed=1))
    b = measure_stage(phi, img, [3, 1], NoiseSpec(sigma=2.0, seed=1))
    assert np.array_equal(a[3], b[3])  # keyed per patch, not by position
    resid = a.values - clean.values
    assert 1.5 < resid.std() < 2.5
    assert np.array_equal(measure_stage(phi, img, range(4), NoiseSpec(0.0, 1)).values, clean.values)
    assert np.array_equal(a[1], measure_patch(phi, np.full(64, 50.0), NoiseSpec(2.0, 1), patch_index=1))
    with pytest.raises(ContractError):
        NoiseSpec(sigma=-1)


def test_measurement_set_lookup():
    ms = MeasurementSet(2, 2, 0, [1, 5], [[1, 2], [3, 4]])
    assert ms.as_dict()[5].tolist() == [3, 4]
    assert 1 in ms and 2 not in ms
