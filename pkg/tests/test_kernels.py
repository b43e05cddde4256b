import importlib

import numpy as np
import pytest

from adaptive_cs import _kernels_py, kernels

try:
    compiled = importlib.import_module("adaptive_cs._kernels")
except ImportError:  # pragma: no cover
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def _case(seed, q_shared):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 255, (24, 32))
    n_patches = 12
    phi = rng.standard_normal((1 if q_shared else n_patches, 7, 64))
    idx = np.sort(rng.choice(n_patches, 5, replace=False))
    y = rng.standard_normal((5, 7))
    return x, phi, idx, y


@needs_ext
@pytest.mark.parametrize("shared", [True, False])
def test_backends_agree(shared):
    x, phi, idx, y = _case(0, shared)
    f_c = kernels.block_forward(x, 8, phi, idx, impl=compiled)
    f_p = kernels.block_forward(x, 8, phi, idx, impl=_kernels_py)
    np.testing.assert_allclose(f_c, f_p, rtol=1e-12, atol=1e-9)
    out_c, out_p = np.zeros_like(x), np.zeros_like(x)
    kernels.block_adjoint_add(y, 8, phi, idx, out_c, impl=compiled)
    kernels.block_adjoint_add(y, 8, phi, idx, out_p, impl=_kernels_py)
    np.testing.assert_allclose(out_c, out_p, rtol=1e-12, atol=1e-12)
    g_c, g_p = np.zeros_like(x), np.zeros_like(x)
    v_c = kernels.data_term_grad(x, 8, phi, idx, y, g_c, impl=compiled)
    v_p = kernels.data_term_grad(x, 8, phi, idx, y, g_p, impl=_kernels_py)
    assert v_c == pytest.approx(v_p, rel=1e-12)
    np.testing.assert_allclose(g_c, g_p, rtol=1e-12, atol=1e-9)


@pytest.mark.parametrize("impl", [_kernels_py, compiled], ids=["python", "compiled"])
def test_against_dense(impl):
    if impl is None:
        pytest.skip("compiled kernels not built")
    x, phi, idx, y = _case(1, False)
    patches = x.reshape(3, 8, 4, 8).swapaxes(1, 2).reshape(12, 64)
    dense = np.einsum("kmn,kn->km", phi[idx], patches[idx])
    np.testing.assert_allclose(kernels.block_forward(x, 8, phi, idx, impl=impl), dense, rtol=1e-12)
    g = np.zeros_like(x)
    val = kernels.data_term_grad(x, 8, phi, idx, y, g, impl=impl)
    r = dense - y
    assert val == pytest.approx(0.5 * np.sum(r * r), rel=1e-12)
    gp = np.zeros((12, 64))
    gp[idx] = np.einsum("kmn,km->kn", phi[idx], r)
    np.testing.assert_allclose(g, gp.reshape(3, 4, 8, 8).swapaxes(1, 2).reshape(24, 32), rtol=1e-10, atol=1e-9)


def test_adjoint_accumulates():
    x, phi, idx, y = _case(2, True)
    out = np.ones_like(x)
    kernels.block_adjoint_add(y, 8, phi, idx, out)
    ref = np.zeros_like(x)
    kernels.block_adjoint_add(y, 8, phi, idx, ref)
    np.testing.assert_allclose(out, ref + 1.0, rtol=0, atol=1e-12)


def test_validation():
    x, phi, idx, y = _case(3, False)
    with pytest.raises(ValueError):
        kernels.block_forward(x, 8, phi[:5], idx)
    with pytest.raises(ValueError):
        kernels.block_forward(x, 8, phi, [12])
    with pytest.raises(ValueError):
        kernels.block_forward(x, 7, phi, idx)
    with pytest.raises(ValueError):
        kernels.block_adjoint_add(y, 8, phi, idx, np.zeros((24, 32), dtype=np.float32))
    with pytest.raises(ValueError):
        kernels.data_term_grad(x, 8, phi, idx, y, np.zeros((32, 24)).T)


def test_backend_selection(monkeypatch):
    assert kernels.load_backend("python") is _kernels_py
    assert kernels.BACKEND in kernels.BACKENDS
    if compiled is not None:
        assert kernels.load_backend(None) is compiled
