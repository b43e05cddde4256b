"""Pure numpy versions of the block-operator kernels (same signatures as ``_kernels``)."""
import numpy as np


def _patch_view(x, p):
    h, w = x.shape
    # (row_block, col_block, p, p) view; writes go straight through to ``x``
    return x.reshape(h // p, p, w // p, p).swapaxes(1, 2)


def _mats(phi, idx):
    return phi[np.zeros_like(idx)] if phi.shape[0] == 1 else phi[idx]


def block_forward(x, p, phi, idx):
    rb, cb = np.divmod(idx, x.shape[1] // p)
    rows = _patch_view(x, p)[rb, cb].reshape(len(idx), p * p)
    return np.einsum("kmn,kn->km", _mats(phi, idx), rows)


def block_adjoint_add(v, p, phi, idx, out):
    rb, cb = np.divmod(idx, out.shape[1] // p)
    back = np.einsum("kmn,km->kn", _mats(phi, idx), v)
    _patch_view(out, p)[rb, cb] += back.reshape(-1, p, p)


def data_term_grad(x, p, phi, idx, y, grad):
    res = block_forward(x, p, phi, idx) - y
    block_adjoint_add(res, p, phi, idx, grad)
    return 0.5 * float(np.sum(res * res))
