"""Kernel backend selection.

The compiled extension ``adaptive_cs._kernels`` is used when it was built;
otherwise the numpy fallback is used. Set ``ADAPTIVE_CS_KERNELS=python`` to
force the fallback, or ``=compiled`` to fail loudly if the extension is absent.
"""
from __future__ import annotations

import importlib
import os

import numpy as np

from . import _kernels_py

BACKENDS = ("compiled", "python")


def load_backend(name: str | None = None):
    """Return the kernel module for ``name`` (``None`` means auto)."""
    if name == "python":
        return _kernels_py
    try:
        return importlib.import_module("adaptive_cs._kernels")
    except ImportError:
        if name == "compiled":
            raise
        return _kernels_py


_choice = os.environ.get("ADAPTIVE_CS_KERNELS", "").strip().lower() or None
if _choice not in (None, *BACKENDS):
    raise ImportError(f"ADAPTIVE_CS_KERNELS must be one of {BACKENDS}, got {_choice!r}")
_impl = load_backend(_choice)
BACKEND = "python" if _impl is _kernels_py else "compiled"


def _prep(x, p, phi, idx):
    x = np.ascontiguousarray(x, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim == 2:
        phi = phi[None]
    phi = np.ascontiguousarray(phi)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    h, w = x.shape
    if p < 1 or h % p or w % p or phi.shape[2] != p * p:
        raise ValueError(f"image {h}x{w}, patch {p} and matrix width {phi.shape[2]} are inconsistent")
    n_patches = (h // p) * (w // p)
    if phi.shape[0] not in (1, n_patches):
        raise ValueError(f"matrix stack has {phi.shape[0]} entries for {n_patches} patches")
    if idx.size and (idx.min() < 0 or idx.max() >= n_patches):
        raise ValueError("patch index out of range")
    return x, phi, idx


def block_forward(x, p, phi, idx, impl=None):
    """Measure patches ``idx`` of image ``x``: returns ``(len(idx), m)``."""
    x, phi, idx = _prep(x, int(p), phi, idx)
    return (impl or _impl).block_forward(x, int(p), phi, idx)


def block_adjoint_add(v, p, phi, idx, out, impl=None):
    """``out[patch j] += phi_j.T @ v[k]`` for each ``j = idx[k]`` (in place)."""
    if not (isinstance(out, np.ndarray) and out.dtype == np.float64 and out.flags.c_contiguous):
        raise ValueError("out must be a C-contiguous float64 array")
    _, phi, idx = _prep(out, int(p), phi, idx)
    v = np.ascontiguousarray(v, dtype=np.float64).reshape(len(idx), phi.shape[1])
    (impl or _impl).block_adjoint_add(v, int(p), phi, idx, out)


def data_term_grad(x, p, phi, idx, y, grad, impl=None):
    """Accumulate ``A^T (A x - y)`` into ``grad`` and return ``0.5 * ||A x - y||^2``."""
    if not (isinstance(grad, np.ndarray) and grad.dtype == np.float64 and grad.flags.c_contiguous):
        raise ValueError("grad must be a C-contiguous float64 array")
    x, phi, idx = _prep(x, int(p), phi, idx)
    y = np.ascontiguousarray(y, dtype=np.float64).reshape(len(idx), phi.shape[1])
    return (impl or _impl).data_term_grad(x, int(p), phi, idx, y, grad)
