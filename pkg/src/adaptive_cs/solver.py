"""l1-in-DCT reconstruction from accumulated per-patch measurements.

Solves ``min_x  lam * ||dct2(x)||_1 + 0.5 * sum_s ||A_s x - y_s||^2`` where
``A_s`` applies stage ``s``'s sensing matrix to the patches it sampled. The
solver is FISTA, optionally in its monotone form (Beck & Teboulle's MFISTA).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft

from . import kernels
from .errors import ConfigError, ContractError, NumericError
from .patching import PatchGrid
from .sensing import MeasurementSet, SensingMatrix, counter_normals

_START_STREAM = 3  # Philox stream reserved for the power-iteration start vector


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 30.0
    max_iters: int = 400
    rel_tol: float = 1e-6
    power_iters: int = 50
    monotone: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"lambda must be > 0, got {self.lam}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise ConfigError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.power_iters < 1:
            raise ConfigError(f"power_iters must be >= 1, got {self.power_iters}")


@dataclass
class ReconResult:
    image: np.ndarray = field(repr=False)
    iterations_used: int
    final_objective: float
    objective_trace: list[float] = field(repr=False)
    lipschitz: float = math.nan


def dct2(img) -> np.ndarray:
    """Orthonormal 2-D type-II DCT of the whole image."""
    return fft.dctn(np.asarray(img, dtype=np.float64), type=2, norm="ortho")


def idct2(coeffs) -> np.ndarray:
    return fft.idctn(np.asarray(coeffs, dtype=np.float64), type=2, norm="ortho")


def soft_threshold(coeffs, t: float) -> np.ndarray:
    if t < 0:
        raise ContractError(f"threshold must be >= 0, got {t}")
    c = np.asarray(coeffs, dtype=np.float64)
    return np.sign(c) * np.maximum(np.abs(c) - t, 0.0)


def apply_normal(x: np.ndarray, grid: PatchGrid, operators) -> np.ndarray:
    """A^T A x for the stacked block operator."""
    out = np.zeros(grid.shape)
    for phi, idx in operators:
        v = kernels.block_forward(x, grid.p, phi, idx)
        kernels.block_adjoint_add(v, grid.p, phi, idx, out)
    return out


def estimate_lipschitz(operators, grid: PatchGrid, power_iters: int = 50) -> float:
    """Largest eigenvalue of A^T A by power iteration.

    ``operators`` is a sequence of ``(matrix, patch_indices)`` pairs, one per
    stage; matrices may be :class:`SensingMatrix` or plain arrays.
    """
    ops = [(np.asarray(getattr(phi, "entries", phi), dtype=np.float64), np.asarray(idx, dtype=np.int64)) for phi, idx in operators]
    if not ops or all(idx.size == 0 for _, idx in ops):
        raise ContractError("no measurement operator to estimate a Lipschitz constant for")
    x = counter_normals(0, _START_STREAM, 1, 0, grid.shape[0] * grid.shape[1]).reshape(grid.shape)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(power_iters):
        y = apply_normal(x, grid, ops)
        est = float(np.vdot(x, y))  # Rayleigh quotient, x has unit norm
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
    return max(est, float(np.vdot(x, apply_normal(x, grid, ops))))


def check_aligned(measurements: Sequence[MeasurementSet], matrices: Sequence[SensingMatrix], grid: PatchGrid) -> None:
    if not measurements or len(measurements) != len(matrices):
        raise ContractError(f"{len(measurements)} measurement sets vs {len(matrices)} matrices")
    for ms, phi in zip(measurements, matrices):
        if ms.stage != phi.stage or ms.m != phi.m:
            raise ContractError(f"stage {ms.stage} (m={ms.m}) paired with matrix of stage {phi.stage} (m={phi.m})")
        if phi.n != grid.n:
            raise ContractError(f"matrix has {phi.n} columns, grid patches have {grid.n} pixels")
        if phi.per_patch and phi.entries.shape[0] != grid.patch_count:
            raise ContractError(f"stage {phi.stage} matrix stack covers {phi.entries.shape[0]} patches, grid has {grid.patch_count}")
        if ms.indices.size and (ms.indices[0] < 0 or ms.indices[-1] >= grid.patch_count):
            raise ContractError(f"stage {ms.stage} references patches outside the grid")
    if len(measurements[0]) != grid.patch_count:
        raise ContractError("the first measurement set must cover every patch")


def data_term(x: np.ndarray, grid: PatchGrid, operators, grad: np.ndarray | None = None) -> float:
    """0.5 * ||Ax - y||^2; accumulates A^T(Ax - y) into ``grad`` when given."""
    total = 0.0
    if grad is None:
        for phi, idx, y in operators:
            r = kernels.block_forward(x, grid.p, phi, idx) - y
            total += 0.5 * float(np.sum(r * r))
        return total
    for phi, idx, y in operators:
        total += kernels.data_term_grad(x, grid.p, phi, idx, y, grad)
    return total


def objective(x, measurements, matrices, grid: PatchGrid, lam: float) -> float:
    ops = [(phi.entries, ms.indices, ms.values) for phi, ms in zip(matrices, measurements)]
    return lam * float(np.sum(np.abs(dct2(x)))) + data_term(np.asarray(x, dtype=np.float64), grid, ops)


def back_project(measurements, matrices, grid: PatchGrid) -> np.ndarray:
    """A^T y, assembled patch by patch."""
    out = np.zeros(grid.shape)
    for phi, ms in zip(matrices, measurements):
        kernels.block_adjoint_add(ms.values, grid.p, phi.entries, ms.indices, out)
    return out


def reconstruct(
    measurements: Sequence[MeasurementSet],
    matrices: Sequence[SensingMatrix],
    grid: PatchGrid,
    cfg: SolverConfig = SolverConfig(),
    warm_start: np.ndarray | None = None,
) -> ReconResult:
    check_aligned(measurements, matrices, grid)
    ops = [(phi.entries, ms.indices, ms.values) for phi, ms in zip(matrices, measurements)]
    lip = estimate_lipschitz([(phi, idx) for phi, idx, _ in ops], grid, cfg.power_iters)
    if not lip > 0:
        raise NumericError(f"degenerate Lipschitz estimate {lip}")
    step = 1.0 / lip
    thresh = cfg.lam * step

    if warm_start is not None:
        x = np.array(warm_start, dtype=np.float64)
        if x.shape != grid.shape:
            raise ContractError(f"warm start shape {x.shape} != image shape {grid.shape}")
    else:
        x = back_project(measurements, matrices, grid)

    def finite(arr, what):
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite {what} encountered")

    finite(x, "initial point")
    fx = cfg.lam * float(np.sum(np.abs(dct2(x)))) + data_term(x, grid, ops)
    trace = [fx]
    v = x.copy()
    t = 1.0
    it = 0
    for it in range(1, cfg.max_iters + 1):
        grad = np.zeros(grid.shape)
        data_term(v, grid, ops, grad)
        coeffs = soft_threshold(dct2(v - step * grad), thresh)
        z = idct2(coeffs)
        fz = cfg.lam * float(np.sum(np.abs(coeffs))) + data_term(z, grid, ops)
        if not math.isfinite(fz):
            raise NumericError(f"objective became non-finite at iteration {it}")
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if cfg.monotone:
            accepted = fz <= fx
            x_next, f_next = (z, fz) if accepted else (x, fx)
            v = x_next + (t / t_next) * (z - x_next) + ((t - 1.0) / t_next) * (x_next - x)
        else:
            accepted = True
            x_next, f_next = z, fz
            v = z + ((t - 1.0) / t_next) * (z - x)
        rel = abs(fx - f_next) / max(abs(fx), 1e-300)
        x, fx, t = x_next, f_next, t_next
        trace.append(fx)
        if accepted and rel < cfg.rel_tol:
            break
    finite(x, "reconstruction")
    return ReconResult(x, it, fx, trace, lip)
