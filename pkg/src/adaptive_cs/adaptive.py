"""Measurement-error driven patch selection.

Stage-1 measurements ``y1 = Phi1 x`` also measure the unknown reconstruction
error: ``y1 - Phi1 x_hat = Phi1 (x - x_hat)``. For an RIP matrix the squared
norm of that residual brackets the squared error norm, so ranking patches by
``||dy_j||^2`` ranks them by reconstruction error without ground truth. The
next stage samples the patches with the largest residual energy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ContractError, DegenerateConfigError
from .image_io import round_half_away
from .patching import PatchGrid, patchify
from .sensing import MeasurementSet, SensingMatrix


@dataclass(frozen=True)
class RipBounds:
    lower: float
    upper: float
    delta: float


@dataclass
class AdaptiveMask:
    stage: int
    bits: np.ndarray = field(repr=False)
    threshold: float
    n_unsampled: int

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.bits)


def measurement_error(y1: MeasurementSet, phi1: SensingMatrix, recon, grid: PatchGrid) -> np.ndarray:
    """Per-patch residual ``y1_j - Phi1 recon_j`` as a ``(patch_count, m)`` array."""
    if y1.stage != 1 or phi1.stage != 1:
        raise ContractError(f"measurement error needs stage-1 data, got stage {y1.stage}")
    if len(y1) != grid.patch_count or not np.array_equal(y1.indices, np.arange(grid.patch_count)):
        raise ContractError("stage-1 measurements must cover every patch")
    recon = np.asarray(recon, dtype=np.float64)
    if recon.shape != grid.shape:
        raise ContractError(f"reconstruction shape {recon.shape} != grid shape {grid.shape}")
    return y1.values - kernels.block_forward(recon, grid.p, phi1.entries, y1.indices)


def error_map(deltas) -> np.ndarray:
    """Squared Euclidean norm of each row (one row per patch)."""
    d = np.asarray(deltas, dtype=np.float64)
    return np.einsum("ij,ij->i", d, d)


def rip_bounds(dy_sq: float, delta: float) -> RipBounds:
    """Bracket ``||dx||^2`` given ``||dy||^2`` and an RIP constant ``delta``."""
    if not 0.0 < delta < 1.0:
        raise ContractError(f"RIP constant must lie in (0, 1), got {delta}")
    if dy_sq < 0:
        raise ContractError(f"squared norm must be >= 0, got {dy_sq}")
    return RipBounds(dy_sq / (1.0 + delta), dy_sq / (1.0 - delta), delta)


def unsampled_count(alpha: float, stage_i: int, patch_count: int) -> int:
    """Number of patches left out at stage ``stage_i``, rounded half away from zero."""
    if not 0.0 < alpha <= 1.0:
        raise ContractError(f"alpha must lie in (0, 1], got {alpha}")
    if stage_i < 2:
        raise ContractError(f"adaptive selection starts at stage 2, got {stage_i}")
    return int(round_half_away((1.0 - alpha ** (stage_i - 1)) * patch_count))


def select_patches(v, alpha: float, stage_i: int, grid: PatchGrid) -> AdaptiveMask:
    """Keep the patches whose error exceeds the ``N_a``-th smallest error.

    When several patches tie at the threshold, the lower-index ones are kept
    until exactly ``patch_count - N_a`` patches are selected.
    """
    v = np.asarray(v, dtype=np.float64)
    n = grid.patch_count
    if v.shape != (n,):
        raise ContractError(f"error map has {v.size} entries, grid has {n} patches")
    n_a = unsampled_count(alpha, stage_i, n)
    if n_a >= n:
        raise DegenerateConfigError(
            f"alpha={alpha} at stage {stage_i} leaves {n_a} of {n} patches unsampled; nothing to sample"
        )
    if n_a == 0:
        return AdaptiveMask(stage_i, np.ones(n, dtype=np.uint8), -np.inf, 0)
    thr = float(np.sort(v)[n_a - 1])
    bits = v > thr
    short = (n - n_a) - int(np.count_nonzero(bits))
    if short:
        tied = np.flatnonzero(v == thr)
        bits[tied[:short]] = True
    return AdaptiveMask(stage_i, bits.astype(np.uint8), thr, n_a)


def oracle_mask(gt, recon, alpha: float, stage_i: int, grid: PatchGrid) -> AdaptiveMask:
    """Same rule as :func:`select_patches` but ranked by the true ``||dx_j||^2``.

    Needs the ground truth, so it only serves evaluation.
    """
    return select_patches(oracle_error_map(gt, recon, grid), alpha, stage_i, grid)


def oracle_error_map(gt, recon, grid: PatchGrid) -> np.ndarray:
    diff = np.asarray(gt, dtype=np.float64) - np.asarray(recon, dtype=np.float64)
    if diff.shape != grid.shape:
        raise ContractError(f"image shape {diff.shape} != grid shape {grid.shape}")
    return error_map(patchify(diff, grid.p))
