"""Random Gaussian sensing matrices and per-patch measurements.

Randomness comes from a counter-based stream (Philox4x64). The key encodes
``(seed, purpose, stage, patch)``, and element ``e`` of a draw always
consumes counter words ``2e`` and ``2e + 1``. An entry is therefore a pure
function of ``(seed, stage, patch, row, col)`` and not of generation order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ContractError
from .patching import PatchGrid

_U64 = (1 << 64) - 1
_MATRIX_STREAM = 1
_NOISE_STREAM = 2


def _key(seed: int, stream: int, stage: int, patch: int = 0) -> np.ndarray:
    if not 0 <= stage < (1 << 24) or not 0 <= patch < (1 << 24):
        raise ContractError(f"stage {stage} / patch {patch} outside the 24-bit key range")
    hi = (stream << 48) | (stage << 24) | patch
    return np.array([int(seed) & _U64, hi], dtype=np.uint64)


def counter_normals(seed: int, stream: int, stage: int, patch: int, count: int) -> np.ndarray:
    """``count`` standard normals; element ``e`` depends only on the key and ``e``."""
    if count == 0:
        return np.empty(0)
    words = np.random.Philox(key=_key(seed, stream, stage, patch)).random_raw(2 * count).reshape(count, 2)
    u1 = ((words[:, 0] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53  # (0, 1]
    u2 = (words[:, 1] >> np.uint64(11)).astype(np.float64) * 2.0**-53  # [0, 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class SensingMatrix:
    """Sensing operator of one stage.

    ``entries`` is either one ``(m, n)`` matrix shared by every patch or a
    ``(patch_count, m, n)`` stack with a separate matrix per patch.
    """

    stage: int
    entries: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        if self.entries.ndim not in (2, 3):
            raise ContractError(f"matrix entries must be 2-D or 3-D, got shape {self.entries.shape}")

    @property
    def m(self) -> int:
        return self.entries.shape[-2]

    @property
    def n(self) -> int:
        return self.entries.shape[-1]

    @property
    def per_patch(self) -> bool:
        return self.entries.ndim == 3

    def block(self, j: int = 0) -> np.ndarray:
        """The m x n matrix applied to patch ``j``."""
        if not self.per_patch:
            return self.entries
        if not 0 <= j < self.entries.shape[0]:
            raise ContractError(f"patch {j} outside the {self.entries.shape[0]}-patch matrix stack")
        return self.entries[j]

    @classmethod
    def identity(cls, n: int, stage: int = 1) -> "SensingMatrix":
        """Test fixture: ``m = n`` and every patch uses the identity."""
        return cls(stage, np.eye(n))


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ContractError(f"noise sigma must be >= 0, got {self.sigma}")


@dataclass
class MeasurementSet:
    """Measurements of one stage: ``values[k]`` belongs to patch ``indices[k]``."""

    stage: int
    m: int
    seed: int
    indices: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64).reshape(len(self.indices), self.m)

    def __len__(self) -> int:
        return len(self.indices)

    def __getitem__(self, j: int) -> np.ndarray:
        k = np.searchsorted(self.indices, j)
        if k == len(self.indices) or self.indices[k] != j:
            raise KeyError(j)
        return self.values[k]

    def __contains__(self, j) -> bool:
        k = np.searchsorted(self.indices, j)
        return bool(k < len(self.indices) and self.indices[k] == j)

    @property
    def sampled_patches(self) -> set[int]:
        return set(self.indices.tolist())

    def as_dict(self) -> dict[int, np.ndarray]:
        return {int(j): v for j, v in zip(self.indices, self.values)}


def gen_matrix(seed: int, stage: int, m: int, n: int, patch: int = 0) -> SensingMatrix:
    """Gaussian m x n matrix with i.i.d. N(0, 1/m) entries keyed by (seed, stage, patch)."""
    if not 1 <= m <= n:
        raise ContractError(f"need 1 <= m <= n, got m={m}, n={n}")
    if stage < 1:
        raise ContractError(f"stage must be >= 1, got {stage}")
    z = counter_normals(seed, _MATRIX_STREAM, stage, patch, m * n)
    return SensingMatrix(stage, z.reshape(m, n) / np.sqrt(m), seed)


def gen_stage_matrix(seed: int, stage: int, m: int, n: int, patch_count: int) -> SensingMatrix:
    """Per-patch stack whose block ``j`` equals ``gen_matrix(seed, stage, m, n, patch=j)``."""
    if patch_count < 1:
        raise ContractError(f"patch_count must be >= 1, got {patch_count}")
    stack = np.stack([gen_matrix(seed, stage, m, n, j).entries for j in range(patch_count)])
    return SensingMatrix(stage, stack, seed)


def _noise(noise: NoiseSpec, stage: int, patch: int, m: int) -> np.ndarray:
    return noise.sigma * counter_normals(noise.seed, _NOISE_STREAM, stage, patch, m)


def measure_patch(phi: SensingMatrix, patch, noise: NoiseSpec = NoiseSpec(), patch_index: int = 0) -> np.ndarray:
    """``y = phi_j @ patch + eps`` for patch ``j = patch_index``.

    eps is keyed by (noise seed, stage, patch_index).
    """
    patch = np.asarray(patch, dtype=np.float64)
    if patch.shape != (phi.n,):
        raise ContractError(f"patch length {patch.size} != matrix columns {phi.n}")
    mat = phi.block(patch_index)
    p = int(round(np.sqrt(phi.n)))
    if p * p == phi.n:
        # same kernel as measure_stage so both give bit-identical vectors
        y = kernels.block_forward(patch.reshape(p, p), p, mat, np.zeros(1, np.int64))[0]
    else:
        y = mat @ patch
    if noise.sigma > 0:
        y = y + _noise(noise, phi.stage, patch_index, phi.m)
    return y


def measure_stage(phi: SensingMatrix, img: np.ndarray, selected, noise: NoiseSpec = NoiseSpec()) -> MeasurementSet:
    """Measure the selected patches of ``img``.

    Equivalent to measuring ``E_a * img`` and dropping the all-zero blocks.
    """
    img = np.asarray(img, dtype=np.float64)
    p = int(round(np.sqrt(phi.n)))
    if p * p != phi.n:
        raise ContractError(f"matrix has {phi.n} columns, not a square patch")
    grid = PatchGrid.for_shape(img.shape, p)
    if phi.per_patch and phi.entries.shape[0] != grid.patch_count:
        raise ContractError(f"matrix stack covers {phi.entries.shape[0]} patches, image has {grid.patch_count}")
    idx = np.unique(np.fromiter((int(j) for j in selected), dtype=np.int64))
    if idx.size and (idx[0] < 0 or idx[-1] >= grid.patch_count):
        raise ContractError(f"selected patch index outside [0, {grid.patch_count})")
    values = kernels.block_forward(img, p, phi.entries, idx)
    if noise.sigma > 0:
        for k, j in enumerate(idx):
            values[k] += _noise(noise, phi.stage, int(j), phi.m)
    return MeasurementSet(phi.stage, phi.m, phi.seed, idx, values)


def adjoint_apply(phi: SensingMatrix, v, patch_index: int = 0) -> np.ndarray:
    """``phi_j^T v`` for patch ``j = patch_index``."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (phi.m,):
        raise ContractError(f"vector length {v.size} != matrix rows {phi.m}")
    return phi.block(patch_index).T @ v
