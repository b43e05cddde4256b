"""Non-overlapping p x p patch grid.

Patch ``j`` sits at block ``(j // cols, j % cols)``: blocks are numbered in
row-major order and the pixels inside a patch vector are row-major too.
Every other module relies on this numbering.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class PatchGrid:
    p: int
    rows: int
    cols: int

    @classmethod
    def for_shape(cls, shape: tuple[int, int], p: int) -> "PatchGrid":
        h, w = shape
        if p < 1:
            raise ContractError(f"patch size must be >= 1, got {p}")
        if h <= 0 or w <= 0:
            raise ContractError(f"empty image shape {shape}")
        if h % p or w % p:
            raise ContractError(f"image {h}x{w} is not divisible by patch size {p}")
        return cls(p, h // p, w // p)

    @property
    def patch_count(self) -> int:
        return self.rows * self.cols

    @property
    def n(self) -> int:
        return self.p * self.p

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows * self.p, self.cols * self.p

    def block(self, j: int) -> tuple[int, int]:
        if not 0 <= j < self.patch_count:
            raise ContractError(f"patch index {j} out of range [0, {self.patch_count})")
        return divmod(j, self.cols)

    def index(self, row_block: int, col_block: int) -> int:
        if not (0 <= row_block < self.rows and 0 <= col_block < self.cols):
            raise ContractError(f"block ({row_block}, {col_block}) outside {self.rows}x{self.cols} grid")
        return row_block * self.cols + col_block


def patchify(img: np.ndarray, p: int) -> np.ndarray:
    """Split ``img`` into a ``(patch_count, p*p)`` array, one patch per row."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ContractError(f"expected a 2-D image, got shape {img.shape}")
    g = PatchGrid.for_shape(img.shape, p)
    return (
        img.reshape(g.rows, p, g.cols, p)
        .swapaxes(1, 2)
        .reshape(g.patch_count, g.n)
        .copy()
    )


def unpatchify(patches, grid: PatchGrid, indices=None) -> np.ndarray:
    """Inverse of :func:`patchify`.

    ``patches`` is a ``(patch_count, p*p)`` array. When ``indices`` is given,
    row ``k`` of ``patches`` holds patch ``indices[k]``; the indices must be a
    permutation of ``range(patch_count)``.
    """
    patches = np.asarray(patches, dtype=np.float64)
    if patches.shape != (grid.patch_count, grid.n):
        raise ContractError(
            f"expected {grid.patch_count} patches of length {grid.n}, got array of shape {patches.shape}"
        )
    if indices is not None:
        indices = np.asarray(indices, dtype=np.int64)
        if indices.shape != (grid.patch_count,) or not np.array_equal(
            np.sort(indices), np.arange(grid.patch_count)
        ):
            raise ContractError("patch indices must cover every patch exactly once")
        ordered = np.empty_like(patches)
        ordered[indices] = patches
        patches = ordered
    p = grid.p
    return patches.reshape(grid.rows, grid.cols, p, p).swapaxes(1, 2).reshape(grid.shape).copy()


def expand_mask(bits, grid: PatchGrid) -> np.ndarray:
    """Per-patch 0/1 vector -> pixel mask of the full image (float 0.0/1.0)."""
    bits = np.asarray(bits)
    if bits.shape != (grid.patch_count,):
        raise ContractError(f"mask has {bits.size} entries, grid has {grid.patch_count} patches")
    blocks = (bits != 0).astype(np.float64).reshape(grid.rows, grid.cols)
    return np.kron(blocks, np.ones((grid.p, grid.p)))
