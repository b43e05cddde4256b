"""Image quality and error-proxy statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, stats

from .errors import ContractError

PEAK = 255.0
SSIM_WIN = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

UNDEFINED = math.nan  # returned by correlations() on zero-variance input


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    pearson: float = UNDEFINED
    spearman: float = UNDEFINED
    mask_agreement: float = UNDEFINED


def _pair(ref, test):
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ContractError(f"image shapes differ: {ref.shape} vs {test.shape}")
    return ref, test


def psnr(ref, test) -> float:
    """Peak signal-to-noise ratio in dB with peak 255; ``inf`` for identical images."""
    ref, test = _pair(ref, test)
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def _gaussian_window() -> np.ndarray:
    r = SSIM_WIN // 2
    w = np.exp(-0.5 * (np.arange(-r, r + 1) / SSIM_SIGMA) ** 2)
    return w / w.sum()


def _local_mean(img, w):
    out = ndimage.correlate1d(img, w, axis=0, mode="reflect")
    out = ndimage.correlate1d(out, w, axis=1, mode="reflect")
    r = SSIM_WIN // 2
    return out[r:-r, r:-r]  # keep only windows fully inside the image


def ssim(ref, test) -> float:
    """Mean SSIM over all fully-contained 11x11 Gaussian windows (sigma 1.5, L = 255)."""
    ref, test = _pair(ref, test)
    if ref.ndim != 2 or min(ref.shape) < SSIM_WIN:
        raise ContractError(f"SSIM needs a 2-D image of at least {SSIM_WIN}x{SSIM_WIN}, got {ref.shape}")
    w = _gaussian_window()
    c1 = (SSIM_K1 * PEAK) ** 2
    c2 = (SSIM_K2 * PEAK) ** 2
    mx = _local_mean(ref, w)
    my = _local_mean(test, w)
    sxx = _local_mean(ref * ref, w) - mx * mx
    syy = _local_mean(test * test, w) - my * my
    sxy = _local_mean(ref * test, w) - mx * my
    num = (2.0 * mx * my + c1) * (2.0 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def _pearson(a, b) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    if den == 0.0:
        return UNDEFINED
    return max(-1.0, min(1.0, float(np.dot(a, b)) / den))


def correlations(v_dy, v_dx) -> tuple[float, float]:
    """(Pearson, Spearman) between two per-patch error maps.

    Spearman is Pearson on average ranks. Either value is NaN when an input
    has zero variance.
    """
    a = np.asarray(v_dy, dtype=np.float64)
    b = np.asarray(v_dx, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(f"error maps must be 1-D and aligned, got {a.shape} and {b.shape}")
    if a.size < 3:
        raise ContractError(f"need at least 3 patches, got {a.size}")
    return _pearson(a, b), _pearson(stats.rankdata(a), stats.rankdata(b))


def mask_agreement(a, b) -> float:
    """Fraction of ``a``'s selected patches that ``b`` also selects."""
    ba = np.asarray(getattr(a, "bits", a)) != 0
    bb = np.asarray(getattr(b, "bits", b)) != 0
    if ba.shape != bb.shape:
        raise ContractError(f"masks cover {ba.size} and {bb.size} patches")
    pa, pb = int(ba.sum()), int(bb.sum())
    if pa != pb:
        raise ContractError(f"masks select {pa} and {pb} patches; agreement needs equal counts")
    if pa == 0:
        raise ContractError("empty masks have no agreement")
    return int(np.count_nonzero(ba & bb)) / pa
