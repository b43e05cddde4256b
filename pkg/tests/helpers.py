"""Shared test images."""
from functools import lru_cache

import numpy as np
from scipy import ndimage

from adaptive_cs.sensing import counter_normals


def _half(img):
    h, w = img.shape
    return img.astype(np.float64).reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


@lru_cache(maxsize=None)
def natural(name: str) -> np.ndarray:
    """256x256 grayscale test images from scikit-image (read-only)."""
    from skimage import data

    if name == "camera":
        img = _half(data.camera())
    elif name == "moon":
        img = _half(data.moon())
    elif name == "coins":
        img = data.coins()[20:276, 64:320].astype(np.float64)
    else:
        raise KeyError(name)
    img.flags.writeable = False
    return img


NATURAL = ("camera", "moon", "coins")


def composite(size: int = 128, flat: float = 100.0, texture_std: float = 40.0) -> np.ndarray:
    """Left half constant, right half smoothed Gaussian texture around 128."""
    half = size // 2
    noise = counter_normals(7, 9, 1, 0, size * half).reshape(size, half)
    tex = ndimage.gaussian_filter(noise, 1.0)
    tex = 128.0 + texture_std * tex / tex.std()
    img = np.full((size, size), flat)
    img[:, half:] = np.clip(tex, 0.0, 255.0)
    return img


def brute_force_selection(v, alpha: float, stage_i: int) -> np.ndarray:
    """Reference selection: rank by error descending, ties by ascending index, keep the top."""
    n = len(v)
    frac = 1.0 - alpha ** (stage_i - 1)
    n_a = int(np.floor(frac * n + 0.5))  # frac * n >= 0, so this is half-away rounding
    order = sorted(range(n), key=lambda j: (-v[j], j))
    bits = np.zeros(n, dtype=np.uint8)
    bits[order[: n - n_a]] = 1
    return bits
