"""8-bit grayscale PGM (P5) input/output.

Images are plain 2-D ``float64`` numpy arrays indexed ``[row, col]``. Only
the binary P5 flavour with ``maxval = 255`` is supported; the writer always
emits the canonical header ``P5\\n<W> <H>\\n255\\n``.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import ContractError, PgmFormatError, PgmTruncatedError, PgmUnsupportedError
from .patching import PatchGrid, expand_mask

_WHITESPACE = b" \t\r\n\x0b\x0c"


def round_half_away(x):
    """Round to nearest integer, ties away from zero (works on scalars and arrays)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def clamp_to_display(img: np.ndarray) -> np.ndarray:
    return np.clip(np.asarray(img, dtype=np.float64), 0.0, 255.0)


def to_bytes(img: np.ndarray) -> np.ndarray:
    """Quantize a real image to uint8: round half away from zero, then clamp."""
    return np.clip(round_half_away(img), 0, 255).astype(np.uint8)


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and buf[pos : pos + 1] not in _WHITESPACE and buf[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PgmFormatError("unexpected end of header")
    return buf[start:pos], pos


def decode_pgm(buf: bytes) -> np.ndarray:
    if buf[:2] != b"P5":
        raise PgmFormatError(f"not a binary PGM (magic {buf[:2]!r})")
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _read_token(buf, pos)
        if not tok.isdigit():
            raise PgmFormatError(f"bad {name} field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise PgmFormatError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise PgmUnsupportedError(f"maxval {maxval} not supported (only 255)")
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(buf) or buf[pos : pos + 1] not in _WHITESPACE:
        raise PgmFormatError("missing whitespace after maxval")
    pos += 1
    need = width * height
    payload = buf[pos : pos + need]
    if len(payload) < need:
        raise PgmTruncatedError(f"payload has {len(payload)} bytes, header promises {need}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).astype(np.float64)


def encode_pgm(img: np.ndarray) -> bytes:
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] == 0 or img.shape[1] == 0:
        raise ContractError(f"expected a non-empty 2-D image, got shape {img.shape}")
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + to_bytes(img).tobytes()


def load_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read a P5 file into a float64 array with values 0..255."""
    return decode_pgm(Path(path).read_bytes())


def save_pgm(img: np.ndarray, path: str | os.PathLike) -> None:
    Path(path).write_bytes(encode_pgm(img))


def save_mask_pgm(mask, grid: PatchGrid, path: str | os.PathLike) -> None:
    """Write a per-patch selection as a 0/255 image.

    ``mask`` is an :class:`~adaptive_cs.adaptive.AdaptiveMask` or a plain bit
    vector of length ``grid.patch_count``.
    """
    bits = np.asarray(getattr(mask, "bits", mask))
    if bits.shape != (grid.patch_count,):
        raise ContractError(f"mask has {bits.size} entries, grid has {grid.patch_count} patches")
    save_pgm(expand_mask(bits, grid) * 255.0, path)
