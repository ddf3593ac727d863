"""Grayscale image carrier, PNG/JPEG I/O and separable resampling.

A ``GrayImage`` is a 2-D ``float64`` array of shape ``(height, width)`` with
values in [0, 1]; a ``BinaryMask`` is a 2-D ``bool`` array. Plain numpy
arrays are used throughout so every operation composes with ordinary array
code.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import DecodeError, ParameterError, ShapeError

GrayImage = np.ndarray
BinaryMask = np.ndarray

_SUPPORTED_FORMATS = {"PNG", "JPEG"}
# ITU-R BT.601 luma weights for RGB -> gray
_LUMA = np.array([0.299, 0.587, 0.114])


def as_gray(img) -> GrayImage:
    """Validate and return ``img`` as a float64 2-D array in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise ParameterError("image intensities must be finite and lie in [0, 1]")
    return arr


def as_mask(mask) -> BinaryMask:
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.size == 0:
        raise ShapeError(f"expected a non-empty 2-D mask, got shape {arr.shape}")
    if arr.dtype != bool:
        if not np.all((arr == 0) | (arr == 1)):
            raise ParameterError("mask values must be 0 or 1")
        arr = arr.astype(bool)
    return arr


def _open(path) -> Image.Image:
    try:
        im = Image.open(path)
        im.load()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    if im.format not in _SUPPORTED_FORMATS:
        raise DecodeError(f"{path}: unsupported format {im.format!r}")
    return im


def _raw_pixels(im: Image.Image) -> tuple[np.ndarray, float]:
    """Return (2-D array of raw channel-averaged values, bit-depth maximum)."""
    mode = im.mode
    if mode == "P":
        im = im.convert("RGBA" if "transparency" in im.info else "RGB")
        mode = im.mode
    if mode in ("1",):
        return np.asarray(im, dtype=np.float64), 1.0
    if mode in ("L", "LA"):
        arr = np.asarray(im, dtype=np.float64)
        return (arr[..., 0] if arr.ndim == 3 else arr), 255.0
    if mode in ("RGB", "RGBA", "CMYK", "YCbCr"):
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
        return arr @ _LUMA, 255.0
    if mode.startswith("I;16") or mode == "I":
        arr = np.asarray(im).astype(np.float64)
        return arr, 65535.0
    raise DecodeError(f"unsupported pixel mode {mode!r}")


def load_image(path) -> GrayImage:
    """Decode an 8/16-bit PNG or 8-bit JPEG into [0, 1] intensities."""
    raw, maximum = _raw_pixels(_open(path))
    return np.clip(raw / maximum, 0.0, 1.0)


def load_mask(path) -> BinaryMask:
    """Decode a mask image; any nonzero pixel is foreground."""
    raw, _ = _raw_pixels(_open(path))
    return raw > 0


def to_uint8(img: GrayImage) -> np.ndarray:
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_png(img: GrayImage, path) -> Path:
    """Write ``img`` as an 8-bit grayscale PNG (nearest rounding)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(img)).save(path, format="PNG")
    return path


def save_mask(mask: BinaryMask, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)).save(path, format="PNG")
    return path


# -- resampling -----------------------------------------------------------

def _triangle(x: np.ndarray) -> np.ndarray:
    x = np.abs(x)
    return np.where(x < 1.0, 1.0 - x, 0.0)


def _keys_cubic(x: np.ndarray, a: float = -0.5) -> np.ndarray:
    x = np.abs(x)
    x2, x3 = x * x, x * x * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


_FILTERS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "bilinear": _triangle,
    "bicubic": _keys_cubic,
}


def resample_matrix(in_size: int, out_size: int, method: str) -> np.ndarray:
    """Dense ``(out_size, in_size)`` interpolation matrix for one axis.

    Pixel centres sit at half-integer positions. When shrinking, the filter
    support is stretched by the scale factor (antialiasing); taps falling
    outside the image are dropped and the remaining weights renormalised.
    """
    scale = in_size / out_size
    centres = (np.arange(out_size) + 0.5) * scale
    if method == "nearest":
        idx = np.minimum(np.floor(centres).astype(int), in_size - 1)
        m = np.zeros((out_size, in_size))
        m[np.arange(out_size), idx] = 1.0
        return m
    try:
        kernel = _FILTERS[method]
    except KeyError:
        raise ParameterError(f"unknown resize method {method!r}") from None
    stretch = max(scale, 1.0)
    offsets = (np.arange(in_size)[None, :] + 0.5 - centres[:, None]) / stretch
    m = kernel(offsets)
    return m / m.sum(axis=1, keepdims=True)


def resize(img: GrayImage, w: int, h: int, method: str = "bilinear") -> GrayImage:
    if w < 1 or h < 1:
        raise ParameterError(f"target size must be positive, got {w}x{h}")
    img = np.asarray(img, dtype=np.float64)
    rows = resample_matrix(img.shape[0], h, method)
    cols = resample_matrix(img.shape[1], w, method)
    return np.clip(rows @ img @ cols.T, 0.0, 1.0)
