"""Intensity enhancement: equalisation, CLAHE, gamma, Gaussian blur, unsharp masking.

Equalisation and CLAHE quantise to 256 levels (``round(255 * v)``) whatever
the source bit depth.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ParameterError
from .image import GrayImage

LEVELS = 256


def quantize(img: GrayImage) -> np.ndarray:
    """Map [0, 1] intensities to integer bins 0..255."""
    return np.clip(np.floor(np.asarray(img) * (LEVELS - 1) + 0.5), 0, LEVELS - 1).astype(np.intp)


def hist_eq(img: GrayImage) -> GrayImage:
    """Global histogram equalisation.

    ``out = (cdf(bin(v)) - cdf_min) / (N - cdf_min)`` with ``cdf`` counting
    pixels. A constant image has a zero denominator and is returned as is.
    """
    img = np.asarray(img, dtype=np.float64)
    bins = quantize(img)
    cdf = np.cumsum(np.bincount(bins.ravel(), minlength=LEVELS))
    n = bins.size
    cdf_min = cdf[bins.min()]
    if n == cdf_min:
        return img.copy()
    return (cdf[bins] - cdf_min) / (n - cdf_min)


def _tile_edges(size: int, tiles: int) -> np.ndarray:
    return np.array([(k * size) // tiles for k in range(tiles + 1)])


def _tile_lut(bins: np.ndarray, clip: float) -> np.ndarray | None:
    """Clipped-histogram equalisation table for one tile; None for a constant tile."""
    hist = np.bincount(bins.ravel(), minlength=LEVELS).astype(np.float64)
    occupied = np.flatnonzero(hist)
    if occupied.size <= 1:
        return None
    excess = np.maximum(hist - clip, 0.0).sum()
    if excess > 0:
        hist = np.minimum(hist, clip) + excess / LEVELS
    cdf = np.cumsum(hist)
    cdf_min = cdf[occupied[0]]
    return np.clip((cdf - cdf_min) / (bins.size - cdf_min), 0.0, 1.0)


def _interp_coords(n: int, edges: np.ndarray):
    """Lower tile index and upper-neighbour weight for each pixel along one axis."""
    centres = (edges[:-1] + edges[1:] - 1) / 2.0
    pos = np.arange(n, dtype=np.float64)
    if len(centres) == 1:
        zeros = np.zeros(n, dtype=np.intp)
        return zeros, zeros, np.zeros(n)
    lo = np.clip(np.searchsorted(centres, pos, side="right") - 1, 0, len(centres) - 2)
    hi = lo + 1
    t = np.clip((pos - centres[lo]) / (centres[hi] - centres[lo]), 0.0, 1.0)
    return lo, hi, t


def clahe(img: GrayImage, clip: float = 40.0, tiles: tuple[int, int] = (8, 8)) -> GrayImage:
    """Contrast-limited adaptive histogram equalisation.

    ``clip`` is the per-bin count limit within a tile; clipped mass is spread
    evenly over all 256 bins. Tile mappings are blended bilinearly between
    tile centres. Constant tiles map every value to itself.
    """
    tx, ty = tiles
    if tx < 1 or ty < 1:
        raise ParameterError(f"tile grid must be at least 1x1, got {tiles}")
    if not clip > 0:
        raise ParameterError(f"clip limit must be positive, got {clip}")
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    if h < ty or w < tx:
        raise ParameterError(f"{w}x{h} image is smaller than the {tx}x{ty} tile grid")
    bins = quantize(img)
    ey, ex = _tile_edges(h, ty), _tile_edges(w, tx)

    # mapped[r, c] is the image as seen through tile (r, c)'s mapping
    mapped = np.empty((ty, tx, h, w))
    for r in range(ty):
        for c in range(tx):
            lut = _tile_lut(bins[ey[r]:ey[r + 1], ex[c]:ex[c + 1]], clip)
            mapped[r, c] = img if lut is None else lut[bins]

    ylo, yhi, wy = _interp_coords(h, ey)
    xlo, xhi, wx = _interp_coords(w, ex)
    yy = np.arange(h)[:, None]
    xx = np.arange(w)[None, :]
    wy, wx = wy[:, None], wx[None, :]
    top = (1 - wx) * mapped[ylo[:, None], xlo[None, :], yy, xx] + wx * mapped[ylo[:, None], xhi[None, :], yy, xx]
    bottom = (1 - wx) * mapped[yhi[:, None], xlo[None, :], yy, xx] + wx * mapped[yhi[:, None], xhi[None, :], yy, xx]
    return np.clip((1 - wy) * top + wy * bottom, 0.0, 1.0)


def gamma(img: GrayImage, G: float) -> GrayImage:
    """Power-law correction ``out = in ** (1 / G)``; G > 1 brightens."""
    if not G > 0:
        raise ParameterError(f"gamma value must be positive, got {G}")
    img = np.asarray(img, dtype=np.float64)
    if G == 1:
        return img.copy()
    return np.power(img, 1.0 / G)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalised 1-D Gaussian truncated at radius ``ceil(3 * sigma)``."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _convolve_axis(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    # numpy "symmetric" repeats the edge sample: (c b a | a b c | c b a)
    padded = np.pad(img, pad, mode="symmetric")
    n = img.shape[axis]
    out = np.zeros_like(img)
    for i, kv in enumerate(kernel):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(i, i + n)
        out += kv * padded[tuple(sl)]
    return out


def gaussian_blur(img: GrayImage, sigma: float) -> GrayImage:
    k = gaussian_kernel(sigma)
    img = np.asarray(img, dtype=np.float64)
    return np.clip(_convolve_axis(_convolve_axis(img, k, 0), k, 1), 0.0, 1.0)


def unsharp(img: GrayImage, radius: float = 1.0, amount: float = 1.0) -> GrayImage:
    """Sharpen by ``in + amount * (in - blur(in, radius))``, clamped to [0, 1]."""
    if not radius > 0:
        raise ParameterError(f"unsharp radius must be positive, got {radius}")
    img = np.asarray(img, dtype=np.float64)
    if amount == 0:
        return img.copy()
    blurred = gaussian_blur(img, radius)
    return np.clip(img + amount * (img - blurred), 0.0, 1.0)
