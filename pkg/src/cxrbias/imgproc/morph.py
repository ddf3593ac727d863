"""Binary mask operations: disk dilation, masking and mask upscaling."""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from ..errors import ParameterError, ShapeError
from .image import BinaryMask, GrayImage, resize


def disk(radius: float) -> np.ndarray:
    """Boolean structuring element of all offsets within Euclidean ``radius``."""
    r = int(math.floor(radius))
    y, x = np.mgrid[-r:r + 1, -r:r + 1]
    return (x * x + y * y) <= radius * radius


def dilate(mask: BinaryMask, radius: float) -> BinaryMask:
    if radius < 0:
        raise ParameterError(f"dilation radius must be non-negative, got {radius}")
    mask = np.asarray(mask, dtype=bool)
    if radius < 1 or not mask.any():
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=disk(radius))


def apply_mask(img: GrayImage, mask: BinaryMask) -> GrayImage:
    """Keep pixels under the mask and zero the rest (the "bitwise and" merge)."""
    img = np.asarray(img, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if img.shape != mask.shape:
        raise ShapeError(f"image shape {img.shape} does not match mask shape {mask.shape}")
    return np.where(mask, img, 0.0)


def upscale(mask_img: GrayImage, factor: int) -> GrayImage:
    """Bicubic enlargement by an integer factor (stand-in for learned super-resolution)."""
    if int(factor) != factor or factor < 1:
        raise ParameterError(f"upscale factor must be a positive integer, got {factor}")
    mask_img = np.asarray(mask_img, dtype=np.float64)
    if factor == 1:
        return mask_img.copy()
    h, w = mask_img.shape
    return resize(mask_img, w * int(factor), h * int(factor), "bicubic")


def binarize(img: GrayImage, threshold: float = 0.5) -> BinaryMask:
    return np.asarray(img) >= threshold
