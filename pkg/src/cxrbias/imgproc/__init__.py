"""Pixel-level operations on grayscale images and binary masks."""

from .enhance import clahe, gamma, gaussian_blur, gaussian_kernel, hist_eq, quantize, unsharp
from .image import (
    BinaryMask,
    GrayImage,
    as_gray,
    as_mask,
    load_image,
    load_mask,
    resample_matrix,
    resize,
    save_mask,
    save_png,
    to_uint8,
)
from .morph import apply_mask, binarize, dilate, disk, upscale
from .pipeline import (
    STANDARD_RECIPES,
    AugmentRecipe,
    Clahe,
    Gamma,
    HistEq,
    PipelineConfig,
    Unsharp,
    apply_recipe,
    fit_mask,
    hflip,
    preprocess_stage2,
    random_augment,
    rotate,
)

__all__ = [
    "BinaryMask", "GrayImage", "AugmentRecipe", "PipelineConfig",
    "HistEq", "Gamma", "Clahe", "Unsharp", "STANDARD_RECIPES",
    "as_gray", "as_mask", "load_image", "load_mask", "save_png", "save_mask", "to_uint8",
    "resize", "resample_matrix", "hist_eq", "clahe", "gamma", "gaussian_kernel",
    "gaussian_blur", "unsharp", "quantize", "dilate", "disk", "apply_mask", "binarize",
    "upscale", "apply_recipe", "fit_mask", "preprocess_stage2", "random_augment",
    "rotate", "hflip",
]
