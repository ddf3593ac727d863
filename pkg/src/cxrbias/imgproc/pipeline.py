"""Augmentation recipes, the mask-and-enhance preprocessing chain, random augmentation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from ..corpus import make_rng
from ..errors import MissingMaskError, ParameterError, ShapeError
from .enhance import clahe, gamma, hist_eq, unsharp
from .image import BinaryMask, GrayImage, resize
from .morph import apply_mask, binarize, dilate, upscale


@dataclass(frozen=True)
class HistEq:
    def __call__(self, img):
        return hist_eq(img)

    def to_dict(self):
        return {"op": "hist_eq"}


@dataclass(frozen=True)
class Gamma:
    G: float

    def __post_init__(self):
        if not self.G > 0:
            raise ParameterError(f"gamma value must be positive, got {self.G}")

    def __call__(self, img):
        return gamma(img, self.G)

    def to_dict(self):
        return {"op": "gamma", "G": self.G}


@dataclass(frozen=True)
class Clahe:
    clip: float = 40.0
    tiles: tuple[int, int] = (8, 8)

    def __call__(self, img):
        return clahe(img, self.clip, self.tiles)

    def to_dict(self):
        return {"op": "clahe", "clip": self.clip, "tiles": list(self.tiles)}


@dataclass(frozen=True)
class Unsharp:
    radius: float = 1.0
    amount: float = 1.0

    def __call__(self, img):
        return unsharp(img, self.radius, self.amount)

    def to_dict(self):
        return {"op": "unsharp", "radius": self.radius, "amount": self.amount}


Step = HistEq | Gamma | Clahe | Unsharp


def parse_step(spec: dict) -> Step:
    spec = dict(spec)
    op = spec.pop("op", None)
    if op == "hist_eq":
        return HistEq()
    if op == "gamma":
        return Gamma(float(spec["G"]))
    if op == "clahe":
        return Clahe(float(spec.get("clip", 40.0)), tuple(int(t) for t in spec.get("tiles", (8, 8))))
    if op == "unsharp":
        return Unsharp(float(spec.get("radius", 1.0)), float(spec.get("amount", 1.0)))
    raise ParameterError(f"unknown recipe step {op!r}")


@dataclass(frozen=True)
class AugmentRecipe:
    """Ordered list of enhancement steps; the empty recipe is the identity."""

    steps: tuple[Step, ...] = ()

    @classmethod
    def parse(cls, specs: Iterable[dict] | "AugmentRecipe") -> "AugmentRecipe":
        if isinstance(specs, AugmentRecipe):
            return specs
        return cls(tuple(parse_step(s) for s in specs))

    def __call__(self, img: GrayImage) -> GrayImage:
        return apply_recipe(img, self)

    def __len__(self):
        return len(self.steps)

    def to_list(self) -> list[dict]:
        return [s.to_dict() for s in self.steps]


# Recipes compared by the source-bias probe (identity first).
STANDARD_RECIPES: dict[str, AugmentRecipe] = {
    "identity": AugmentRecipe(),
    "hist_eq": AugmentRecipe((HistEq(),)),
    "hist_eq+gamma1.5": AugmentRecipe((HistEq(), Gamma(1.5))),
    "gamma1.5+hist_eq": AugmentRecipe((Gamma(1.5), HistEq())),
    "gamma0.5": AugmentRecipe((Gamma(0.5),)),
    "gamma1.5": AugmentRecipe((Gamma(1.5),)),
    "gamma2.0": AugmentRecipe((Gamma(2.0),)),
    "clahe": AugmentRecipe((Clahe(),)),
    "unsharp": AugmentRecipe((Unsharp(),)),
}


def apply_recipe(img: GrayImage, recipe: AugmentRecipe | Sequence[Step]) -> GrayImage:
    steps = recipe.steps if isinstance(recipe, AugmentRecipe) else tuple(recipe)
    out = np.asarray(img, dtype=np.float64)
    if not steps:
        return out.copy()
    for step in steps:
        out = step(out)
    return out


@dataclass(frozen=True)
class PipelineConfig:
    mask_size: int = 256
    upscale_factor: int = 4
    dilate_radius: float = 5
    recipe: AugmentRecipe = field(default_factory=AugmentRecipe)
    missing_mask_policy: str = "error"

    def __post_init__(self):
        if self.upscale_factor < 1 or int(self.upscale_factor) != self.upscale_factor:
            raise ParameterError(f"upscale_factor must be a positive integer, got {self.upscale_factor}")
        if self.dilate_radius < 0:
            raise ParameterError(f"dilate_radius must be non-negative, got {self.dilate_radius}")
        if self.missing_mask_policy not in ("error", "passthrough"):
            raise ParameterError(
                f"missing_mask_policy must be 'error' or 'passthrough', got {self.missing_mask_policy!r}")
        if not isinstance(self.recipe, AugmentRecipe):
            object.__setattr__(self, "recipe", AugmentRecipe.parse(self.recipe))

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        if "recipe" in d:
            d["recipe"] = AugmentRecipe.parse(d["recipe"])
        return cls(**d)

    def to_dict(self) -> dict:
        return {"mask_size": self.mask_size, "upscale_factor": self.upscale_factor,
                "dilate_radius": self.dilate_radius, "recipe": self.recipe.to_list(),
                "missing_mask_policy": self.missing_mask_policy}


def fit_mask(mask: BinaryMask, shape: tuple[int, int], cfg: PipelineConfig) -> BinaryMask:
    """Bring a low-resolution segmentation mask to ``shape`` and grow it."""
    big = upscale(np.asarray(mask, dtype=np.float64), cfg.upscale_factor)
    h, w = shape
    fitted = binarize(resize(big, w, h, "bilinear"))
    return dilate(fitted, cfg.dilate_radius)


def preprocess_stage2(img: GrayImage, mask: BinaryMask | None, cfg: PipelineConfig) -> GrayImage:
    img = np.asarray(img, dtype=np.float64)
    if mask is None:
        if cfg.missing_mask_policy == "error":
            raise MissingMaskError("no segmentation mask supplied and missing_mask_policy='error'")
        masked = img
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (cfg.mask_size, cfg.mask_size):
            raise ShapeError(
                f"mask is {mask.shape[1]}x{mask.shape[0]}, expected {cfg.mask_size}x{cfg.mask_size}")
        masked = apply_mask(img, fit_mask(mask, img.shape, cfg))
    return apply_recipe(masked, cfg.recipe)


def hflip(img: GrayImage) -> GrayImage:
    return np.ascontiguousarray(np.asarray(img)[:, ::-1])


def rotate(img: GrayImage, degrees: float) -> GrayImage:
    """Rotate about the image centre, bilinear, edge-mirrored padding."""
    img = np.asarray(img, dtype=np.float64)
    if degrees == 0:
        return img.copy()
    out = ndimage.rotate(img, degrees, reshape=False, order=1, mode="reflect")
    return np.clip(out, 0.0, 1.0)


def draw_augment(rng: np.random.Generator, max_rotation: float, hflip_prob: float) -> tuple[float, bool]:
    """Draw (angle, flip) from ``rng``; always consumes exactly two variates."""
    angle = rng.uniform(-max_rotation, max_rotation)
    flip = rng.random() < hflip_prob
    return (float(angle) if max_rotation > 0 else 0.0), bool(flip)


def random_augment(img: GrayImage, max_rotation: float, hflip_prob: float, seed) -> GrayImage:
    if not 0.0 <= hflip_prob <= 1.0:
        raise ParameterError(f"hflip_prob must lie in [0, 1], got {hflip_prob}")
    if max_rotation < 0:
        raise ParameterError(f"max_rotation must be non-negative, got {max_rotation}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    angle, flip = draw_augment(rng, max_rotation, hflip_prob)
    out = rotate(img, angle)
    return hflip(out) if flip else out
