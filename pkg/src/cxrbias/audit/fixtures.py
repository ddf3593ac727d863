"""Deterministic synthetic corpora with known, planted source biases.

Every generator writes 8-bit PNGs plus a ``manifest.csv`` and returns the
manifest path. Images are crude chest-radiograph phantoms (bright torso,
two darker lung fields, a spine band) with per-image jitter and noise, so
that sources differ only in the bias each fixture plants:

* ``brightness_pair``: source B is source A shifted up by a constant
  number of grey levels.
* ``corner_tag_pair``: source T carries a small saturated patch in the
  top-left corner.
* ``texture_classes``: three classes distinguished by a periodic texture.
* ``masked_corpus``: phantoms plus 256x256 disk segmentation masks.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from ..corpus import SampleRef, make_rng, write_manifest
from ..imgproc.enhance import gaussian_blur
from ..imgproc.image import save_mask

# base phantoms stay at or below this grey level so a planted offset never clips
PHANTOM_MAX = 224


def phantom(rng: np.random.Generator, size: int = 64) -> np.ndarray:
    """One phantom as an integer array in [0, PHANTOM_MAX]."""
    ys, xs = np.mgrid[0:size, 0:size]
    u = (xs + 0.5) / size * 2 - 1
    v = (ys + 0.5) / size * 2 - 1
    img = np.full((size, size), 0.12)
    body = (u / 0.86) ** 2 + (v / 0.96) ** 2 <= 1
    img[body] = 0.58
    dx, dy = rng.normal(0, 0.02, 2)
    for side in (-1, 1):
        cx = side * 0.4 + dx
        rx, ry = 0.27 + rng.normal(0, 0.01), 0.5 + rng.normal(0, 0.015)
        lung = ((u - cx) / rx) ** 2 + ((v + 0.05 - dy) / ry) ** 2 <= 1
        img[lung] = 0.3
    img[(np.abs(u - dx / 2) < 0.07) & body] = 0.72
    img = gaussian_blur(img, 1.0)
    img = img + rng.normal(0, 0.01)
    smooth = gaussian_blur(np.clip(0.5 + rng.normal(0, 0.5, (size, size)), 0, 1), 2.0) - 0.5
    img = img + 0.25 * smooth + rng.normal(0, 0.015, (size, size))
    return np.clip(np.rint(np.clip(img, 0, 1) * 255), 0, PHANTOM_MAX).astype(np.int64)


def _write(levels: np.ndarray, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.clip(levels, 0, 255).astype(np.uint8)).save(path, format="PNG")


def _emit(out_dir: Path, refs: list[SampleRef]) -> Path:
    manifest = out_dir / "manifest.csv"
    write_manifest(refs, manifest)
    return manifest


def brightness_pair(out_dir, n: int = 200, size: int = 64, offset_levels: int = 26,
                    label: str = "Normal", seed: int = 11) -> Path:
    """Sources ``SrcA`` and ``SrcB``; B adds ``offset_levels`` grey levels (26 ~ +0.1)."""
    out_dir = Path(out_dir)
    rng = make_rng(seed)
    refs = []
    for ds, shift in (("SrcA", 0), ("SrcB", offset_levels)):
        for i in range(n):
            rel = f"{ds}/{label}/{ds.lower()}_{i:04d}.png"
            _write(phantom(rng, size) + shift, out_dir / rel)
            refs.append(SampleRef(rel, ds, label))
    return _emit(out_dir, refs)


def single_source(out_dir, n: int, size: int = 64, dataset: str = "SrcA",
                  label: str = "Normal", seed: int = 13) -> Path:
    """One unbiased source, for self-paired null controls."""
    out_dir = Path(out_dir)
    rng = make_rng(seed)
    refs = []
    for i in range(n):
        rel = f"{dataset}/{label}/{dataset.lower()}_{i:04d}.png"
        _write(phantom(rng, size), out_dir / rel)
        refs.append(SampleRef(rel, dataset, label))
    return _emit(out_dir, refs)


def corner_tag_pair(out_dir, n: int = 1000, size: int = 36, patch: int | None = None,
                    labels: tuple[str, str] = ("Normal", "Pneumonia"), seed: int = 17) -> Path:
    """``SrcA`` (first label) is clean; ``SrcT`` (second label) has a saturated top-left patch.

    Images are generated at the probe's 36x36 resolution by default; the
    patch side defaults to the equivalent of 3 pixels at 36x36.
    """
    out_dir = Path(out_dir)
    patch = patch if patch is not None else max(1, round(3 * size / 36))
    rng = make_rng(seed)
    refs = []
    for ds, label, tagged in (("SrcA", labels[0], False), ("SrcT", labels[1], True)):
        for i in range(n):
            img = phantom(rng, size)
            if tagged:
                img[:patch, :patch] = 255
            rel = f"{ds}/{label}/{ds.lower()}_{i:04d}.png"
            _write(img, out_dir / rel)
            refs.append(SampleRef(rel, ds, label))
    return _emit(out_dir, refs)


def _texture(kind: int, size: int, rng: np.random.Generator) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size]
    phase = rng.integers(0, 8)
    if kind == 0:
        pattern = ((ys + phase) // 4) % 2
    elif kind == 1:
        pattern = ((xs + phase) // 4) % 2
    else:
        pattern = (((xs + phase) // 4) + ((ys + phase) // 4)) % 2
    return pattern.astype(np.float64) - 0.5


def texture_classes(out_dir, n_per_class: int = 300, size: int = 36,
                    classes: tuple[str, ...] = ("Normal", "Pneumonia", "COVID"),
                    amplitude_levels: int = 64, seed: int = 19) -> Path:
    """Single source, three classes each overlaid with its own periodic texture."""
    out_dir = Path(out_dir)
    rng = make_rng(seed)
    refs = []
    for k, label in enumerate(classes):
        for i in range(n_per_class):
            img = phantom(rng, size) + np.rint(amplitude_levels * _texture(k, size, rng))
            rel = f"Tex/{label}/{label.lower()}_{i:04d}.png"
            _write(img, out_dir / rel)
            refs.append(SampleRef(rel, "Tex", label))
    return _emit(out_dir, refs)


def disk_mask(size: int = 256, radius_frac: float = 0.35, centre=(0.5, 0.5)) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size]
    cy, cx = centre[0] * size, centre[1] * size
    return ((ys + 0.5 - cy) ** 2 + (xs + 0.5 - cx) ** 2) <= (radius_frac * size) ** 2


def masked_corpus(out_dir, n: int = 10, size: int = 64, mask_size: int = 256,
                  seed: int = 23, with_masks: int | None = None) -> tuple[Path, Path]:
    """Phantoms under ``images/`` and disk masks under ``masks/``.

    Only the first ``with_masks`` images (default: all) get a mask file.
    Returns ``(manifest_path, mask_dir)``.
    """
    out_dir = Path(out_dir)
    rng = make_rng(seed)
    mask_dir = out_dir / "masks"
    refs = []
    with_masks = n if with_masks is None else with_masks
    for i in range(n):
        rel = f"images/{'Normal' if i % 2 == 0 else 'Pneumonia'}/img_{i:04d}.png"
        _write(phantom(rng, size), out_dir / rel)
        refs.append(SampleRef(rel, "Synth", "Normal" if i % 2 == 0 else "Pneumonia"))
        if i < with_masks:
            r = 0.3 + 0.1 * rng.random()
            c = (0.5 + 0.05 * rng.normal(), 0.5 + 0.05 * rng.normal())
            save_mask(disk_mask(mask_size, r, c), mask_dir / f"img_{i:04d}.png")
    return _emit(out_dir, refs), mask_dir


def svm_fixtures() -> dict[str, dict]:
    """Small labelled point sets (at most 20 points) with their SVM settings."""
    rng = make_rng(29)
    fx: dict[str, dict] = {}
    fx["four_point_linear"] = {
        "X": np.array([[0, 0], [0, 1], [3, 0], [3, 1]], dtype=float),
        "y": np.array([-1, -1, 1, 1]), "kernel": ("linear", None), "C": 1.0}
    X = rng.standard_normal((20, 2))
    y = np.where(X[:, 0] + 0.6 * X[:, 1] + 0.4 * rng.standard_normal(20) > 0, 1, -1)
    fx["random20_rbf"] = {"X": X, "y": y, "kernel": ("rbf", 0.5), "C": 1.0}
    X = rng.standard_normal((16, 2))
    y = np.where(X[:, 0] * X[:, 1] > 0, 1, -1)
    fx["xor16_rbf"] = {"X": X, "y": y, "kernel": ("rbf", 1.0), "C": 10.0}
    X = np.vstack([rng.normal(-0.5, 1.0, (10, 2)), rng.normal(0.5, 1.0, (10, 2))])
    y = np.repeat([-1, 1], 10)
    fx["overlap20_linear"] = {"X": X, "y": y, "kernel": ("linear", None), "C": 0.5}
    return fx
