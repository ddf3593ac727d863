"""Minimal deterministic rasteriser for embedding scatters and Grad-CAM overlays.

Figures are built as uint8 RGB arrays and written with Pillow's PNG encoder,
so identical inputs give identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from ..errors import ParameterError
from ..nn.gradcam import upsample_heatmap

PALETTE = np.array([
    (31, 119, 180), (214, 39, 40), (44, 160, 44), (255, 127, 14),
    (148, 103, 189), (140, 86, 75), (227, 119, 194), (127, 127, 127),
], dtype=np.uint8)


def _save_rgb(rgb: np.ndarray, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(path, format="PNG")
    return path


def render_scatter(points, group_labels: Sequence, path, size: tuple[int, int] = (480, 480),
                   marker_radius: int = 3) -> Path:
    """One coloured disc per point, one colour per distinct group label (first-seen order)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise ParameterError("render_scatter needs a non-empty (n, 2) array")
    if len(group_labels) != len(pts):
        raise ParameterError("one group label per point required")
    w, h = size
    canvas = np.full((h, w, 3), 255, dtype=np.uint8)
    canvas[0, :] = canvas[-1, :] = 0
    canvas[:, 0] = canvas[:, -1] = 0

    lo, hi = pts.min(axis=0), pts.max(axis=0)
    extent = hi - lo
    extent = np.where(extent > 0, extent, 1.0)
    lo = np.where(hi - lo > 0, lo, lo - 0.5)
    lo, extent = lo - 0.05 * extent, extent * 1.1
    px = ((pts[:, 0] - lo[0]) / extent[0] * (w - 1)).round().astype(int)
    py = ((1.0 - (pts[:, 1] - lo[1]) / extent[1]) * (h - 1)).round().astype(int)

    order: dict = {}
    for g in group_labels:
        order.setdefault(g, len(order))
    r = marker_radius
    oy, ox = np.mgrid[-r:r + 1, -r:r + 1]
    disc = (ox * ox + oy * oy) <= r * r
    oy, ox = oy[disc], ox[disc]
    for x, y, g in zip(px, py, group_labels):
        yy, xx = y + oy, x + ox
        keep = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        canvas[yy[keep], xx[keep]] = PALETTE[order[g] % len(PALETTE)]
    return _save_rgb(canvas, path)


def hot_colormap(t: np.ndarray) -> np.ndarray:
    """Black -> red -> yellow -> white; every channel is non-decreasing in ``t``."""
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    return np.stack([np.clip(3 * t, 0, 1), np.clip(3 * t - 1, 0, 1), np.clip(3 * t - 2, 0, 1)], axis=-1)


def overlay_pixels(img, cam, alpha: float = 0.5) -> np.ndarray:
    """Float RGB overlay in [0, 1] at the image's resolution."""
    img = np.asarray(img, dtype=np.float64)
    cam = np.asarray(cam, dtype=np.float64)
    h, w = img.shape
    heat = cam if cam.shape == img.shape else upsample_heatmap(cam, w, h)
    return (1 - alpha) * img[..., None] + alpha * hot_colormap(heat)


def render_heatmap_overlay(img, cam, path, zoom: int = 4, alpha: float = 0.5) -> Path:
    rgb = overlay_pixels(img, cam, alpha)
    rgb8 = np.floor(rgb * 255 + 0.5).astype(np.uint8)
    if zoom > 1:
        rgb8 = rgb8.repeat(zoom, axis=0).repeat(zoom, axis=1)
    return _save_rgb(rgb8, path)
