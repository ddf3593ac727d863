"""Gradient-weighted class activation maps."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from ..imgproc.image import GrayImage, resize
from .net import ConvNet


def gradcam(net: ConvNet, img, class_index: int) -> np.ndarray:
    """Grad-CAM over the final convolutional feature map ``A``.

    Channel weights are the spatial means of d(class logit)/dA; the map is
    ``ReLU(sum_k w_k A_k)`` scaled so its maximum is 1 (left all-zero when
    nothing is positive).
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[None, None]
    elif img.ndim == 3:
        img = img[None]
    if img.shape[0] != 1:
        raise ParameterError("gradcam takes a single image")
    if not 0 <= class_index < net.n_classes:
        raise ParameterError(f"class_index must lie in [0, {net.n_classes})")
    f = net.feature_layer
    A = net.forward_to(img, f + 1)
    x = A
    for layer in net.layers[f + 1:]:
        x = layer.forward(x, train=False)
    dlogits = np.zeros_like(x)
    dlogits[0, class_index] = 1.0
    dA = net.backward(dlogits, stop=f + 1)
    weights = dA[0].mean(axis=(1, 2))
    cam = np.maximum(np.tensordot(weights, A[0], axes=1), 0.0)
    peak = cam.max()
    return cam / peak if peak > 0 else cam


def upsample_heatmap(cam: np.ndarray, w: int, h: int) -> GrayImage:
    ch, cw = cam.shape
    if w < cw or h < ch:
        raise ParameterError(f"target {w}x{h} is smaller than the {cw}x{ch} map")
    return resize(cam, w, h, "bilinear")


def window_mass(heat: np.ndarray, window: tuple[int, int, int, int]) -> float:
    """Fraction of total heat inside ``(x0, y0, x1, y1)`` (half-open); NaN if no heat."""
    x0, y0, x1, y1 = window
    total = float(heat.sum())
    if total <= 0:
        return float("nan")
    return float(heat[y0:y1, x0:x1].sum()) / total
