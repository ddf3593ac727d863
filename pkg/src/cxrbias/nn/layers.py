"""Layers with explicit forward/backward passes over ``float64`` numpy tensors.

Image tensors are laid out ``(batch, channels, height, width)``. Each layer
caches what its backward pass needs during ``forward`` and fills
``self.grads`` (same keys as ``self.params``) during ``backward``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ParameterError, ShapeError


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool = False, rng: np.random.Generator | None = None):
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spec(self) -> dict:
        return {"type": type(self).__name__}

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.spec().items() if k != "type")
        return f"{type(self).__name__}({args})"


class Conv2D(Layer):
    """Stride-1 convolution with "same" zero padding (odd kernel sizes)."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3,
                 rng: np.random.Generator | None = None):
        super().__init__()
        if kernel_size % 2 != 1:
            raise ParameterError("kernel_size must be odd for same padding")
        self.in_channels, self.out_channels, self.k = in_channels, out_channels, kernel_size
        fan_in = in_channels * kernel_size * kernel_size
        W = np.zeros((out_channels, in_channels, kernel_size, kernel_size))
        if rng is not None:
            W = rng.standard_normal(W.shape) * np.sqrt(2.0 / fan_in)
        self.params = {"W": W, "b": np.zeros(out_channels)}

    def spec(self):
        return {"type": "Conv2D", "in_channels": self.in_channels,
                "out_channels": self.out_channels, "kernel_size": self.k}

    def forward(self, x, train=False, rng=None):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ShapeError(f"Conv2D expects (n, {self.in_channels}, h, w), got {x.shape}")
        n, c, h, w = x.shape
        p = self.k // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        win = sliding_window_view(xp, (self.k, self.k), axis=(2, 3))  # n, c, h, w, k, k
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, c * self.k * self.k)
        Wm = self.params["W"].reshape(self.out_channels, -1)
        out = cols @ Wm.T + self.params["b"]
        self._cache = (x.shape, cols)
        return out.reshape(n, h, w, self.out_channels).transpose(0, 3, 1, 2)

    def backward(self, dout):
        (n, c, h, w), cols = self._cache
        k, p = self.k, self.k // 2
        d2 = dout.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        Wm = self.params["W"].reshape(self.out_channels, -1)
        self.grads = {"W": (d2.T @ cols).reshape(self.params["W"].shape), "b": d2.sum(axis=0)}
        dcols = (d2 @ Wm).reshape(n, h, w, c, k, k)
        dxp = np.zeros((n, c, h + 2 * p, w + 2 * p))
        for di in range(k):
            for dj in range(k):
                dxp[:, :, di:di + h, dj:dj + w] += dcols[:, :, :, :, di, dj].transpose(0, 3, 1, 2)
        return dxp[:, :, p:p + h, p:p + w]


class ReLU(Layer):
    def forward(self, x, train=False, rng=None):
        self._mask = x > 0
        return np.maximum(x, 0.0)  # NaN propagates rather than being zeroed

    def backward(self, dout):
        return np.where(self._mask, dout, 0.0)


class MaxPool2D(Layer):
    """2x2 max pooling, stride 2; trailing odd rows/columns are dropped.

    Gradient flows only to the first maximal element of each window.
    """

    def forward(self, x, train=False, rng=None):
        n, c, h, w = x.shape
        h2, w2 = h // 2, w // 2
        if h2 == 0 or w2 == 0:
            raise ShapeError(f"MaxPool2D needs spatial size >= 2, got {h}x{w}")
        crop = x[:, :, :2 * h2, :2 * w2]
        win = crop.reshape(n, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2, w2, 4)
        idx = win.argmax(axis=-1)
        self._cache = (x.shape, idx)
        return np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]

    def backward(self, dout):
        (n, c, h, w), idx = self._cache
        h2, w2 = h // 2, w // 2
        dwin = np.zeros((n, c, h2, w2, 4))
        np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
        dcrop = dwin.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * h2, 2 * w2)
        dx = np.zeros((n, c, h, w))
        dx[:, :, :2 * h2, :2 * w2] = dcrop
        return dx


class Flatten(Layer):
    def forward(self, x, train=False, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


class Dropout(Layer):
    """Inverted dropout: kept units are scaled by ``1 / (1 - p)`` at train time."""

    def __init__(self, p: float = 0.5):
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise ParameterError(f"dropout probability must lie in [0, 1), got {p}")
        self.p = p

    def spec(self):
        return {"type": "Dropout", "p": self.p}

    def forward(self, x, train=False, rng=None):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ParameterError("train-mode dropout needs a random generator")
        self._mask = (rng.random(x.shape) >= self.p) / (1.0 - self.p)
        return x * self._mask

    def backward(self, dout):
        return dout if self._mask is None else dout * self._mask


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator | None = None):
        super().__init__()
        self.in_features, self.out_features = in_features, out_features
        W = np.zeros((in_features, out_features))
        if rng is not None:
            W = rng.standard_normal(W.shape) * np.sqrt(2.0 / in_features)
        self.params = {"W": W, "b": np.zeros(out_features)}

    def spec(self):
        return {"type": "Dense", "in_features": self.in_features, "out_features": self.out_features}

    def forward(self, x, train=False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(f"Dense expects (n, {self.in_features}), got {x.shape}")
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dout):
        self.grads = {"W": self._x.T @ dout, "b": dout.sum(axis=0)}
        return dout @ self.params["W"].T


LAYER_TYPES = {cls.__name__: cls for cls in (Conv2D, ReLU, MaxPool2D, Flatten, Dropout, Dense)}


def layer_from_spec(spec: dict) -> Layer:
    spec = dict(spec)
    cls = LAYER_TYPES[spec.pop("type")]
    return cls(**spec)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
