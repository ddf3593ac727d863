"""Sequential convolutional classifier, weighted cross-entropy and checkpoints."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from ..corpus import make_rng
from ..errors import ParameterError, ShapeError
from .layers import Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D, ReLU, layer_from_spec, softmax

LOG_FLOOR = 1e-12


class ConvNet:
    """A stack of layers ending in class logits; ``forward`` applies softmax.

    ``rng`` drives dropout masks in train mode.
    """

    def __init__(self, layers: Sequence[Layer], input_shape: tuple[int, int, int], seed: int = 0):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.seed = seed
        self.rng = make_rng(seed)

    @classmethod
    def build(cls, input_size: int = 36, n_classes: int = 2, channels: tuple[int, int] = (8, 16),
              hidden: int = 128, dropout: float = 0.5, seed: int = 0) -> "ConvNet":
        """Two conv blocks, then Flatten -> Dropout -> Dense(hidden) -> ReLU -> Dense(n_classes).

        Weights use He-normal scaling ``N(0, 2 / fan_in)``; biases start at zero.
        """
        init = make_rng(seed)
        c1, c2 = channels
        side = (input_size // 2) // 2
        layers = [
            Conv2D(1, c1, 3, init), ReLU(), MaxPool2D(),
            Conv2D(c1, c2, 3, init), ReLU(), MaxPool2D(),
            Flatten(), Dropout(dropout),
            Dense(c2 * side * side, hidden, init), ReLU(),
            Dense(hidden, n_classes, init),
        ]
        # dropout stream is independent of the initialisation stream
        return cls(layers, (1, input_size, input_size), seed=seed + 1)

    @property
    def n_classes(self) -> int:
        return next(l for l in reversed(self.layers) if isinstance(l, Dense)).out_features

    @property
    def feature_layer(self) -> int:
        """Index of the layer that outputs the final convolutional feature map."""
        last_conv = max(i for i, l in enumerate(self.layers) if isinstance(l, Conv2D))
        nxt = last_conv + 1
        if nxt < len(self.layers) and isinstance(self.layers[nxt], ReLU):
            return nxt
        return last_conv

    # -- parameters ------------------------------------------------------

    def named_params(self):
        for i, layer in enumerate(self.layers):
            for k in sorted(layer.params):
                yield f"{i}.{k}", layer.params[k]

    def named_grads(self):
        for i, layer in enumerate(self.layers):
            for k in sorted(layer.params):
                yield f"{i}.{k}", layer.grads[k]

    def param_dict(self) -> dict[str, np.ndarray]:
        return dict(self.named_params())

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.named_params()}

    def load_params(self, params: dict[str, np.ndarray]):
        for name, arr in self.named_params():
            arr[...] = params[name]

    # -- passes ----------------------------------------------------------

    def _check_input(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != 4 or batch.shape[1:] != self.input_shape:
            raise ShapeError(f"expected input (n, {', '.join(map(str, self.input_shape))}), got {batch.shape}")
        return batch

    def forward_to(self, batch, stop: int | None = None, train_mode: bool = False,
                   rng: np.random.Generator | None = None) -> np.ndarray:
        """Run layers ``[0, stop)`` (all layers when ``stop`` is None)."""
        x = self._check_input(batch)
        rng = rng if rng is not None else self.rng
        for layer in self.layers[:stop]:
            x = layer.forward(x, train=train_mode, rng=rng)
        return x

    def logits(self, batch, train_mode=False, rng=None) -> np.ndarray:
        return self.forward_to(batch, None, train_mode, rng)

    def forward(self, batch, train_mode: bool = False, rng=None) -> np.ndarray:
        return softmax(self.logits(batch, train_mode, rng))

    def backward(self, dlogits: np.ndarray, stop: int = 0) -> np.ndarray:
        """Back-propagate from the logits down to the input of layer ``stop``."""
        d = dlogits
        for layer in reversed(self.layers[stop:]):
            d = layer.backward(d)
        return d

    def predict(self, batch, batch_size: int = 256) -> np.ndarray:
        batch = np.asarray(batch, dtype=np.float64)
        out = [self.forward(batch[i:i + batch_size]) for i in range(0, len(batch), batch_size)]
        return np.concatenate(out) if out else np.zeros((0, self.n_classes))

    # -- checkpoints -----------------------------------------------------

    def save(self, path) -> tuple[Path, Path]:
        """Write little-endian float64 parameters to ``path`` plus a JSON shape manifest."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        entries, chunks = [], []
        for name, arr in self.named_params():
            entries.append({"name": name, "shape": list(arr.shape)})
            chunks.append(np.ascontiguousarray(arr, dtype="<f8").ravel())
        path.write_bytes(np.concatenate(chunks).tobytes() if chunks else b"")
        meta = path.with_suffix(path.suffix + ".json")
        meta.write_text(json.dumps({
            "dtype": "<f8", "input_shape": list(self.input_shape), "seed": self.seed,
            "layers": [l.spec() for l in self.layers], "params": entries}, indent=2))
        return path, meta

    @classmethod
    def load(cls, path) -> "ConvNet":
        path = Path(path)
        meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        layers = [layer_from_spec(s) for s in meta["layers"]]
        net = cls(layers, tuple(meta["input_shape"]), seed=meta.get("seed", 0))
        flat = np.frombuffer(path.read_bytes(), dtype="<f8")
        offset = 0
        params = {}
        for e in meta["params"]:
            size = int(np.prod(e["shape"]))
            params[e["name"]] = flat[offset:offset + size].reshape(e["shape"])
            offset += size
        if offset != flat.size:
            raise ShapeError("checkpoint size does not match its manifest")
        net.load_params(params)
        return net


def weighted_cross_entropy(probs: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> float:
    """``-sum(w_y log p_y) / sum(w_y)`` with probabilities floored at 1e-12."""
    w = weights[labels]
    p = probs[np.arange(len(labels)), labels]
    return float(-(w * np.log(np.maximum(p, LOG_FLOOR))).sum() / w.sum())


def loss_and_grads(net: ConvNet, batch, labels, class_weights=None, train_mode: bool = True,
                   rng: np.random.Generator | None = None):
    """Weighted cross-entropy on ``batch`` and the gradient of every parameter.

    Returns ``(loss, grads)`` with ``grads`` keyed like ``net.named_params()``.
    """
    labels = np.asarray(labels, dtype=np.intp)
    K = net.n_classes
    if labels.ndim != 1 or len(labels) != len(batch):
        raise ShapeError("one label per sample required")
    if labels.size and (labels.min() < 0 or labels.max() >= K):
        raise ParameterError(f"labels must be class indices in [0, {K})")
    weights = np.ones(K) if class_weights is None else _weights_array(class_weights, K)
    logits = net.logits(batch, train_mode=train_mode, rng=rng)
    probs = softmax(logits)
    loss = weighted_cross_entropy(probs, labels, weights)
    w = weights[labels]
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(labels)), labels] = 1.0
    dlogits = (w / w.sum())[:, None] * (probs - onehot)
    net.backward(dlogits)
    return loss, {k: g.copy() for k, g in net.named_grads()}


def _weights_array(class_weights, K: int) -> np.ndarray:
    if hasattr(class_weights, "weights"):
        class_weights = class_weights.weights
    if isinstance(class_weights, dict):
        return np.array([float(class_weights[k]) for k in range(K)])
    arr = np.asarray(class_weights, dtype=np.float64)
    if arr.shape != (K,):
        raise ShapeError(f"expected {K} class weights, got shape {arr.shape}")
    return arr
