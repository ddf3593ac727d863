"""Mini-batch SGD with seeded shuffling and on-the-fly augmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..corpus import make_rng
from ..errors import ParameterError, TrainingError
from ..imgproc.pipeline import draw_augment, hflip, rotate
from .net import ConvNet, _weights_array, loss_and_grads, weighted_cross_entropy


@dataclass
class History:
    loss: list[float] = field(default_factory=list)        # eval-mode loss on the training set
    batch_loss: list[float] = field(default_factory=list)  # mean mini-batch loss per epoch
    accuracy: list[float] = field(default_factory=list)    # eval-mode training accuracy


def augment_batch(batch: np.ndarray, rng: np.random.Generator, max_rotation: float,
                  hflip_prob: float) -> np.ndarray:
    out = np.empty_like(batch)
    for i, sample in enumerate(batch):
        angle, flip = draw_augment(rng, max_rotation, hflip_prob)
        img = rotate(sample[0], angle)
        out[i, 0] = hflip(img) if flip else img
    return out


def evaluate_loss(net: ConvNet, X, y, weights) -> tuple[float, float]:
    probs = net.predict(X)
    return weighted_cross_entropy(probs, y, weights), float((probs.argmax(axis=1) == y).mean())


def train(net: ConvNet, X, y, epochs: int = 20, lr: float = 0.01, batch_size: int = 32,
          class_weights=None, augment: tuple[float, float] | None = None, seed: int = 0):
    """Train ``net`` in place with plain SGD; returns ``(net, history)``.

    ``augment`` is ``(max_rotation_degrees, hflip_prob)`` applied per sample
    per epoch, or None. Training stops with ``TrainingError`` as soon as a
    mini-batch loss is not finite.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    if len(X) == 0:
        raise ParameterError("training set is empty")
    if batch_size < 1:
        raise ParameterError(f"batch_size must be positive, got {batch_size}")
    weights = np.ones(net.n_classes) if class_weights is None else _weights_array(class_weights, net.n_classes)
    rng = make_rng(seed)
    history = History()
    n = len(X)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        total, seen = 0.0, 0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            xb = X[idx]
            if augment is not None:
                xb = augment_batch(xb, rng, *augment)
            loss, grads = loss_and_grads(net, xb, y[idx], weights, train_mode=True, rng=rng)
            if not math.isfinite(loss):
                raise TrainingError(f"loss became non-finite in epoch {epoch}", epoch=epoch)
            if lr != 0:
                for name, p in net.named_params():
                    p -= lr * grads[name]
            total += loss * len(idx)
            seen += len(idx)
        eval_loss, acc = evaluate_loss(net, X, y, weights)
        if not math.isfinite(eval_loss):
            raise TrainingError(f"loss became non-finite in epoch {epoch}", epoch=epoch)
        history.batch_loss.append(total / seen)
        history.loss.append(eval_loss)
        history.accuracy.append(acc)
    return net, history
