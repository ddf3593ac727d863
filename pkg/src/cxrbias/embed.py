"""Exact (O(n^2)) t-SNE with perplexity calibration.

The optimiser follows the usual recipe: early exaggeration of the input
affinities, a two-stage momentum schedule and per-coordinate adaptive gains.
The embedding is re-centred after every update.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import make_rng
from .errors import CalibrationError, NumericError, ParameterError

Q_FLOOR = 1e-12


@dataclass(frozen=True)
class TsneParams:
    perplexity: float = 30.0
    learning_rate: float = 200.0
    iterations: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum: tuple[float, float] = (0.5, 0.8)
    momentum_switch: int = 250
    init_scale: float = 1e-4
    min_gain: float = 0.01
    pca_dims: int | None = None
    trace_every: int = 10

    @classmethod
    def from_dict(cls, d: dict | None) -> "TsneParams":
        d = dict(d or {})
        if "momentum" in d:
            d["momentum"] = tuple(d["momentum"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["momentum"] = list(self.momentum)
        return d


@dataclass
class Embedding:
    points: np.ndarray
    kl_trace: list[float]
    seed: int
    params: TsneParams = field(default_factory=TsneParams)

    @property
    def trace_iterations(self) -> list[int]:
        step = self.params.trace_every
        return [step * (k + 1) for k in range(len(self.kl_trace))]

    def kl_at(self, iteration: int) -> float:
        return self.kl_trace[self.trace_iterations.index(iteration)]

    def write_csv(self, path, datasets: Sequence[str], labels: Sequence[str]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "x", "y", "dataset", "label"])
            for i, (x, y) in enumerate(self.points):
                w.writerow([i, repr(float(x)), repr(float(y)), datasets[i], labels[i]])
        return path

    def write_trace(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps([float(v) for v in self.kl_trace]))
        return path


def pairwise_sq_dists(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ParameterError(f"need an (n >= 2, d) matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NumericError("input contains non-finite values")
    Xc = X - X.mean(axis=0)
    sq = np.einsum("ij,ij->i", Xc, Xc)
    D = sq[:, None] + sq[None, :] - 2.0 * (Xc @ Xc.T)
    D = np.maximum((D + D.T) / 2.0, 0.0)
    np.fill_diagonal(D, 0.0)
    return D


def _row_entropy(d: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """Shannon entropy (nats) and normalised row of exp(-beta * d); ``d`` min-shifted."""
    p = np.exp(-beta * d)
    s = p.sum()
    h = math.log(s) + beta * float(d @ p) / s
    return h, p / s


def conditional_affinities(D, perplexity: float, tol: float = 1e-10,
                           max_bracket: int = 64, max_bisect: int = 200):
    """Per-row Gaussian conditionals ``P[j|i]`` matching ``perplexity``.

    Returns ``(P_cond, beta)`` where ``beta[i] = 1 / (2 sigma_i^2)``.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if not 1.0 < perplexity < n:
        raise ParameterError(f"perplexity must satisfy 1 < perplexity < n={n}, got {perplexity}")
    target = math.log(perplexity)
    P = np.zeros((n, n))
    betas = np.zeros(n)
    for i in range(n):
        d = np.delete(D[i], i)
        d = d - d.min()
        scale = d.mean()
        beta = 1.0 / scale if scale > 0 else 1.0
        h, row = _row_entropy(d, beta)
        if abs(h - target) > tol:
            # expand geometrically until the target entropy is bracketed
            lo, hi = (beta, None) if h > target else (None, beta)
            for _ in range(max_bracket):
                if lo is not None and hi is not None:
                    break
                beta = beta * 2.0 if hi is None else beta / 2.0
                h, row = _row_entropy(d, beta)
                if h > target:
                    lo = beta
                else:
                    hi = beta
            else:
                if lo is None or hi is None:
                    raise CalibrationError(
                        f"row {i}: could not bracket perplexity {perplexity} in {max_bracket} steps")
            for _ in range(max_bisect):
                beta = math.sqrt(lo * hi)
                h, row = _row_entropy(d, beta)
                if abs(h - target) <= tol:
                    break
                if h > target:
                    lo = beta
                else:
                    hi = beta
            else:
                raise CalibrationError(f"row {i}: perplexity search did not converge")
        P[i, np.arange(n) != i] = row
        betas[i] = beta
    return P, betas


def calibrate_affinities(D, perplexity: float) -> np.ndarray:
    """Symmetric joint affinities ``(P_cond + P_cond^T) / (2n)`` summing to one."""
    Pc, _ = conditional_affinities(D, perplexity)
    P = (Pc + Pc.T) / (2.0 * Pc.shape[0])
    return P / P.sum()


def row_perplexities(P_cond: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(P_cond > 0, np.log2(P_cond), 0.0)
    return 2.0 ** (-(P_cond * logs).sum(axis=1))


def kl_divergence(P, Q) -> float:
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], Q_FLOOR))))


def student_t_affinities(Y):
    """Return ``(Q, num)`` where ``num[i,j] = 1 / (1 + |y_i - y_j|^2)`` (zero diagonal)."""
    Y = np.asarray(Y, dtype=np.float64)
    sq = np.einsum("ij,ij->i", Y, Y)
    d = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (Y @ Y.T), 0.0)
    num = 1.0 / (1.0 + d)
    np.fill_diagonal(num, 0.0)
    return num / num.sum(), num


def kl_gradient(P, Y) -> tuple[float, np.ndarray]:
    """KL(P || Q(Y)) and its gradient with respect to the embedding ``Y``."""
    Q, num = student_t_affinities(Y)
    W = (P - Q) * num
    grad = 4.0 * (np.diag(W.sum(axis=1)) - W) @ Y
    return kl_divergence(P, Q), grad


def pca_reduce(X: np.ndarray, dims: int) -> np.ndarray:
    Xc = X - X.mean(axis=0)
    dims = min(dims, *Xc.shape)
    U, S, _ = np.linalg.svd(Xc, full_matrices=False)
    # sign convention: largest-magnitude loading of each component positive
    signs = np.sign(U[np.argmax(np.abs(U[:, :dims]), axis=0), np.arange(dims)])
    signs[signs == 0] = 1.0
    return U[:, :dims] * S[:dims] * signs


def tsne(X, perplexity: float | None = None, seed: int = 0, iters: int | None = None,
         params: TsneParams | None = None) -> Embedding:
    """Embed the rows of ``X`` in two dimensions."""
    params = params or TsneParams()
    overrides = {}
    if perplexity is not None:
        overrides["perplexity"] = perplexity
    if iters is not None:
        overrides["iterations"] = iters
    if overrides:
        params = TsneParams(**{**asdict(params), **overrides})
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 5 or X.shape[1] < 1:
        raise ParameterError(f"t-SNE needs at least 5 rows and 1 column, got shape {X.shape}")
    if params.pca_dims:
        X = pca_reduce(X, params.pca_dims)

    n = X.shape[0]
    P = calibrate_affinities(pairwise_sq_dists(X), params.perplexity)
    rng = make_rng(seed)
    Y = rng.standard_normal((n, 2)) * params.init_scale
    Y -= Y.mean(axis=0)
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    trace: list[float] = []

    for it in range(1, params.iterations + 1):
        exaggerate = it <= params.exaggeration_iters
        Pe = P * params.early_exaggeration if exaggerate else P
        Q, num = student_t_affinities(Y)
        W = (Pe - Q) * num
        grad = 4.0 * (np.diag(W.sum(axis=1)) - W) @ Y
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite t-SNE gradient at iteration {it}", iteration=it)
        momentum = params.momentum[0] if it <= params.momentum_switch else params.momentum[1]
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, params.min_gain, out=gains)
        update = momentum * update - params.learning_rate * gains * grad
        Y = Y + update
        Y -= Y.mean(axis=0)
        if it % params.trace_every == 0:
            Q, _ = student_t_affinities(Y)
            trace.append(kl_divergence(P, Q))

    Y -= Y.mean(axis=0)
    if not np.all(np.isfinite(Y)):
        raise NumericError("embedding diverged", iteration=params.iterations)
    return Embedding(points=Y, kl_trace=trace, seed=int(seed), params=params)
