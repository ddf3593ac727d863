"""Binary soft-margin SVM trained by sequential minimal optimisation.

Working pairs are chosen by the first-order maximal-violating-pair rule on
the dual gradient. When a selected pair cannot move (degenerate kernel
rows), the second index is redrawn at random among violators using the
seeded generator, so training is deterministic for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import make_rng
from .errors import DegenerateProblemError, NumericError, ParameterError

TAU = 1e-12


@dataclass(frozen=True)
class Kernel:
    name: str = "rbf"
    gamma: float | None = None

    def __post_init__(self):
        if self.name not in ("linear", "rbf"):
            raise ParameterError(f"unknown kernel {self.name!r}")
        if self.name == "rbf" and self.gamma is not None and not self.gamma > 0:
            raise ParameterError(f"rbf gamma must be positive, got {self.gamma}")

    def __call__(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        A = np.atleast_2d(A)
        B = np.atleast_2d(B)
        if self.name == "linear":
            return A @ B.T
        d = (np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :]
             - 2.0 * (A @ B.T))
        return np.exp(-self.gamma * np.maximum(d, 0.0))

    def to_dict(self):
        return {"name": self.name, "gamma": self.gamma}


def linear() -> Kernel:
    return Kernel("linear")


def rbf(gamma: float) -> Kernel:
    return Kernel("rbf", float(gamma))


def default_gamma(X: np.ndarray) -> float:
    var = float(np.var(X))
    return 1.0 / (2.0 * var) if var > 0 else 1.0


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray  # alpha_i * y_i
    bias: float
    kernel: Kernel
    C: float
    tol: float
    support_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    n_iter: int = 0
    converged: bool = True

    @property
    def alphas(self) -> np.ndarray:
        return np.abs(self.dual_coefs)

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if len(self.dual_coefs) == 0:
            return np.full(X.shape[0], self.bias)
        return self.kernel(X, self.support_vectors) @ self.dual_coefs + self.bias

    def predict_labels(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0.0, 1, -1)

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.to_dict(), "C": self.C, "tol": self.tol,
            "bias": self.bias, "support_vectors": self.support_vectors.tolist(),
            "dual_coefs": self.dual_coefs.tolist(),
            "support_indices": self.support_indices.tolist(),
            "n_iter": self.n_iter, "converged": self.converged,
            "dims": int(self.support_vectors.shape[1]) if self.support_vectors.ndim == 2 else 0,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        return cls(
            support_vectors=np.asarray(d["support_vectors"], dtype=np.float64).reshape(
                len(d["dual_coefs"]), -1) if d["support_vectors"] else np.zeros((0, int(d.get("dims", 0)))),
            dual_coefs=np.asarray(d["dual_coefs"], dtype=np.float64),
            bias=float(d["bias"]), kernel=Kernel(**d["kernel"]), C=float(d["C"]),
            tol=float(d["tol"]), support_indices=np.asarray(d.get("support_indices", []), dtype=int),
            n_iter=int(d.get("n_iter", 0)), converged=bool(d.get("converged", True)),
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path

    @classmethod
    def load(cls, path) -> "SvmModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def predict(model: SvmModel, x) -> tuple[int, float]:
    """Label in {-1, +1} and raw decision value; an exact zero counts as +1."""
    value = float(model.decision_function(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])
    return (1 if value >= 0.0 else -1), value


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int,
         rng: np.random.Generator):
    n = len(y)
    alpha = np.zeros(n)
    # E[t] = sum_s alpha_s y_s K[s, t] - y_t  (prediction error without bias)
    E = -y.astype(np.float64)
    diag = np.diag(K).copy()
    it = 0
    converged = False
    while it < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            converged = True
            break
        score = -E
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        if score[i] - score[j] <= tol:
            converged = True
            break
        moved = _take_step(i, j, K, diag, y, alpha, E, C)
        if not moved:
            violators = np.flatnonzero(low & (score < score[i] - tol))
            violators = violators[violators != i]
            if violators.size:
                moved = _take_step(i, int(rng.choice(violators)), K, diag, y, alpha, E, C)
        it += 1
        if not moved:
            break
    return alpha, E, it, converged


def _take_step(i, j, K, diag, y, alpha, E, C) -> bool:
    yi, yj = y[i], y[j]
    ai, aj = alpha[i], alpha[j]
    if yi != yj:
        lo, hi = max(0.0, aj - ai), min(C, C + aj - ai)
    else:
        lo, hi = max(0.0, ai + aj - C), min(C, ai + aj)
    if hi - lo <= 0:
        return False
    eta = max(diag[i] + diag[j] - 2.0 * K[i, j], TAU)
    aj_new = min(max(aj + yj * (E[i] - E[j]) / eta, lo), hi)
    if abs(aj_new - aj) < 1e-14 * max(1.0, C):
        return False
    ai_new = ai + yi * yj * (aj - aj_new)
    ai_new, aj_new = _snap(ai_new, C), _snap(aj_new, C)
    di, dj = ai_new - ai, aj_new - aj
    alpha[i], alpha[j] = ai_new, aj_new
    E += di * yi * K[i] + dj * yj * K[j]
    return True


def _snap(a: float, C: float) -> float:
    # park multipliers within rounding distance of a bound exactly on it
    eps = 1e-12 * max(1.0, C)
    if a < eps:
        return 0.0
    if a > C - eps:
        return C
    return a


def _bias(alpha, E, y, C) -> float:
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(-E[free].mean())
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    m = float(np.max(-E[up])) if up.any() else -np.inf
    M = float(np.min(-E[low])) if low.any() else np.inf
    if np.isinf(m):
        return M
    if np.isinf(M):
        return m
    return (m + M) / 2.0


def train_svm(X, y, kernel: Kernel | str | None = None, C: float = 1.0, tol: float = 1e-3,
              seed: int = 0, max_passes: int = 200) -> SvmModel:
    """Fit a binary SVM; ``y`` holds labels in {-1, +1}.

    ``max_passes`` bounds the optimiser at ``max_passes * n`` pair updates.
    The problem is always solved with the first sample labelled +1 and the
    result negated otherwise, so flipping every label negates the decision
    function exactly.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != len(y) or len(y) < 2:
        raise ParameterError(f"X must be (n >= 2, d) with one label per row; got {X.shape}, {len(y)}")
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite feature values")
    if not np.all(np.isin(y, (-1, 1))):
        raise ParameterError("labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise DegenerateProblemError("training labels contain a single class")
    if not C > 0:
        raise ParameterError(f"C must be positive, got {C}")
    if kernel is None or kernel == "rbf":
        kernel = rbf(default_gamma(X))
    elif kernel == "linear":
        kernel = linear()
    elif kernel.name == "rbf" and kernel.gamma is None:
        kernel = rbf(default_gamma(X))

    flip = y[0] < 0
    ys = (-y if flip else y).astype(np.float64)
    K = kernel(X, X)
    alpha, E, it, converged = _smo(K, ys, float(C), float(tol), max_passes * len(ys), make_rng(seed))
    b = _bias(alpha, E, ys, C)
    sv = np.flatnonzero(alpha > 0)
    coefs = alpha[sv] * ys[sv]
    if flip:
        coefs, b = -coefs, -b
    return SvmModel(support_vectors=X[sv].copy(), dual_coefs=coefs, bias=float(b), kernel=kernel,
                    C=float(C), tol=float(tol), support_indices=sv, n_iter=it, converged=converged)


def dual_objective(alpha: np.ndarray, X, y, kernel: Kernel) -> float:
    """Dual objective to maximise: ``sum(alpha) - 1/2 alpha^T Q alpha``."""
    y = np.asarray(y, dtype=np.float64)
    Q = np.outer(y, y) * kernel(X, X)
    return float(alpha.sum() - 0.5 * alpha @ Q @ alpha)


def full_alphas(model: SvmModel, n: int) -> np.ndarray:
    a = np.zeros(n)
    a[model.support_indices] = model.alphas
    return a


def kkt_violations(model: SvmModel, X, y) -> np.ndarray:
    """Per-sample KKT violation of the trained model on its training data."""
    y = np.asarray(y, dtype=np.float64)
    alpha = full_alphas(model, len(y))
    margin = y * model.decision_function(X)
    C = model.C
    viol = np.zeros(len(y))
    at_zero = alpha <= 0
    at_c = alpha >= C
    free = ~at_zero & ~at_c
    viol[at_zero] = np.maximum(0.0, 1.0 - margin[at_zero])
    viol[at_c] = np.maximum(0.0, margin[at_c] - 1.0)
    viol[free] = np.abs(margin[free] - 1.0)
    return viol
