"""Independent reference implementations used only by the tests.

Each one is written for clarity (explicit loops, no shared helpers from
the package) so it can catch errors in the vectorised code.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from cxrbias.nn.layers import MaxPool2D, ReLU  # only to read cached kink state


# -- resampling --------------------------------------------------------------

def bilinear_resize(img: np.ndarray, w: int, h: int) -> np.ndarray:
    """Convolve-and-sample with a triangle filter, support widened when shrinking."""
    H, W = img.shape
    sy, sx = H / h, W / w
    out = np.zeros((h, w))
    for i in range(h):
        cy = (i + 0.5) * sy
        for j in range(w):
            cx = (j + 0.5) * sx
            acc = wsum = 0.0
            for y in range(H):
                ky = max(0.0, 1.0 - abs((y + 0.5 - cy) / max(sy, 1.0)))
                if ky == 0.0:
                    continue
                for x in range(W):
                    kx = max(0.0, 1.0 - abs((x + 0.5 - cx) / max(sx, 1.0)))
                    acc += ky * kx * img[y, x]
                    wsum += ky * kx
            out[i, j] = acc / wsum
    return out


# -- equalisation ------------------------------------------------------------

def _bin(v: float) -> int:
    return min(255, max(0, int(math.floor(v * 255 + 0.5))))


def hist_eq(img: np.ndarray) -> np.ndarray:
    bins = [[_bin(v) for v in row] for row in img]
    flat = [b for row in bins for b in row]
    n = len(flat)
    counts = [0] * 256
    for b in flat:
        counts[b] += 1
    cdf, run = [], 0
    for c in counts:
        run += c
        cdf.append(run)
    cmin = cdf[min(flat)]
    if cmin == n:
        return img.copy()
    return np.array([[(cdf[b] - cmin) / (n - cmin) for b in row] for row in bins])


def _tile_table(values: list[int], clip: float):
    counts = [0.0] * 256
    for b in values:
        counts[b] += 1
    occupied = [k for k in range(256) if counts[k] > 0]
    if len(occupied) <= 1:
        return None
    excess = sum(max(c - clip, 0.0) for c in counts)
    if excess > 0:
        counts = [min(c, clip) + excess / 256 for c in counts]
    cdf, run = [], 0.0
    for c in counts:
        run += c
        cdf.append(run)
    cmin = cdf[occupied[0]]
    n = len(values)
    return [min(1.0, max(0.0, (c - cmin) / (n - cmin))) for c in cdf]


def clahe(img: np.ndarray, clip: float, tiles: tuple[int, int]) -> np.ndarray:
    """Per-tile clipped equalisation, bilinear blending between tile centres."""
    tx, ty = tiles
    H, W = img.shape
    ey = [k * H // ty for k in range(ty + 1)]
    ex = [k * W // tx for k in range(tx + 1)]
    bins = [[_bin(v) for v in row] for row in img]
    tables = {}
    for r in range(ty):
        for c in range(tx):
            vals = [bins[y][x] for y in range(ey[r], ey[r + 1]) for x in range(ex[c], ex[c + 1])]
            tables[r, c] = _tile_table(vals, clip)
    cy = [(ey[r] + ey[r + 1] - 1) / 2 for r in range(ty)]
    cx = [(ex[c] + ex[c + 1] - 1) / 2 for c in range(tx)]

    def neighbours(p, centres):
        if len(centres) == 1 or p <= centres[0]:
            return [(0, 1.0)]
        if p >= centres[-1]:
            return [(len(centres) - 1, 1.0)]
        k = max(i for i in range(len(centres)) if centres[i] <= p)
        t = (p - centres[k]) / (centres[k + 1] - centres[k])
        return [(k, 1 - t), (k + 1, t)]

    out = np.zeros_like(img, dtype=float)
    for y in range(H):
        for x in range(W):
            acc = 0.0
            for (r, wr), (c, wc) in itertools.product(neighbours(y, cy), neighbours(x, cx)):
                tab = tables[r, c]
                val = img[y, x] if tab is None else tab[bins[y][x]]
                acc += wr * wc * val
            out[y, x] = acc
    return out


# -- blur / morphology -------------------------------------------------------

def gaussian_taps(sigma: float) -> np.ndarray:
    r = math.ceil(3 * sigma)
    taps = [math.exp(-(k * k) / (2 * sigma * sigma)) for k in range(-r, r + 1)]
    s = math.fsum(taps)
    return np.array([t / s for t in taps])


def blur_1d(signal: np.ndarray, sigma: float) -> np.ndarray:
    """1-D blur with half-sample mirror boundaries: index -1 is sample 0."""
    taps = gaussian_taps(sigma)
    r = len(taps) // 2
    n = len(signal)

    def at(i):
        period = 2 * n
        i %= period
        return signal[i] if i < n else signal[period - 1 - i]

    return np.array([sum(taps[k + r] * at(i + k) for k in range(-r, r + 1)) for i in range(n)])


def dilate(mask: np.ndarray, radius: float) -> np.ndarray:
    H, W = mask.shape
    on = np.argwhere(mask)
    out = np.zeros_like(mask, dtype=bool)
    for y in range(H):
        for x in range(W):
            out[y, x] = any((y - a) ** 2 + (x - b) ** 2 <= radius * radius for a, b in on)
    return out


# -- metrics -----------------------------------------------------------------

def auroc_pairs(scores, labels) -> float:
    """O(n^2) Mann-Whitney: wins plus half-credit ties over all pos/neg pairs."""
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


# -- t-SNE affinities --------------------------------------------------------

def joint_affinities(X: np.ndarray, perplexity: float) -> np.ndarray:
    """Bisection on sigma (not precision) per row, to machine precision."""
    n = len(X)
    D = [[float(np.sum((X[i] - X[j]) ** 2)) for j in range(n)] for i in range(n)]
    Pc = np.zeros((n, n))
    target = math.log2(perplexity)
    for i in range(n):
        others = [j for j in range(n) if j != i]

        def row(sigma):
            w = [math.exp(-(D[i][j] - min(D[i][k] for k in others)) / (2 * sigma * sigma)) for j in others]
            s = math.fsum(w)
            return [v / s for v in w]

        def entropy_bits(sigma):
            return -sum(p * math.log2(p) for p in row(sigma) if p > 0)

        lo, hi = 1e-8, 1.0
        while entropy_bits(hi) < target:
            hi *= 2
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if entropy_bits(mid) < target:
                lo = mid
            else:
                hi = mid
        for j, p in zip(others, row(0.5 * (lo + hi))):
            Pc[i, j] = p
    return (Pc + Pc.T) / (2 * n)


# -- finite differences ------------------------------------------------------

FD_STEP = 1e-5
FD_REL = 1e-4


def kink_state(layers):
    """ReLU masks and pooling choices; a finite difference that changes them straddles a kink."""
    out = []
    for layer in layers:
        if isinstance(layer, ReLU):
            out.append(layer._mask.copy())
        elif isinstance(layer, MaxPool2D):
            out.append(layer._cache[1].copy())
    return out


def _same(a, b):
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def check_gradient(f, arr, analytic, state, entries=None, h=FD_STEP, rel=FD_REL):
    """Central differences of scalar ``f`` w.r.t. ``arr`` (perturbed in place).

    ``entries`` limits the check to a list of index tuples. Entries whose
    +-h perturbation changes a ReLU mask or pooling choice straddle a kink
    and are skipped. Returns the largest relative error.
    """
    base = state()
    idxs = list(np.ndindex(*arr.shape)) if entries is None else list(entries)
    num, ana, keep = [], [], []
    for idx in idxs:
        old = arr[idx]
        arr[idx] = old + h
        fp, sp = f(), state()
        arr[idx] = old - h
        fm, sm = f(), state()
        arr[idx] = old
        num.append((fp - fm) / (2 * h))
        ana.append(analytic[idx])
        keep.append(_same(sp, base) and _same(sm, base))
    f()
    keep = np.array(keep)
    assert keep.mean() > 0.9, "too many entries sit on a kink"
    a, n = np.array(ana)[keep], np.array(num)[keep]
    err = np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), 1e-7)
    assert err.max() < rel, f"max relative error {err.max():.2e}"
    return float(err.max())


# -- SVM dual ----------------------------------------------------------------

def _project(v: np.ndarray, y: np.ndarray, C: float) -> np.ndarray:
    """Euclidean projection onto {0 <= a <= C, sum(a * y) = 0} via bisection on the multiplier."""
    def g(lam):
        return float(np.sum(y * np.clip(v - lam * y, 0.0, C)))
    lo, hi = -1.0, 1.0
    while g(lo) < 0:
        lo *= 2
    while g(hi) > 0:
        hi *= 2
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(lo)):
            break
    return np.clip(v - 0.5 * (lo + hi) * y, 0.0, C)


def svm_dual_qp(K: np.ndarray, y: np.ndarray, C: float, iters: int = 20000, tol: float = 1e-13):
    """Accelerated projected gradient ascent on the soft-margin dual.

    Returns ``(alpha, bias, objective)``.
    """
    y = y.astype(float)
    Q = (y[:, None] * y[None, :]) * K
    L = float(np.linalg.eigvalsh(Q).max()) + 1e-12
    a = np.zeros(len(y))
    z, t = a.copy(), 1.0
    for _ in range(iters):
        a_next = _project(z + (1.0 - Q @ z) / L, y, C)
        t_next = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        z = a_next + ((t - 1) / t_next) * (a_next - a)
        step = np.abs(a_next - a).max()
        a, t = a_next, t_next
        if step < tol * max(1.0, C):
            break
    f = K @ (a * y)
    free = (a > 1e-6 * C) & (a < C * (1 - 1e-6))
    if free.any():
        b = float(np.mean(y[free] - f[free]))
    else:
        # any b between the bounds from the KKT conditions; take the midpoint
        up = y - f
        lower = max(up[((y > 0) & (a < C)) | ((y < 0) & (a > 0))], default=-np.inf)
        upper = min(up[((y > 0) & (a > 0)) | ((y < 0) & (a < C))], default=np.inf)
        b = 0.5 * (lower + upper)
    obj = float(a.sum() - 0.5 * a @ Q @ a)
    return a, b, obj
