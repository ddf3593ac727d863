"""Stage-1 bias probes: can a classifier tell which source an image came from?

Both probes run every (combination, recipe) cell independently and record
either a result or a structured error, so a report is never missing a cell.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..corpus import Manifest, SampleRef, load_manifest, make_rng, n_train_for, sample
from ..embed import tsne
from ..imgproc.image import load_image, resize
from ..imgproc.pipeline import AugmentRecipe
from ..nn.gradcam import gradcam, upsample_heatmap, window_mass
from ..nn.net import ConvNet
from ..nn.training import train
from ..svm import default_gamma, linear, rbf, train_svm
from .config import Combination, ProbeConfig, derive_seed
from .render import render_heatmap_overlay, render_scatter
from .report import ProbeReport, error_record

log = logging.getLogger(__name__)

GRADCAM_SIZE = 36


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in text)


def _draw(manifest: Manifest, combo: Combination, sizes: tuple[int, int], seed: int
          ) -> tuple[list[SampleRef], list[SampleRef]]:
    """Sample both groups of a combination.

    A self-pair is sampled once at the combined size and halved, so the two
    "groups" never share an image.
    """
    g0, g1 = combo.groups
    if combo.is_self_pair:
        refs = list(sample(manifest, g0.dataset, g0.label, sizes[0] + sizes[1], derive_seed(seed, 0)))
        return refs[:sizes[0]], refs[sizes[0]:]
    a = list(sample(manifest, g0.dataset, g0.label, sizes[0], derive_seed(seed, 0)))
    b = list(sample(manifest, g1.dataset, g1.label, sizes[1], derive_seed(seed, 1)))
    return a, b


def _load(manifest: Manifest, refs, size: int) -> np.ndarray:
    return np.stack([resize(load_image(manifest.resolve(r)), size, size, "bilinear") for r in refs])


def _split_indices(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    order = make_rng(seed).permutation(n)
    k = n_train_for(n, fraction)
    return order[:k], order[k:]


def _kernel(cfg: ProbeConfig, X: np.ndarray):
    s = cfg.svm
    if s.kernel == "linear":
        return linear()
    return rbf(s.gamma if s.gamma is not None else default_gamma(X))


@dataclass
class _Cell:
    combo: Combination
    recipe_name: str
    seed: int

    def base(self) -> dict:
        return {"combination": self.combo.name, "recipe": self.recipe_name,
                "groups": [g.name for g in self.combo.groups], "seed": self.seed}


def _prepare(cfg: ProbeConfig, manifest: Manifest | None):
    out = Path(cfg.output_dir)
    (out / "figures").mkdir(parents=True, exist_ok=True)
    if manifest is None:
        manifest = load_manifest(cfg.manifest)
    return out, manifest


def run_tsne_svm_probe(cfg: ProbeConfig, manifest: Manifest | None = None) -> ProbeReport:
    """Per cell: sample, resize, apply recipe, flatten, joint t-SNE, split, SVM, test accuracy."""
    out, manifest = _prepare(cfg, manifest)
    report = ProbeReport("tsne-svm", cfg.to_dict())
    for ci, combo in enumerate(cfg.combinations):
        cseed = derive_seed(cfg.seed, ci)
        t0 = time.perf_counter()
        try:
            sizes = (cfg.group_size(combo.groups[0]), cfg.group_size(combo.groups[1]))
            a, b = _draw(manifest, combo, sizes, cseed)
            base_imgs = _load(manifest, a + b, cfg.image_size)
            load_error = None
        except Exception as exc:  # recorded per cell, the run continues
            load_error = exc
        t_load = time.perf_counter() - t0
        for rname, recipe in cfg.recipes.items():
            cell = _Cell(combo, rname, cseed)
            t1 = time.perf_counter()
            if load_error is not None:
                report.add(error_record(cell.base(), load_error, stage="sampling"))
                report.timings.append({"combination": combo.name, "recipe": rname, "seconds": t_load})
                continue
            try:
                report.add(_tsne_svm_cell(cfg, cell, recipe, base_imgs, a, b, out))
            except Exception as exc:
                log.warning("cell %s/%s failed: %s", combo.name, rname, exc)
                report.add(error_record(cell.base(), exc))
            report.timings.append({"combination": combo.name, "recipe": rname,
                                   "seconds": t_load + time.perf_counter() - t1})
    return report


def _tsne_svm_cell(cfg: ProbeConfig, cell: _Cell, recipe: AugmentRecipe, base_imgs: np.ndarray,
                   a, b, out: Path) -> dict:
    X = np.stack([recipe(img).ravel() for img in base_imgs])
    y = np.concatenate([-np.ones(len(a), dtype=int), np.ones(len(b), dtype=int)])
    emb = tsne(X, seed=derive_seed(cell.seed, 1), params=cfg.tsne)
    tr, te = _split_indices(len(X), cfg.train_fraction, derive_seed(cell.seed, 2))
    Z = emb.points
    kernel = _kernel(cfg, Z[tr])
    model = train_svm(Z[tr], y[tr], kernel=kernel, C=cfg.svm.C, tol=cfg.svm.tol,
                      seed=derive_seed(cell.seed, 3), max_passes=cfg.svm.max_passes)
    test_acc = float((model.predict_labels(Z[te]) == y[te]).mean()) if len(te) else float("nan")
    train_acc = float((model.predict_labels(Z[tr]) == y[tr]).mean())

    stem = f"{_slug(cell.combo.name)}__{_slug(cell.recipe_name)}"
    names = [cell.combo.groups[0].name + (" [half 1]" if cell.combo.is_self_pair else "")] * len(a) + \
            [cell.combo.groups[1].name + (" [half 2]" if cell.combo.is_self_pair else "")] * len(b)
    fig = render_scatter(Z, names, out / "figures" / f"{stem}.png")
    refs = list(a) + list(b)
    csv = emb.write_csv(out / "embeddings" / f"{stem}.csv",
                        [r.dataset for r in refs], [r.label for r in refs])
    trace = emb.write_trace(out / "embeddings" / f"{stem}.trace.json")
    rec = cell.base()
    rec.update({
        "status": "ok",
        "accuracy": test_acc,
        "train_accuracy": train_acc,
        "n_train": int(len(tr)), "n_test": int(len(te)),
        "kl_final": emb.kl_trace[-1] if emb.kl_trace else None,
        "svm": {"kernel": kernel.to_dict(), "n_support": int(len(model.support_indices)),
                "converged": bool(model.converged), "n_iter": int(model.n_iter)},
        "artifacts": {"scatter": str(fig.relative_to(out)), "embedding": str(csv.relative_to(out)),
                      "kl_trace": str(trace.relative_to(out))},
    })
    return rec


def run_gradcam_probe(cfg: ProbeConfig, manifest: Manifest | None = None) -> ProbeReport:
    """Per cell: train a small ConvNet at 36x36 to tell the two groups apart,
    report held-out accuracy and emit Grad-CAM overlays."""
    out, manifest = _prepare(cfg, manifest)
    report = ProbeReport("gradcam", cfg.to_dict())
    nn = cfg.nn
    for ci, combo in enumerate(cfg.combinations):
        cseed = derive_seed(cfg.seed, ci)
        t0 = time.perf_counter()
        try:
            per = nn.n_train + nn.n_test
            a, b = _draw(manifest, combo, (per, per), cseed)
            imgs_a = _load(manifest, a, GRADCAM_SIZE)
            imgs_b = _load(manifest, b, GRADCAM_SIZE)
            load_error = None
        except Exception as exc:
            load_error = exc
        t_load = time.perf_counter() - t0
        for rname, recipe in cfg.recipes.items():
            cell = _Cell(combo, rname, cseed)
            t1 = time.perf_counter()
            if load_error is not None:
                report.add(error_record(cell.base(), load_error, stage="sampling"))
            else:
                try:
                    report.add(_gradcam_cell(cfg, cell, recipe, imgs_a, imgs_b, out))
                except Exception as exc:
                    log.warning("cell %s/%s failed: %s", combo.name, rname, exc)
                    report.add(error_record(cell.base(), exc))
            report.timings.append({"combination": combo.name, "recipe": rname,
                                   "seconds": t_load + time.perf_counter() - t1})
    return report


def _gradcam_cell(cfg: ProbeConfig, cell: _Cell, recipe: AugmentRecipe, imgs_a, imgs_b,
                  out: Path) -> dict:
    nn = cfg.nn
    ntr = nn.n_train
    prep = lambda imgs: np.stack([recipe(im) for im in imgs])[:, None]  # noqa: E731
    A, B = prep(imgs_a), prep(imgs_b)
    pool_X = np.concatenate([A[:ntr], B[:ntr]])
    pool_y = np.repeat([0, 1], ntr)
    test_X = np.concatenate([A[ntr:], B[ntr:]])
    test_y = np.repeat([0, 1], len(A) - ntr)
    tr, va = _split_indices(len(pool_X), 1.0 - nn.validation_fraction, derive_seed(cell.seed, 2))

    net = ConvNet.build(GRADCAM_SIZE, 2, tuple(nn.channels), nn.hidden, nn.dropout,
                        seed=derive_seed(cell.seed, 1))
    net, hist = train(net, pool_X[tr], pool_y[tr], epochs=nn.epochs, lr=nn.lr,
                      batch_size=nn.batch_size,
                      augment=(nn.max_rotation, nn.hflip_prob) if (nn.max_rotation or nn.hflip_prob) else None,
                      seed=derive_seed(cell.seed, 3))
    acc = lambda X, y: float((net.predict(X).argmax(axis=1) == y).mean()) if len(y) else float("nan")  # noqa: E731

    # overlays: the first test images of each group, explained for their true class
    per_group = nn.overlays // 2
    picks = [(g, k) for g in (0, 1) for k in range(min(per_group, len(A) - ntr))]
    overlays = []
    stem = f"{_slug(cell.combo.name)}__{_slug(cell.recipe_name)}"
    n_test_a = len(A) - ntr
    for g, k in picks:
        img = test_X[g * n_test_a + k, 0]
        path = render_heatmap_overlay(img, gradcam(net, img, g), out / "figures" / f"{stem}__cam_g{g}_{k}.png")
        overlays.append(str(path.relative_to(out)))
    # ROI mass and peak location over every test image of the tagged group
    masses, peaks = [], []
    if cell.combo.roi is not None:
        g = cell.combo.roi_group
        x0, y0, x1, y1 = cell.combo.roi
        for img in test_X[g * n_test_a:(g + 1) * n_test_a, 0]:
            heat = upsample_heatmap(gradcam(net, img, g), GRADCAM_SIZE, GRADCAM_SIZE)
            masses.append(window_mass(heat, cell.combo.roi))
            py, px = np.unravel_index(int(np.argmax(heat)), heat.shape)
            peaks.append(bool(heat.max() > 0 and x0 <= px < x1 and y0 <= py < y1))
    finite = [m for m in masses if np.isfinite(m)]
    rec = cell.base()
    rec.update({
        "status": "ok",
        "accuracy": acc(test_X, test_y),
        "validation_accuracy": acc(pool_X[va], pool_y[va]),
        "train_accuracy": hist.accuracy[-1] if hist.accuracy else None,
        "n_train": int(len(tr)), "n_validation": int(len(va)), "n_test": int(len(test_y)),
        "loss_history": hist.loss,
        "roi": list(cell.combo.roi) if cell.combo.roi else None,
        "roi_mass": float(np.mean(finite)) if finite else None,
        "roi_masses": [None if not np.isfinite(m) else m for m in masses],
        "roi_peak_fraction": float(np.mean(peaks)) if peaks else None,
        "artifacts": {"overlays": overlays},
    })
    return rec
