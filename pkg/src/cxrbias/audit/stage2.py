"""Stage-2 mitigation: mask-and-enhance a whole corpus, then train and score a classifier."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..corpus import Manifest, SampleRef, class_weights, load_manifest, make_rng, n_train_for, write_manifest
from ..errors import MissingMaskError, UndefinedMetricError
from ..imgproc.image import load_image, load_mask, resize, save_png
from ..imgproc.pipeline import preprocess_stage2
from ..metrics import MetricsReport, evaluate
from ..nn.net import ConvNet
from ..nn.training import train
from .config import Stage2Config, TrainConfig, derive_seed
from .report import dumps

log = logging.getLogger(__name__)

MASK_SUFFIXES = (".png", ".PNG")


@dataclass
class Stage2Result:
    manifest: Path
    files: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(f["status"] == "ok" for f in self.files)

    @property
    def n_failed(self) -> int:
        return sum(f["status"] != "ok" for f in self.files)


def _relative(manifest: Manifest, ref: SampleRef) -> Path:
    p = Path(ref.path)
    if not p.is_absolute():
        return p
    try:
        return p.relative_to(manifest.root)
    except ValueError:
        return Path(p.name)


def find_mask(mask_dir: Path, rel: Path) -> Path | None:
    """Mask for an image: same relative location first, then same stem at the top level."""
    for cand in [mask_dir / rel.parent / (rel.stem + s) for s in MASK_SUFFIXES] + \
                [mask_dir / (rel.stem + s) for s in MASK_SUFFIXES]:
        if cand.is_file():
            return cand
    return None


def run_stage2(cfg: Stage2Config, manifest: Manifest | None = None) -> Stage2Result:
    """Process every manifest entry into ``<output_dir>/processed``.

    Failures (undecodable image, missing mask under the ``error`` policy,
    wrong mask size) are logged and recorded; the remaining files are still
    processed. The new manifest lists only files that were written.
    """
    manifest = manifest if manifest is not None else load_manifest(cfg.manifest)
    out_root = Path(cfg.output_dir) / "processed"
    out_root.mkdir(parents=True, exist_ok=True)
    result = Stage2Result(out_root / "manifest.csv")
    written: list[SampleRef] = []
    for ref in manifest:
        rel = _relative(manifest, ref)
        rec = {"path": ref.path, "dataset": ref.dataset, "label": ref.label}
        try:
            img = load_image(manifest.resolve(ref))
            mpath = find_mask(Path(cfg.mask_dir), rel)
            rec["mask"] = None if mpath is None else str(mpath.relative_to(cfg.mask_dir))
            if mpath is None and cfg.pipeline.missing_mask_policy == "error":
                raise MissingMaskError(f"no mask named {rel.stem}.png under {cfg.mask_dir}")
            mask = None if mpath is None else load_mask(mpath)
            processed = preprocess_stage2(img, mask, cfg.pipeline)
            out_rel = rel.with_suffix(".png")
            save_png(processed, out_root / out_rel)
            written.append(SampleRef(out_rel.as_posix(), ref.dataset, ref.label, ref.split))
            rec.update(status="ok", output=out_rel.as_posix())
        except Exception as exc:  # one bad file never stops the batch
            log.warning("stage 2 skipped %s: %s", ref.path, exc)
            rec.update(status="error", error={"type": type(exc).__name__, "message": str(exc)})
        result.files.append(rec)
    write_manifest(written, result.manifest)
    report = {"kind": "pipeline", "config": cfg.to_dict(), "files": result.files,
              "n_ok": len(written), "n_failed": result.n_failed, "all_ok": result.ok,
              "manifest": str(result.manifest.relative_to(cfg.output_dir))}
    (Path(cfg.output_dir) / "report.json").write_text(dumps(report), encoding="utf-8")
    _write_file_csv(Path(cfg.output_dir) / "report.csv", result.files)
    return result


def _write_file_csv(path: Path, files: list[dict]) -> None:

    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "dataset", "label", "status", "mask", "output", "error"])
        for f in files:
            err = f.get("error")
            w.writerow([f["path"], f["dataset"], f["label"], f["status"], f.get("mask") or "",
                        f.get("output", ""), f"{err['type']}: {err['message']}" if err else ""])


def stratified_split(labels: np.ndarray, K: int, train_fraction: float, seed: int
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Per-class seeded split, so every class keeps the train/test ratio."""
    tr, te = [], []
    for k in range(K):
        idx = np.flatnonzero(labels == k)
        order = idx[make_rng(derive_seed(seed, k)).permutation(len(idx))]
        cut = n_train_for(len(idx), train_fraction)
        tr.append(order[:cut])
        te.append(order[cut:])
    return np.sort(np.concatenate(tr)), np.sort(np.concatenate(te))


@dataclass
class ClassifierResult:
    metrics: MetricsReport
    classes: list[str]
    weights: dict[str, float]
    n_train: int
    n_test: int
    loss_history: list[float]
    checkpoint: Path

    def to_dict(self) -> dict:
        return {"kind": "classifier", "classes": self.classes, "class_weights": self.weights,
                "n_train": self.n_train, "n_test": self.n_test, "loss_history": self.loss_history,
                "metrics": self.metrics.to_dict(), "checkpoint": self.checkpoint.name}


def train_eval_classifier(cfg: TrainConfig, manifest: Manifest | None = None) -> ClassifierResult:
    """Class-weighted ConvNet on a stratified split; metrics in table column order."""
    manifest = manifest if manifest is not None else load_manifest(cfg.manifest)
    classes = list(cfg.classes) if cfg.classes else sorted({r.label for r in manifest})
    refs = [r for r in manifest if r.label in classes]
    present = sorted({r.label for r in refs})
    if len(present) < 2:
        raise UndefinedMetricError(
            f"classifier metrics need at least two classes, corpus has {present or 'none'}")
    if len(present) < len(classes):
        missing = sorted(set(classes) - set(present))
        raise UndefinedMetricError(f"declared classes without samples: {missing}")
    K = len(classes)
    y = np.array([classes.index(r.label) for r in refs], dtype=np.intp)
    X = np.stack([resize(load_image(manifest.resolve(r)), cfg.image_size, cfg.image_size, "bilinear")
                  for r in refs])[:, None]
    tr, te = stratified_split(y, K, cfg.train_fraction, derive_seed(cfg.seed, 0))
    counts = {c: int((y[tr] == k).sum()) for k, c in enumerate(classes)}
    cw = class_weights(counts) if cfg.class_weighting else None
    weights = cw.as_array(classes) if cw else np.ones(K)
    nn = cfg.nn
    net = ConvNet.build(cfg.image_size, K, tuple(nn.channels), nn.hidden, nn.dropout,
                        seed=derive_seed(cfg.seed, 1))
    augment = (nn.max_rotation, nn.hflip_prob) if (nn.max_rotation or nn.hflip_prob) else None
    net, hist = train(net, X[tr], y[tr], epochs=nn.epochs, lr=nn.lr, batch_size=nn.batch_size,
                      class_weights=weights, augment=augment, seed=derive_seed(cfg.seed, 2))
    metrics = evaluate(y[te], net.predict(X[te]))
    out = Path(cfg.output_dir)
    ckpt, _ = net.save(out / "model.bin")
    result = ClassifierResult(metrics, classes, dict(zip(classes, map(float, weights))),
                              int(len(tr)), int(len(te)), hist.loss, ckpt)
    (out / "report.json").write_text(dumps({**result.to_dict(), "config": cfg.to_dict()}),
                                     encoding="utf-8")
    (out / "report.csv").write_text(metrics.to_csv("ConvNet"), encoding="utf-8")
    return result
