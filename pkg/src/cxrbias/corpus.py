"""Manifest ingestion, seeded sampling, train/test splits and class weights.

All randomness goes through numpy's PCG64 bit generator seeded explicitly
with a 64-bit unsigned integer, so a (manifest, query, seed) triple always
yields the same ordered sample on every platform numpy supports.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    InsufficientDataError,
    ManifestFormatError,
    ManifestValidationError,
    ParameterError,
)

MANIFEST_COLUMNS = ("path", "dataset", "label", "split")
SPLITS = ("train", "test")


def make_rng(seed: int) -> np.random.Generator:
    """Return a PCG64 generator for ``seed`` (reduced modulo 2**64)."""
    return np.random.Generator(np.random.PCG64(int(seed) % 2**64))


@dataclass(frozen=True)
class SampleRef:
    path: str
    dataset: str
    label: str
    split: str | None = None

    def to_dict(self) -> dict:
        return {"path": self.path, "dataset": self.dataset,
                "label": self.label, "split": self.split or ""}


@dataclass(frozen=True)
class Manifest:
    """Ordered collection of sample references.

    ``root`` is the directory relative paths are resolved against (the
    manifest file's own directory when loaded from disk).
    """

    entries: tuple[SampleRef, ...]
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        seen: dict[str, int] = {}
        for row, ref in enumerate(self.entries, start=1):
            if not ref.path:
                raise ManifestValidationError(f"row {row}: empty path")
            if not ref.dataset:
                raise ManifestValidationError(f"row {row}: empty dataset tag")
            if not ref.label:
                raise ManifestValidationError(f"row {row}: empty label")
            if ref.split not in (None, *SPLITS):
                raise ManifestValidationError(
                    f"row {row}: split must be empty, 'train' or 'test', got {ref.split!r}")
            if ref.path in seen:
                raise ManifestValidationError(
                    f"duplicate path {ref.path!r} on rows {seen[ref.path]} and {row}")
            seen[ref.path] = row

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def source_names(self) -> list[str]:
        return [ref.dataset for ref in self.entries]

    def resolve(self, ref: SampleRef) -> Path:
        p = Path(ref.path)
        return p if p.is_absolute() else self.root / p

    def select(self, dataset: str, label: str) -> list[SampleRef]:
        return [r for r in self.entries if r.dataset == dataset and r.label == label]

    def groups(self) -> dict[tuple[str, str], int]:
        counts: dict[tuple[str, str], int] = {}
        for r in self.entries:
            counts[(r.dataset, r.label)] = counts.get((r.dataset, r.label), 0) + 1
        return counts


@dataclass(frozen=True)
class SampleSet:
    refs: tuple[SampleRef, ...]
    seed: int
    provenance: str

    def __len__(self) -> int:
        return len(self.refs)

    def __iter__(self):
        return iter(self.refs)

    def to_json(self) -> str:
        return json.dumps(
            {"seed": self.seed, "provenance": self.provenance,
             "refs": [r.to_dict() for r in self.refs]},
            sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ClassWeights:
    weights: Mapping[object, float]

    def __getitem__(self, cls):
        return self.weights[cls]

    def as_array(self, classes: Iterable) -> np.ndarray:
        return np.array([self.weights[c] for c in classes], dtype=float)


def load_manifest(path) -> Manifest:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise ManifestFormatError(f"{path}: empty file, header row required")
        header = [h.strip() for h in header]
        for col in MANIFEST_COLUMNS:
            if col not in header:
                raise ManifestFormatError(f"{path}: missing required column '{col}'")
        extra = [h for h in header if h not in MANIFEST_COLUMNS]
        if extra:
            raise ManifestFormatError(f"{path}: unexpected column(s) {extra}")
        reader.fieldnames = header
        entries = []
        for row in reader:
            if None in row:
                raise ManifestFormatError(
                    f"{path}: line {reader.line_num} has more fields than the header")
            split = (row["split"] or "").strip() or None
            entries.append(SampleRef(
                path=(row["path"] or "").strip(),
                dataset=(row["dataset"] or "").strip(),
                label=(row["label"] or "").strip(),
                split=split,
            ))
    return Manifest(tuple(entries), root=path.parent)


def write_manifest(manifest: Manifest | Iterable[SampleRef], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries = manifest.entries if isinstance(manifest, Manifest) else list(manifest)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for ref in entries:
            writer.writerow([ref.path, ref.dataset, ref.label, ref.split or ""])


def sample(manifest: Manifest, dataset: str, label: str, n: int, seed: int) -> SampleSet:
    """Draw ``n`` distinct entries of (dataset, label) uniformly without replacement."""
    if n < 0:
        raise ParameterError(f"n must be non-negative, got {n}")
    pool = manifest.select(dataset, label)
    provenance = f"dataset={dataset};label={label};n={n}"
    if len(pool) < n:
        raise InsufficientDataError(
            f"requested {n} samples of ({dataset}, {label}) but only {len(pool)} available",
            available=len(pool), requested=n)
    if n == 0:
        return SampleSet((), int(seed), provenance)
    idx = make_rng(seed).choice(len(pool), size=n, replace=False)
    return SampleSet(tuple(pool[i] for i in idx), int(seed), provenance)


def n_train_for(size: int, train_fraction: float) -> int:
    # nearest integer, exact halves go to train
    return min(size, int(math.floor(train_fraction * size + 0.5)))


def split(sample_set: SampleSet, train_fraction: float, seed: int) -> tuple[SampleSet, SampleSet]:
    if not 0.0 <= train_fraction <= 1.0:
        raise ParameterError(f"train_fraction must lie in [0, 1], got {train_fraction}")
    n = len(sample_set)
    k = n_train_for(n, train_fraction)
    order = make_rng(seed).permutation(n) if n else np.empty(0, dtype=int)
    refs = sample_set.refs
    train_refs = tuple(refs[i] for i in order[:k])
    test_refs = tuple(refs[i] for i in order[k:])
    tag = f"{sample_set.provenance};split={train_fraction}@{seed}"
    return (SampleSet(train_refs, sample_set.seed, tag + ":train"),
            SampleSet(test_refs, sample_set.seed, tag + ":test"))


def class_weights(counts: Mapping[object, int]) -> ClassWeights:
    """Inverse-frequency weights ``N / (K * N_c)``."""
    if not counts:
        raise ParameterError("class_weights needs at least one class")
    for cls, c in counts.items():
        if c <= 0:
            raise ParameterError(f"class {cls!r} has count {c}; weight undefined")
    total = sum(counts.values())
    k = len(counts)
    return ClassWeights({cls: total / (k * c) for cls, c in counts.items()})
