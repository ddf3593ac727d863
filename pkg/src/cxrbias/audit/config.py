"""JSON configuration documents for the probes, the pipeline and classifier training."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..embed import TsneParams
from ..errors import ParameterError
from ..imgproc.pipeline import STANDARD_RECIPES, AugmentRecipe, PipelineConfig


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed from a global seed and integer keys (SeedSequence hashing)."""
    ss = np.random.SeedSequence([int(seed) % 2**64, *[int(k) for k in keys]])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Group:
    dataset: str
    label: str
    n: int | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.dataset, self.label)

    @property
    def name(self) -> str:
        return f"{self.dataset}({self.label})"


@dataclass(frozen=True)
class Combination:
    """Two groups to tell apart. Identical groups form a null control: the
    group is sampled once at double size and split in half."""

    groups: tuple[Group, Group]
    name: str = ""
    roi: tuple[int, int, int, int] | None = None  # (x0, y0, x1, y1) at probe resolution
    roi_group: int = 1

    def __post_init__(self):
        if not self.name:
            object.__setattr__(self, "name", f"{self.groups[0].name}_vs_{self.groups[1].name}")

    @property
    def is_self_pair(self) -> bool:
        return self.groups[0].key == self.groups[1].key


@dataclass(frozen=True)
class SvmSettings:
    kernel: str = "rbf"
    gamma: float | None = None
    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 200


@dataclass(frozen=True)
class NnSettings:
    epochs: int = 20
    lr: float = 0.01
    batch_size: int = 32
    channels: tuple[int, int] = (8, 16)
    hidden: int = 128
    dropout: float = 0.5
    max_rotation: float = 10.0
    hflip_prob: float = 0.5
    n_train: int = 500
    n_test: int = 500
    validation_fraction: float = 0.1
    overlays: int = 8


def _build(cls, d: dict | None):
    d = dict(d or {})
    known = cls.__dataclass_fields__
    unknown = set(d) - set(known)
    if unknown:
        raise ParameterError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    for k, v in d.items():
        if isinstance(v, list):
            d[k] = tuple(v)
    return cls(**d)


def _as_jsonable(obj):
    if hasattr(obj, "__dataclass_fields__"):
        return {k: _as_jsonable(getattr(obj, k)) for k in obj.__dataclass_fields__}
    if isinstance(obj, (list, tuple)):
        return [_as_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


@dataclass(frozen=True)
class ProbeConfig:
    manifest: Path
    combinations: tuple[Combination, ...]
    output_dir: Path
    recipes: dict[str, AugmentRecipe] = field(default_factory=lambda: {"identity": AugmentRecipe()})
    samples_per_group: int = 200
    image_size: int = 256
    train_fraction: float = 0.9
    tsne: TsneParams = field(default_factory=TsneParams)
    svm: SvmSettings = field(default_factory=SvmSettings)
    nn: NnSettings = field(default_factory=NnSettings)
    seed: int = 0

    def group_size(self, g: Group) -> int:
        return self.samples_per_group if g.n is None else g.n

    def to_dict(self) -> dict:
        return {
            "manifest": str(self.manifest),
            "output_dir": str(self.output_dir),
            "combinations": [
                {"name": c.name, "groups": [_as_jsonable(g) for g in c.groups],
                 "roi": list(c.roi) if c.roi else None, "roi_group": c.roi_group}
                for c in self.combinations],
            "recipes": {k: r.to_list() for k, r in self.recipes.items()},
            "samples_per_group": self.samples_per_group,
            "image_size": self.image_size,
            "train_fraction": self.train_fraction,
            "tsne": self.tsne.to_dict(),
            "svm": _as_jsonable(self.svm),
            "nn": _as_jsonable(self.nn),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None, image_size: int = 256) -> "ProbeConfig":
        base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        resolve = lambda p: Path(p) if Path(p).is_absolute() else base_dir / p  # noqa: E731
        combos = []
        for c in d["combinations"]:
            groups = tuple(Group(g["dataset"], g["label"], g.get("n")) for g in c["groups"])
            if len(groups) != 2:
                raise ParameterError("each combination needs exactly two groups")
            combos.append(Combination(groups, c.get("name", ""),
                                      tuple(c["roi"]) if c.get("roi") else None,
                                      int(c.get("roi_group", 1))))
        recipes_in = d.get("recipes", {"identity": []})
        if isinstance(recipes_in, str) and recipes_in == "standard":
            recipes = dict(STANDARD_RECIPES)
        elif isinstance(recipes_in, list):
            recipes = {name: STANDARD_RECIPES[name] for name in recipes_in}
        else:
            recipes = {k: AugmentRecipe.parse(v) for k, v in recipes_in.items()}
        return cls(
            manifest=resolve(d["manifest"]),
            combinations=tuple(combos),
            output_dir=resolve(d.get("output_dir", "out")),
            recipes=recipes,
            samples_per_group=int(d.get("samples_per_group", 200)),
            image_size=int(d.get("image_size", image_size)),
            train_fraction=float(d.get("train_fraction", 0.9)),
            tsne=TsneParams.from_dict(d.get("tsne")),
            svm=_build(SvmSettings, d.get("svm")),
            nn=_build(NnSettings, d.get("nn")),
            seed=int(d.get("seed", 0)),
        )


def load_json(path) -> tuple[dict, Path]:
    path = Path(path)
    return json.loads(path.read_text(encoding="utf-8")), path.parent


@dataclass(frozen=True)
class Stage2Config:
    manifest: Path
    mask_dir: Path
    output_dir: Path
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "Stage2Config":
        base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        resolve = lambda p: Path(p) if Path(p).is_absolute() else base_dir / p  # noqa: E731
        return cls(resolve(d["manifest"]), resolve(d["mask_dir"]), resolve(d.get("output_dir", "out")),
                   PipelineConfig.from_dict(d.get("pipeline", {})))

    def to_dict(self) -> dict:
        return {"manifest": str(self.manifest), "mask_dir": str(self.mask_dir),
                "output_dir": str(self.output_dir), "pipeline": self.pipeline.to_dict()}


@dataclass(frozen=True)
class TrainConfig:
    manifest: Path
    output_dir: Path
    classes: tuple[str, ...] | None = None
    image_size: int = 36
    train_fraction: float = 0.9
    nn: NnSettings = field(default_factory=NnSettings)
    class_weighting: bool = True
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "TrainConfig":
        base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        resolve = lambda p: Path(p) if Path(p).is_absolute() else base_dir / p  # noqa: E731
        return cls(resolve(d["manifest"]), resolve(d.get("output_dir", "out")),
                   tuple(d["classes"]) if d.get("classes") else None,
                   int(d.get("image_size", 36)), float(d.get("train_fraction", 0.9)),
                   _build(NnSettings, d.get("nn")), bool(d.get("class_weighting", True)),
                   int(d.get("seed", 0)))

    def to_dict(self) -> dict:
        return {"manifest": str(self.manifest), "output_dir": str(self.output_dir),
                "classes": list(self.classes) if self.classes else None,
                "image_size": self.image_size, "train_fraction": self.train_fraction,
                "nn": _as_jsonable(self.nn), "class_weighting": self.class_weighting,
                "seed": self.seed}
