"""Report containers and their JSON/CSV serialisation.

``report.json`` holds only deterministic content (config, per-cell results,
seeds, artifact paths relative to the output directory). Wall-clock
durations go to ``timing.json`` so that repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import CxrBiasError, InsufficientDataError, NumericError, TrainingError

CSV_COLUMNS = ("probe", "combination", "recipe", "status", "accuracy",
               "validation_accuracy", "roi_mass", "n_train", "n_test", "error")


def _clean(obj):
    """JSON-safe copy: NaN/inf become null, tuples become lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalar
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def error_record(base: dict, exc: BaseException, stage: str | None = None) -> dict:
    err = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, InsufficientDataError):
        err.update(available=exc.available, requested=exc.requested)
    if isinstance(exc, NumericError) and exc.iteration is not None:
        err["iteration"] = exc.iteration
    if isinstance(exc, TrainingError):
        err["epoch"] = exc.epoch
    if stage:
        err["stage"] = stage
    if not isinstance(exc, (CxrBiasError, OSError, ValueError)):
        err["unexpected"] = True
    rec = dict(base)
    rec.update(status="error", accuracy=None, error=err)
    return rec


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if not math.isfinite(v) else f"{v:.4f}"
    return str(v)


def _row(probe: str, cell: dict) -> list[str]:
    err = cell.get("error")
    vals = {**cell, "probe": probe,
            "error": f"{err['type']}: {err['message']}" if err else ""}
    return [_fmt(vals.get(c)) for c in CSV_COLUMNS]


def cells_csv(rows: list[tuple[str, dict]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for probe, cell in rows:
        w.writerow(_row(probe, cell))
    return buf.getvalue()


def accuracy_table(cells: list[dict]) -> str:
    """Combinations as rows, recipes as columns; failed cells show ``error``."""
    combos = list(dict.fromkeys(c["combination"] for c in cells))
    recipes = list(dict.fromkeys(c["recipe"] for c in cells))
    lookup = {(c["combination"], c["recipe"]): c for c in cells}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["combination", *recipes])
    for combo in combos:
        row = [combo]
        for r in recipes:
            c = lookup.get((combo, r))
            row.append("" if c is None else ("error" if c["status"] != "ok" else _fmt(c["accuracy"])))
        w.writerow(row)
    return buf.getvalue()


@dataclass
class ProbeReport:
    probe: str
    config: dict
    cells: list[dict] = field(default_factory=list)
    timings: list[dict] = field(default_factory=list)

    def add(self, cell: dict) -> None:
        self.cells.append(cell)

    @property
    def ok(self) -> bool:
        return all(c["status"] == "ok" for c in self.cells)

    def cell(self, combination: str, recipe: str = "identity") -> dict:
        for c in self.cells:
            if c["combination"] == combination and c["recipe"] == recipe:
                return c
        raise KeyError((combination, recipe))

    def to_dict(self) -> dict:
        return {"probe": self.probe, "config": self.config, "cells": self.cells,
                "all_ok": self.ok}

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def write(self, out_dir=None) -> Path:
        out = Path(out_dir if out_dir is not None else self.config["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json(), encoding="utf-8")
        (out / "report.csv").write_text(cells_csv([(self.probe, c) for c in self.cells]), encoding="utf-8")
        (out / "table.csv").write_text(accuracy_table(self.cells), encoding="utf-8")
        (out / "timing.json").write_text(dumps({"probe": self.probe, "cells": self.timings}),
                                         encoding="utf-8")
        return out / "report.json"

    @classmethod
    def load(cls, path) -> "ProbeReport":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(d["probe"], d["config"], d["cells"])


def merge_reports(directory) -> tuple[Path, list[Path]]:
    """Combine every ``report.json`` below ``directory`` into ``merged.json`` and ``merged.csv``.

    Returns the merged JSON path and the list of sources in sorted order.
    Reports without a ``cells`` list (e.g. classifier metrics) are carried
    through under ``other``.
    """
    directory = Path(directory)
    sources = sorted(p for p in directory.rglob("report.json"))
    probes, other, rows = [], [], []
    for p in sources:
        d = json.loads(p.read_text(encoding="utf-8"))
        rel = str(p.parent.relative_to(directory)) or "."
        if isinstance(d.get("cells"), list):
            probes.append({"source": rel, "probe": d["probe"], "cells": d["cells"]})
            rows += [(d["probe"], c) for c in d["cells"]]
        else:
            other.append({"source": rel, "report": d})
    merged = {"reports": probes, "other": other,
              "all_ok": all(c.get("status") == "ok" for _, c in rows)}
    out = directory / "merged.json"
    out.write_text(dumps(merged), encoding="utf-8")
    (directory / "merged.csv").write_text(cells_csv(rows), encoding="utf-8")
    return out, sources
