"""Command line entry point.

Exit status is 0 when every cell (or file) succeeded, 2 when any recorded
an error, and 1 when the run could not start (bad config, unreadable
manifest).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .audit import fixtures
from .audit.config import ProbeConfig, Stage2Config, TrainConfig, load_json
from .audit.probes import run_gradcam_probe, run_tsne_svm_probe
from .audit.report import merge_reports
from .audit.stage2 import run_stage2, train_eval_classifier
from .errors import CxrBiasError

EXIT_OK, EXIT_FATAL, EXIT_CELL_ERROR = 0, 1, 2

log = logging.getLogger("cxrbias")


def _probe(args, runner) -> int:
    data, base = load_json(args.config)
    cfg = ProbeConfig.from_dict(data, base_dir=base)
    if args.output:
        cfg = dataclasses.replace(cfg, output_dir=Path(args.output))
    report = runner(cfg)
    path = report.write(cfg.output_dir)
    for c in report.cells:
        acc = c.get("accuracy")
        shown = f"{acc:.3f}" if isinstance(acc, float) else c["error"]["type"]
        print(f"{c['combination']:<40} {c['recipe']:<20} {shown}")
    print(f"wrote {path}")
    return EXIT_OK if report.ok else EXIT_CELL_ERROR


def cmd_tsne_svm(args) -> int:
    return _probe(args, run_tsne_svm_probe)


def cmd_gradcam(args) -> int:
    return _probe(args, run_gradcam_probe)


def cmd_pipeline(args) -> int:
    data, base = load_json(args.config)
    cfg = Stage2Config.from_dict(data, base_dir=base)
    result = run_stage2(cfg)
    print(f"processed {len(result.files) - result.n_failed}/{len(result.files)} files -> {result.manifest}")
    return EXIT_OK if result.ok else EXIT_CELL_ERROR


def cmd_train(args) -> int:
    data, base = load_json(args.config)
    cfg = TrainConfig.from_dict(data, base_dir=base)
    result = train_eval_classifier(cfg)
    print(result.metrics.to_csv("ConvNet"), end="")
    return EXIT_OK


def cmd_merge(args) -> int:
    out, sources = merge_reports(args.dir)
    if not sources:
        print(f"no report.json found under {args.dir}", file=sys.stderr)
        return EXIT_FATAL
    print(f"merged {len(sources)} report(s) into {out}")
    return EXIT_OK if json.loads(out.read_text())["all_ok"] else EXIT_CELL_ERROR


def cmd_fixtures(args) -> int:
    out = Path(args.out_dir)
    kind = args.kind
    if kind == "brightness":
        m = fixtures.brightness_pair(out)
    elif kind == "single":
        m = fixtures.single_source(out, args.n or 2000)
    elif kind == "corner":
        m = fixtures.corner_tag_pair(out)
    elif kind == "texture":
        m = fixtures.texture_classes(out)
    else:
        m, _ = fixtures.masked_corpus(out)
    print(f"wrote {m}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cxrbias", description="Source-bias audit for grayscale image corpora")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    audit = sub.add_parser("audit", help="stage-1 bias probes").add_subparsers(dest="probe", required=True)
    for name, fn, desc in (("tsne-svm", cmd_tsne_svm, "t-SNE embedding + SVM source classifier"),
                           ("gradcam", cmd_gradcam, "36x36 ConvNet source classifier + Grad-CAM")):
        sp = audit.add_parser(name, help=desc)
        sp.add_argument("--config", required=True, help="probe config JSON")
        sp.add_argument("--output", help="override output_dir from the config")
        sp.set_defaults(func=fn)

    pipe = sub.add_parser("pipeline", help="stage-2 preprocessing").add_subparsers(dest="action", required=True)
    sp = pipe.add_parser("run", help="mask, enhance and re-encode a corpus")
    sp.add_argument("--config", required=True)
    sp.set_defaults(func=cmd_pipeline)

    sp = sub.add_parser("train", help="train and score the classifier on a (processed) corpus")
    sp.add_argument("--config", required=True)
    sp.set_defaults(func=cmd_train)

    rep = sub.add_parser("report", help="report utilities").add_subparsers(dest="action", required=True)
    sp = rep.add_parser("merge", help="combine every report.json under a directory")
    sp.add_argument("dir")
    sp.set_defaults(func=cmd_merge)

    sp = sub.add_parser("fixtures", help="write a synthetic corpus with a planted bias")
    sp.add_argument("kind", choices=["brightness", "single", "corner", "texture", "masked"])
    sp.add_argument("out_dir")
    sp.add_argument("--n", type=int, help="image count for the single-source fixture")
    sp.set_defaults(func=cmd_fixtures)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CxrBiasError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
