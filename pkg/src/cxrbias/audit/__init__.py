"""End-to-end bias audit: stage-1 probes, stage-2 preprocessing, reports and figures."""

from .config import Combination, Group, ProbeConfig, Stage2Config, TrainConfig, derive_seed
from .probes import run_gradcam_probe, run_tsne_svm_probe
from .render import render_heatmap_overlay, render_scatter
from .report import ProbeReport, merge_reports

__all__ = [
    "Combination", "Group", "ProbeConfig", "Stage2Config", "TrainConfig", "derive_seed",
    "run_gradcam_probe", "run_tsne_svm_probe", "render_heatmap_overlay", "render_scatter",
    "ProbeReport", "merge_reports",
]
