"""Benchmark harness: baseline-correct, denoise with every method, score.

The report has one row per method with mean SNR, RMSE and MAPE over the
test spectra, preceded by a ``noisy`` row scoring the baseline-corrected
input itself.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baseline import AirplsConfig
from .cnn.checkpoint import load_checkpoint
from .cnn.training import Checkpoint, preprocess_inputs
from .core import Dataset
from .errors import InvalidConfig, MissingCheckpoint
from .metrics import MetricsReport, aggregate, evaluate, fmt, report_csv
from .wavelets.shrinkage import RULES, ShrinkageRule, wavelet_denoise_array
from .wavelets.transform import wavelet

log = logging.getLogger(__name__)

NEURAL_METHODS = ("dl", "cnn_serial")
ALL_METHODS = NEURAL_METHODS + RULES


@dataclass
class BenchConfig:
    methods: tuple[str, ...] = ALL_METHODS
    dl_checkpoint: object = None  # path or Checkpoint
    cnn_checkpoint: object = None
    airpls: AirplsConfig = field(default_factory=AirplsConfig)
    wavelet_name: str = "sym4"
    levels: int | None = None
    mode: str = "soft"
    fdr_q: float = 0.05
    overlay_index: int = 0
    seed: int = 0

    def __post_init__(self):
        if not self.methods:
            raise InvalidConfig("at least one method is required")
        unknown = [m for m in self.methods if m not in ALL_METHODS]
        if unknown:
            raise InvalidConfig(f"unknown methods {unknown}; choose from {ALL_METHODS}")
        if "dl" in self.methods and self.dl_checkpoint is None:
            raise MissingCheckpoint("method 'dl' needs a checkpoint")
        if "cnn_serial" in self.methods and self.cnn_checkpoint is None:
            raise MissingCheckpoint("method 'cnn_serial' needs a checkpoint")


@dataclass
class BenchResult:
    rows: list[tuple[str, MetricsReport, int]]
    per_spectrum: list[tuple[str, str, MetricsReport]]
    overlay: dict[str, np.ndarray]
    overlay_id: str

    def row(self, method: str) -> MetricsReport:
        for name, rep, _ in self.rows:
            if name == method:
                return rep
        raise KeyError(method)


def _checkpoint(obj) -> Checkpoint:
    return obj if isinstance(obj, Checkpoint) else load_checkpoint(obj)


def denoise_batch(method: str, inputs: np.ndarray, cfg: BenchConfig) -> np.ndarray:
    """Denoise baseline-corrected spectra (rows of ``inputs``) with one method."""
    if method in NEURAL_METHODS:
        ckpt = _checkpoint(cfg.dl_checkpoint if method == "dl" else cfg.cnn_checkpoint)
        return ckpt.network().predict(inputs)
    rule = ShrinkageRule(method, mode=cfg.mode, q=cfg.fdr_q)
    w = wavelet(cfg.wavelet_name)
    return np.stack([wavelet_denoise_array(x, rule, w, cfg.levels) for x in inputs])


def run_bench(test: Dataset, cfg: BenchConfig) -> BenchResult:
    if len(test) == 0:
        raise InvalidConfig("test dataset is empty")
    clean = test.clean_matrix()
    inputs = preprocess_inputs(test.noisy_matrix(), cfg.airpls)
    ids = [p.id for p in test]
    k = min(max(cfg.overlay_index, 0), len(test) - 1)
    overlay = {"clean": clean[k], "noisy": test.pairs[k].noisy.intensities, "input": inputs[k]}

    rows, per = [], []
    for method, outputs in [("noisy", inputs)] + [
            (m, None) for m in cfg.methods]:
        if outputs is None:
            log.info("denoising %d spectra with %s", len(test), method)
            outputs = denoise_batch(method, inputs, cfg)
            overlay[method] = outputs[k]
        reports = [evaluate(c, o) for c, o in zip(clean, outputs)]
        per += [(method, i, r) for i, r in zip(ids, reports)]
        rows.append((method, aggregate(reports), len(reports)))
    return BenchResult(rows, per, overlay, ids[k])


def per_spectrum_csv(result: BenchResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "id", "snr_db", "rmse", "mape_pct", "excluded_points"])
    for method, pid, r in result.per_spectrum:
        w.writerow([method, pid, fmt(r.snr_db), fmt(r.rmse), fmt(r.mape_pct), r.excluded_points])
    return buf.getvalue()


def overlay_csv(result: BenchResult) -> str:
    names = list(result.overlay)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index"] + names)
    cols = [result.overlay[n].tolist() for n in names]
    for i, vals in enumerate(zip(*cols)):
        w.writerow([i] + [repr(v) for v in vals])
    return buf.getvalue()


def write_bench(result: BenchResult, out_dir, figures: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in [("report.csv", report_csv(result.rows)),
                       ("per_spectrum.csv", per_spectrum_csv(result)),
                       ("overlay.csv", overlay_csv(result))]:
        (out / name).write_text(text, encoding="utf-8", newline="\n")
        written.append(out / name)
    if figures:
        from .plotting import metrics_figure, overlay_figure

        curves = {k: v for k, v in result.overlay.items() if k != "noisy"}
        idx = np.arange(len(result.overlay["clean"]))
        written.append(overlay_figure(idx, curves, out / "figures" / "overlay.svg",
                                      title=f"pair {result.overlay_id}"))
        written.append(metrics_figure(result.rows, out / "figures" / "snr.svg"))
    return written


def read_per_spectrum(text: str) -> dict[str, list[MetricsReport]]:
    """Parse ``per_spectrum.csv`` back into reports grouped by method."""
    out: dict[str, list[MetricsReport]] = {}
    for row in csv.DictReader(io.StringIO(text)):
        out.setdefault(row["method"], []).append(MetricsReport(
            float(row["snr_db"]), float(row["rmse"]), float(row["mape_pct"]),
            int(row["excluded_points"])))
    return out
