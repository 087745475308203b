"""Static figures written next to the benchmark CSVs.

Uses the Agg backend and fixed SVG metadata so reruns produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (8.0, 4.5),
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.0,
    "svg.hashsalt": "ramandenoise",
    "svg.fonttype": "none",
}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = path.suffix.lstrip(".") or "svg"
    metadata = {"Date": None} if fmt == "svg" else {}
    fig.savefig(path, format=fmt, metadata=metadata, bbox_inches="tight")
    plt.close(fig)
    return path


def overlay_figure(index: np.ndarray, curves: dict[str, np.ndarray], path, title: str = "") -> Path:
    """Clean / noisy / denoised traces of one spectrum on shared axes."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, y in curves.items():
            kw = {"color": "k", "linewidth": 1.4, "zorder": 5} if name == "clean" else {}
            if name in ("noisy", "input"):
                kw = {"color": "0.7", "linewidth": 0.6, "zorder": 1}
            ax.plot(index, y, label=name, **kw)
        ax.set_xlabel("sample index")
        ax.set_ylabel("intensity (a.u.)")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right", fontsize=8, frameon=False)
        return _save(fig, path)


def metrics_figure(rows, path) -> Path:
    """Bar chart of mean output SNR per method; ``rows`` are (method, MetricsReport, n)."""
    names = [r[0] for r in rows]
    snrs = [r[1].snr_db for r in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(8.0, 3.5))
        bars = ax.bar(names, snrs, color=["0.6" if n == "noisy" else "C0" for n in names])
        for b, v in zip(bars, snrs):
            ax.annotate(f"{v:.2f}", (b.get_x() + b.get_width() / 2, v), ha="center",
                        va="bottom", fontsize=8)
        ax.set_ylabel("mean output SNR (dB)")
        ax.tick_params(axis="x", rotation=30)
        return _save(fig, path)


def loss_figure(history, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.5))
        ax.semilogy(np.arange(1, len(history) + 1), history)
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean training loss")
        return _save(fig, path)
