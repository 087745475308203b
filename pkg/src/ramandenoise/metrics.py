"""Output SNR, RMSE and MAPE between a noiseless reference and an estimate."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import as_array
from .errors import AllPointsExcluded, LengthMismatch, ZeroPowerSignal

REPORT_COLUMNS = ("method", "snr_db", "rmse", "mape_pct", "n_spectra")


@dataclass(frozen=True)
class MetricsReport:
    snr_db: float
    rmse: float
    mape_pct: float
    excluded_points: int = 0


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_array(a), as_array(b)
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.size} vs {b.size}")
    return a, b


def snr_db(reference, observed) -> float:
    """10 log10 of reference power over residual power; +inf when they match."""
    ref, obs = _pair(reference, observed)
    ps = float(np.mean(ref**2))
    if ps <= 0.0:
        raise ZeroPowerSignal("reference spectrum has zero power")
    pn = float(np.mean((obs - ref) ** 2))
    if pn == 0.0:
        return math.inf
    return 10.0 * math.log10(ps / pn)


def rmse(original, forecast) -> float:
    a, b = _pair(original, forecast)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def default_mape_floor(original) -> float:
    return 0.01 * float(np.max(np.abs(as_array(original))))


def mape_pct(original, forecast, floor: float | None = None) -> tuple[float, int]:
    """Mean absolute percentage error over points whose |original| exceeds ``floor``.

    Exact zeros are always excluded. Returns ``(mape, excluded_points)``.
    """
    a, b = _pair(original, forecast)
    if floor is None:
        floor = default_mape_floor(a)
    if floor < 0:
        raise ValueError("floor must be non-negative")
    keep = np.abs(a) > floor
    n_keep = int(keep.sum())
    if n_keep == 0:
        raise AllPointsExcluded(f"all {a.size} points have |original| <= {floor}")
    err = np.abs((a[keep] - b[keep]) / a[keep])
    return float(np.mean(err) * 100.0), int(a.size - n_keep)


def evaluate(original, forecast, floor: float | None = None) -> MetricsReport:
    snr = snr_db(original, forecast)  # zero power is reported before the MAPE exclusion
    m, excluded = mape_pct(original, forecast, floor)
    return MetricsReport(snr, rmse(original, forecast), m, excluded)


def aggregate(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Arithmetic mean of each index over a set of spectra."""
    if not reports:
        raise ValueError("nothing to aggregate")
    return MetricsReport(
        snr_db=float(np.mean([r.snr_db for r in reports])),
        rmse=float(np.mean([r.rmse for r in reports])),
        mape_pct=float(np.mean([r.mape_pct for r in reports])),
        excluded_points=int(sum(r.excluded_points for r in reports)),
    )


def fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def report_csv(rows: Sequence[tuple[str, MetricsReport, int]]) -> str:
    """Render ``(method, report, n_spectra)`` rows in the fixed report schema."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for method, r, n in rows:
        w.writerow([method, fmt(r.snr_db), fmt(r.rmse), fmt(r.mape_pct), n])
    return buf.getvalue()
