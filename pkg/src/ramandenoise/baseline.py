"""Fluorescence baseline removal with airPLS.

airPLS repeatedly fits a weighted Whittaker smoother. Points above the current
fit get weight zero. Points below it get weights that grow exponentially with
the iteration count, which drives the fit under the peaks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from .core import Spectrum, as_array
from .errors import LengthMismatch, SingularSystem

_MAX_EXPONENT = 50.0


@dataclass(frozen=True)
class AirplsConfig:
    lam: float = 1e5
    max_iter: int = 15
    order: int = 2
    termination_ratio: float = 1e-3

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.order < 1:
            raise ValueError("order must be >= 1")


@dataclass(frozen=True)
class BaselineFit:
    baseline: Spectrum
    iterations_used: int
    converged: bool
    final_weight_mass: float


def difference_penalty_banded(n: int, order: int = 2) -> np.ndarray:
    """Upper banded storage of DᵀD for the ``order``-th difference matrix D.

    Row ``order - k`` holds the k-th superdiagonal, as expected by
    :func:`scipy.linalg.solveh_banded`.
    """
    coef = np.diff(np.eye(order + 1), order, axis=0)[0][::-1]  # e.g. [1, -2, 1]
    rows = n - order
    ab = np.zeros((order + 1, n))
    if rows <= 0:
        return ab
    for p in range(order + 1):
        for q in range(p, order + 1):
            k = q - p
            # entry (r+p, r+q) gets coef[p]*coef[q] for each difference row r
            ab[order - k, q:q + rows] += coef[p] * coef[q]
    return ab


def whittaker_smooth(y, w, lam: float, order: int = 2) -> np.ndarray:
    """Minimise Σ wᵢ(yᵢ − zᵢ)² + λ Σ (Δᵒz)² by a banded Cholesky solve."""
    y = as_array(y)
    w = np.asarray(w, dtype=np.float64)
    if y.shape != w.shape:
        raise LengthMismatch(f"y has {y.size} points but w has {w.size}")
    if y.size < order + 1:
        raise LengthMismatch(f"need at least {order + 1} points")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if not np.any(w > 0):
        raise SingularSystem("all weights are zero")
    ab = lam * difference_penalty_banded(y.size, order)
    ab[order] += w
    try:
        return solveh_banded(ab, w * y, check_finite=False)
    except LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc


def airpls(y, cfg: AirplsConfig = AirplsConfig()) -> BaselineFit:
    x = as_array(y)
    n = x.size
    w = np.ones(n)
    total = float(np.abs(x).sum())
    z = x
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        z = whittaker_smooth(x, w, cfg.lam, cfg.order)
        d = x - z
        neg = d < 0
        dssn = float(-d[neg].sum())
        if dssn <= cfg.termination_ratio * total:
            converged = True
            break
        if it == cfg.max_iter:
            break
        w = np.zeros(n)
        w[neg] = np.exp(np.minimum(it * -d[neg] / dssn, _MAX_EXPONENT))
        # anchor the ends, as in the original formulation
        w[0] = w[-1] = np.exp(min(it * d[neg].max() / dssn, _MAX_EXPONENT))
    return BaselineFit(Spectrum(z) if n >= 8 else z, it, converged, float(w.sum()))


def correct(y, cfg: AirplsConfig = AirplsConfig()) -> Spectrum:
    """Spectrum minus its airPLS baseline."""
    fit = airpls(y, cfg)
    out = as_array(y) - as_array(fit.baseline)
    return y.with_values(out) if isinstance(y, Spectrum) else Spectrum(out)


def correct_many(rows, cfg: AirplsConfig = AirplsConfig()) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    return np.stack([as_array(correct(r, cfg)) for r in rows]) if len(rows) else rows.copy()
