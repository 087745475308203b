"""Dyadic discrete wavelet transform with orthonormal filter banks.

One analysis step computes

    a[k] = Σ_j lo[j] · x[2k + 1 − j],    d[k] = Σ_j hi[j] · x[2k + 1 − j]

on an extended signal. Synthesis is the adjoint, which for an orthonormal bank
is the exact inverse on every interior sample.

Two extensions are supported. ``symmetric`` reflects about the half-sample
point and keeps ``(n + F − 1) // 2`` coefficients per band, enough to invert
exactly for any length. ``periodic`` wraps the signal (odd lengths are padded
by repeating the last sample) and keeps ``ceil(n / 2)`` coefficients per band,
which makes the transform orthogonal on even lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import Spectrum, as_array
from ..errors import BookkeepingMismatch, LengthTooShort, TooManyLevels

EXTENSIONS = ("symmetric", "periodic")

_SQRT_HALF = math.sqrt(0.5)

# Lowpass decomposition filters, 17 significant digits.
_LOWPASS = {
    "haar": (_SQRT_HALF, _SQRT_HALF),
    "db4": (
        -0.010597401785069032,
        0.032883011666885200,
        0.030841381835560765,
        -0.18703481171909308,
        -0.027983769416859857,
        0.63088076792985891,
        0.71484657055291565,
        0.23037781330889650,
    ),
    "sym4": (
        -0.075765714789502465,
        -0.029635527646003882,
        0.49761866763277296,
        0.80373875180513240,
        0.29785779560530858,
        -0.099219543576632561,
        -0.012603967262032107,
        0.032223100604052116,
    ),
}

WAVELET_NAMES = tuple(_LOWPASS)


@dataclass(frozen=True, eq=False)
class WaveletSpec:
    name: str
    decomposition_lowpass: np.ndarray
    decomposition_highpass: np.ndarray
    reconstruction_lowpass: np.ndarray
    reconstruction_highpass: np.ndarray
    extension: str = "symmetric"

    def __post_init__(self):
        if self.extension not in EXTENSIONS:
            raise ValueError(f"extension must be one of {EXTENSIONS}")
        _check_filter_bank(self)

    @property
    def filter_length(self) -> int:
        return len(self.decomposition_lowpass)


def wavelet(name: str = "sym4", extension: str = "symmetric") -> WaveletSpec:
    try:
        lo = np.array(_LOWPASS[name])
    except KeyError:
        raise ValueError(f"unknown wavelet {name!r}; choose from {WAVELET_NAMES}") from None
    F = lo.size
    hi = np.array([(-1) ** j * lo[F - 1 - j] for j in range(F)])
    for a in (lo, hi):
        a.setflags(write=False)
    return WaveletSpec(name, lo, hi, lo[::-1].copy(), hi[::-1].copy(), extension)


def _check_filter_bank(w: WaveletSpec, tol: float = 1e-10) -> None:
    lo, hi = np.asarray(w.decomposition_lowpass), np.asarray(w.decomposition_highpass)
    F = lo.size
    if F % 2 or hi.size != F:
        raise ValueError("filters must have equal, even length")
    if not (np.allclose(w.reconstruction_lowpass, lo[::-1], atol=0, rtol=0)
            and np.allclose(w.reconstruction_highpass, hi[::-1], atol=0, rtol=0)):
        raise ValueError("reconstruction filters must be time reverses of the analysis filters")
    qmf = np.array([(-1) ** j * lo[F - 1 - j] for j in range(F)])
    if np.max(np.abs(qmf - hi)) > tol:
        raise ValueError(f"{w.name}: highpass is not the quadrature mirror of lowpass")
    # one periodic analysis step must be an orthogonal matrix
    n = 2 * F
    idx = _indices(n // 2, F) % n
    A = np.zeros((n, n))
    for k in range(n // 2):
        np.add.at(A[k], idx[k], lo)
        np.add.at(A[n // 2 + k], idx[k], hi)
    err = np.max(np.abs(A @ A.T - np.eye(n)))
    if err > tol:
        raise ValueError(f"{w.name}: perfect reconstruction check failed ({err:.2e})")


def _indices(m: int, F: int) -> np.ndarray:
    k = np.arange(m)[:, None]
    j = np.arange(F)[None, :]
    return 2 * k + 1 - j


def band_length(n: int, F: int, extension: str) -> int:
    if extension == "periodic":
        return (n + 1) // 2
    return (n + F - 1) // 2


def max_level(n: int, F: int) -> int:
    if n < F:
        raise LengthTooShort(f"signal length {n} shorter than filter length {F}")
    return max(1, int(math.floor(math.log2(n / F))))


def default_levels(n: int, w: WaveletSpec) -> int:
    return min(5, max_level(n, w.filter_length))


def analysis_step(x: np.ndarray, w: WaveletSpec) -> tuple[np.ndarray, np.ndarray]:
    F = w.filter_length
    n = x.size
    if w.extension == "periodic":
        if n % 2:
            x = np.append(x, x[-1])
        idx = _indices(x.size // 2, F) % x.size
        windows = x[idx]
    else:
        m = band_length(n, F, "symmetric")
        xe = np.pad(x, F - 1, mode="symmetric")
        windows = xe[_indices(m, F) + F - 1]
    return windows @ w.decomposition_lowpass, windows @ w.decomposition_highpass


def synthesis_step(a: np.ndarray, d: np.ndarray, n: int, w: WaveletSpec) -> np.ndarray:
    """Rebuild the ``n``-sample input of one analysis step."""
    F = w.filter_length
    m = a.size
    if d.size != m or m != band_length(n, F, w.extension):
        raise BookkeepingMismatch(f"band lengths ({a.size}, {d.size}) do not match signal length {n}")
    idx = _indices(m, F)
    # adjoint of the analysis step; h[j] == rec[F-1-j]
    contrib = (a[:, None] * w.reconstruction_lowpass[::-1][None, :]
               + d[:, None] * w.reconstruction_highpass[::-1][None, :])
    if w.extension == "periodic":
        size = n + (n % 2)
        out = np.bincount((idx % size).ravel(), weights=contrib.ravel(), minlength=size)
        return out[:n]
    size = n + 2 * (F - 1)
    out = np.bincount((idx + F - 1).ravel(), weights=contrib.ravel(), minlength=size)
    return out[F - 1:F - 1 + n]


@dataclass(frozen=True, eq=False)
class CoefficientPyramid:
    """Details are stored finest first. ``level_lengths[k]`` is the length of the
    signal entering analysis level ``k + 1``, so ``level_lengths[0]`` is the
    source length."""

    details: tuple[np.ndarray, ...]
    approximation: np.ndarray
    level_lengths: tuple[int, ...]
    source_length: int
    wavelet_name: str = "sym4"
    extension: str = "symmetric"
    filter_length: int = field(default=8)

    def __post_init__(self):
        if self.levels < 1:
            raise BookkeepingMismatch("pyramid needs at least one level")
        if len(self.level_lengths) != self.levels or self.level_lengths[0] != self.source_length:
            raise BookkeepingMismatch("level_lengths inconsistent with levels/source_length")
        expect = [band_length(n, self.filter_length, self.extension) for n in self.level_lengths]
        got = [d.size for d in self.details]
        if got != expect or self.approximation.size != expect[-1]:
            raise BookkeepingMismatch(f"band lengths {got} do not follow {expect}")
        for n_next, m in zip(self.level_lengths[1:], expect[:-1]):
            if n_next != m:
                raise BookkeepingMismatch("level_lengths do not chain")
        for band in (*self.details, self.approximation):
            if not np.all(np.isfinite(band)):
                raise ValueError("non-finite wavelet coefficient")

    @property
    def levels(self) -> int:
        return len(self.details)

    def with_details(self, details) -> "CoefficientPyramid":
        return CoefficientPyramid(tuple(np.asarray(d, dtype=np.float64) for d in details),
                                  self.approximation, self.level_lengths, self.source_length,
                                  self.wavelet_name, self.extension, self.filter_length)

    def energy(self) -> float:
        return float(sum(np.sum(d**2) for d in self.details) + np.sum(self.approximation**2))

    def zeros_like(self) -> "CoefficientPyramid":
        return CoefficientPyramid(tuple(np.zeros_like(d) for d in self.details),
                                  np.zeros_like(self.approximation), self.level_lengths,
                                  self.source_length, self.wavelet_name, self.extension,
                                  self.filter_length)


def dwt(x, w: WaveletSpec, levels: int | None = None) -> CoefficientPyramid:
    sig = as_array(x).astype(np.float64, copy=False)
    n = sig.size
    F = w.filter_length
    top = max_level(n, F)
    if levels is None:
        levels = min(5, top)
    if levels < 1 or levels > top:
        raise TooManyLevels(f"{levels} levels requested; length {n} with {w.name} allows 1..{top}")
    details, lengths = [], []
    a = sig
    for _ in range(levels):
        lengths.append(a.size)
        a, d = analysis_step(a, w)
        details.append(d)
    return CoefficientPyramid(tuple(details), a, tuple(lengths), n, w.name, w.extension, F)


def idwt(p: CoefficientPyramid, w: WaveletSpec) -> Spectrum:
    return Spectrum(idwt_array(p, w))


def idwt_array(p: CoefficientPyramid, w: WaveletSpec) -> np.ndarray:
    if (p.wavelet_name, p.extension, p.filter_length) != (w.name, w.extension, w.filter_length):
        raise BookkeepingMismatch(
            f"pyramid built with {p.wavelet_name}/{p.extension}, not {w.name}/{w.extension}")
    a = p.approximation
    for d, n in zip(reversed(p.details), reversed(p.level_lengths)):
        a = synthesis_step(a, d, n, w)
    return a
