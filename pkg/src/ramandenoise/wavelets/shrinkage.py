"""Noise estimation, thresholds and shrinkers for wavelet detail coefficients."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import erfcx, ndtr, ndtri
from scipy.stats import norm

from ..core import Spectrum, as_array
from ..errors import EmptyLevel
from .transform import WaveletSpec, dwt, idwt_array, wavelet

MAD_SCALE = 0.6745
BLOCK_JS_LAMBDA = 4.50524

RULES = ("universal", "sure", "minimax", "fdr", "blockjs", "ebayes")
_ALIASES = {"block_js": "blockjs", "empirical_bayes": "ebayes"}


def canonical_rule(kind: str) -> str:
    kind = _ALIASES.get(kind, kind)
    if kind not in RULES:
        raise ValueError(f"unknown shrinkage rule {kind!r}; choose from {RULES}")
    return kind


@dataclass(frozen=True)
class ShrinkageRule:
    kind: str = "universal"
    mode: str = "soft"
    q: float = 0.05
    ebayes_scale: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_rule(self.kind))
        if self.mode not in ("soft", "hard"):
            raise ValueError("mode must be 'soft' or 'hard'")
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must lie in (0, 1)")
        if not self.ebayes_scale > 0:
            raise ValueError("ebayes_scale must be positive")


def estimate_sigma(pyramid) -> float:
    """MAD noise estimate from the finest detail band."""
    d1 = pyramid.details[0]
    if d1.size == 0:
        raise EmptyLevel("finest detail level is empty")
    return float(np.median(np.abs(d1)) / MAD_SCALE)


def threshold_universal(sigma: float, n: int) -> float:
    return sigma * math.sqrt(2.0 * math.log(n))


def threshold_minimax(sigma: float, n: int) -> float:
    if n <= 32:
        return 0.0
    return sigma * (0.3936 + 0.1829 * math.log2(n))


def sure_is_sparse(coeffs, sigma: float) -> bool:
    z2 = (np.asarray(coeffs, dtype=np.float64) / sigma) ** 2
    n = z2.size
    eta = (z2.sum() - n) / n
    return eta <= math.log2(n) ** 1.5 / math.sqrt(n)


def threshold_sure(coeffs, sigma: float, hybrid: bool = True) -> float:
    """Threshold minimising Stein's unbiased risk estimate.

    Candidates are 0 and every |c|/σ; the smallest minimiser wins. With
    ``hybrid`` a level whose energy barely exceeds the noise floor falls back to
    the universal threshold. The result is in coefficient units.
    """
    c = np.asarray(coeffs, dtype=np.float64)
    n = c.size
    if n == 0:
        raise EmptyLevel("cannot pick a SURE threshold for an empty level")
    if hybrid and n > 1 and sure_is_sparse(c, sigma):
        return threshold_universal(sigma, n)
    z = np.sort(np.abs(c) / sigma)
    z2 = z * z
    cand = np.concatenate(([0.0], z))
    cnt = np.searchsorted(z, cand, side="right")
    head = np.concatenate(([0.0], np.cumsum(z2)))[cnt]
    risk = (n - 2.0 * cnt) + (head + (n - cnt) * cand * cand)
    # rounding can reorder candidates whose risks agree to a few ulps; rank those exactly
    slack = 64 * np.finfo(float).eps * (n + z2.sum())
    near = np.flatnonzero(risk <= risk.min() + slack)
    if near.size == 1:
        return float(cand[near[0]] * sigma)
    best = min(near, key=lambda i: (_exact_sure(z, cand[i], int(cnt[i])), cand[i]))
    return float(cand[best] * sigma)


def _exact_sure(z: np.ndarray, t: float, cnt: int) -> Fraction:
    t = Fraction(float(t))
    head = sum((Fraction(float(v)) ** 2 for v in z[:cnt]), Fraction(0))
    return len(z) - 2 * cnt + head + (len(z) - cnt) * t * t


def shrink_soft(coeffs, t: float) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    return np.sign(c) * np.maximum(np.abs(c) - t, 0.0)


def shrink_hard(coeffs, t: float) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    return np.where(np.abs(c) > t, c, 0.0)


def fdr_survivors(coeffs, sigma: float, q: float) -> np.ndarray:
    """Boolean mask of coefficients rejected as null by Benjamini-Hochberg at rate q."""
    c = np.asarray(coeffs, dtype=np.float64)
    n = c.size
    if n == 0:
        return np.zeros(0, dtype=bool)
    p = 2.0 * norm.sf(np.abs(c) / sigma)
    ps = np.sort(p)
    ok = np.flatnonzero(ps <= q * np.arange(1, n + 1) / n)
    if ok.size == 0:
        return np.zeros(n, dtype=bool)
    return p <= ps[ok[-1]]


def shrink_fdr(coeffs, sigma: float, q: float = 0.05) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    return np.where(fdr_survivors(c, sigma, q), c, 0.0)


def shrink_block_js(coeffs, sigma: float, lam: float = BLOCK_JS_LAMBDA) -> np.ndarray:
    """Positive-part James-Stein shrinkage of consecutive blocks of length floor(ln n)."""
    c = np.asarray(coeffs, dtype=np.float64)
    n = c.size
    if n == 0:
        return c.copy()
    L = max(1, int(math.floor(math.log(n))))
    out = np.empty_like(c)
    for start in range(0, n, L):
        blk = c[start:start + L]
        s2 = float(np.sum(blk * blk))
        factor = max(0.0, 1.0 - lam * L * sigma**2 / s2) if s2 > 0 else 0.0
        out[start:start + L] = factor * blk
    return out


# -- empirical Bayes with a spike + Laplace prior ---------------------------

_BETA_CAP = 1e20


def _mills(t):
    """Φ̃(t) / φ(t), stable for large positive t."""
    return math.sqrt(math.pi / 2.0) * erfcx(np.asarray(t, dtype=np.float64) / math.sqrt(2.0))


def _phi(t):
    return np.exp(-0.5 * np.asarray(t) ** 2) / math.sqrt(2.0 * math.pi)


def beta_laplace(x, a: float = 0.5) -> np.ndarray:
    """g(x)/φ(x) − 1, where g is the unit-noise marginal under a Laplace(a) signal."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    with np.errstate(over="ignore"):
        b = 0.5 * a * (_mills(a - x) + _mills(x + a)) - 1.0
    return np.minimum(b, _BETA_CAP)


def weight_from_threshold(t: float, a: float = 0.5) -> float:
    """Prior weight whose posterior-median threshold equals ``t`` (unit noise)."""
    return float(1.0 / (1.0 + 0.5 * a * (_mills(a - t) - _mills(t + a))))


def ebayes_weight(z, a: float = 0.5, tol: float = 1e-6) -> float:
    """Maximum marginal likelihood mixing weight on [w_min, 1].

    ``w_min`` is the weight whose threshold is the universal threshold.
    """
    z = np.asarray(z, dtype=np.float64)
    n = max(z.size, 2)
    w_min = min(1.0, weight_from_threshold(math.sqrt(2.0 * math.log(n)), a))
    beta = beta_laplace(z, a)

    def neg_loglik(w):
        return -float(np.sum(np.log1p(w * beta)))

    res = minimize_scalar(neg_loglik, bounds=(w_min, 1.0), method="bounded",
                          options={"xatol": tol})
    w = float(res.x)
    # the bounded search never evaluates the endpoints themselves
    for edge in (w_min, 1.0):
        if neg_loglik(edge) <= neg_loglik(w):
            w = edge
    return w


def posterior_median_laplace(x, w: float, a: float = 0.5) -> np.ndarray:
    """Posterior median of μ given x ~ N(μ, 1), μ ~ (1−w)δ₀ + w·Laplace(a)."""
    x = np.asarray(x, dtype=np.float64)
    sgn = np.sign(x)
    ax = np.abs(x)
    xma = ax - a
    pdf = _phi(xma)
    zz = pdf * (1.0 / w - 1.0) / a + 0.5 * (ndtr(xma) + pdf * _mills(ax + a))
    with np.errstate(divide="ignore"):
        med = np.maximum(0.0, xma - ndtri(np.minimum(zz, 1.0)))
    return sgn * med


def shrink_ebayes(coeffs, sigma: float, a: float = 0.5) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    if c.size == 0:
        return c.copy()
    z = c / sigma
    w = ebayes_weight(z, a)
    return posterior_median_laplace(z, w, a) * sigma


def shrink_level(d: np.ndarray, sigma: float, rule: ShrinkageRule, n_source: int) -> np.ndarray:
    """Apply ``rule`` to one detail band."""
    kind = rule.kind
    if kind == "fdr":
        return shrink_fdr(d, sigma, rule.q)
    if kind == "blockjs":
        return shrink_block_js(d, sigma)
    if kind == "ebayes":
        return shrink_ebayes(d, sigma, rule.ebayes_scale)
    if kind == "universal":
        t = threshold_universal(sigma, n_source)
    elif kind == "minimax":
        t = threshold_minimax(sigma, n_source)
    else:
        t = threshold_sure(d, sigma)
    return shrink_soft(d, t) if rule.mode == "soft" else shrink_hard(d, t)


def wavelet_denoise_array(x, rule: ShrinkageRule = ShrinkageRule(),
                          w: WaveletSpec | None = None, levels: int | None = None) -> np.ndarray:
    sig = as_array(x)
    w = w or wavelet("sym4")
    p = dwt(sig, w, levels)
    sigma = estimate_sigma(p)
    if sigma <= 0.0:
        return sig.copy()
    details = [shrink_level(d, sigma, rule, sig.size) for d in p.details]
    return idwt_array(p.with_details(details), w)


def wavelet_denoise(x, rule: ShrinkageRule = ShrinkageRule(),
                    w: WaveletSpec | None = None, levels: int | None = None) -> Spectrum:
    """dwt, MAD noise estimate, per-level shrinkage of the details, idwt.

    The approximation band is left untouched.
    """
    out = wavelet_denoise_array(x, rule, w, levels)
    return x.with_values(out) if isinstance(x, Spectrum) else Spectrum(out)
