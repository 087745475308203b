"""Slow, direct reference implementations used to check the fast code paths."""

import math
from fractions import Fraction

import numpy as np
from scipy import integrate, optimize


def dense_whittaker(y, w, lam, order=2):
    n = len(y)
    D = np.diff(np.eye(n), order, axis=0)
    A = np.diag(w) + lam * D.T @ D
    return np.linalg.solve(A, np.asarray(w) * np.asarray(y))


def quadratic_with_peaks(n=2051, seed=0, with_baseline=True):
    """Known quadratic baseline plus five narrow lorentzian peaks."""
    r = np.random.default_rng(seed)
    u = np.linspace(-1, 1, n)
    base = (300 + 200 * u + 150 * u**2) if with_baseline else np.zeros(n)
    idx = np.arange(n)
    peaks = np.zeros(n)
    for c in np.linspace(0.1 * n, 0.9 * n, 5) + r.uniform(-30, 30, 5):
        peaks += r.uniform(200, 1000) / (1 + ((idx - c) / r.uniform(2, 6)) ** 2)
    return base, peaks


def sure_risk(z, t):
    """SURE at threshold t in exact rational arithmetic (z and t taken as exact binary values)."""
    t = Fraction(t)
    zs = [Fraction(abs(float(v))) for v in z]
    return len(zs) - 2 * sum(v <= t for v in zs) + sum(min(v * v, t * t) for v in zs)


def sure_exhaustive(c, sigma):
    """Threshold (coefficient units) minimising SURE over every candidate."""
    z = [abs(float(v)) / sigma for v in c]
    best_t, best_r = None, None
    for t in sorted([0.0] + z):
        r = sure_risk(z, t)
        if best_r is None or r < best_r:
            best_t, best_r = t, r
    return best_t * sigma


def bh_bruteforce(c, sigma, q):
    """Index set rejected by Benjamini-Hochberg, by direct enumeration."""
    n = len(c)
    p = [math.erfc(abs(v) / sigma / math.sqrt(2.0)) for v in c]
    order = sorted(range(n), key=lambda i: p[i])
    k = 0
    for rank in range(n, 0, -1):
        if p[order[rank - 1]] <= q * rank / n:
            k = rank
            break
    if k == 0:
        return set()
    cut = p[order[k - 1]]
    return {i for i in range(n) if p[i] <= cut}


def conv1d_loops(x, weight, bias=None):
    """Same-padded stride-1 cross-correlation with the extra pad on the right."""
    B, C, L = x.shape
    O, _, K = weight.shape
    left = (K - 1) // 2
    out = np.zeros((B, O, L))
    for b in range(B):
        for o in range(O):
            for i in range(L):
                s = 0.0 if bias is None else bias[o]
                for c in range(C):
                    for k in range(K):
                        j = i + k - left
                        if 0 <= j < L:
                            s += weight[o, c, k] * x[b, c, j]
                out[b, o, i] = s
    return out


def laplace_posterior_median(x, w, a=0.5):
    """Median of μ | x for x ~ N(μ, 1), μ ~ (1-w)δ0 + w Laplace(a), by quadrature."""
    phi = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
    dens = lambda m: w * 0.5 * a * math.exp(-a * abs(m)) * phi(x - m)
    lo, hi = x - 12.0, x + 12.0
    atom = (1 - w) * phi(x)
    pieces = sorted({lo, x, hi} | ({0.0} if lo < 0.0 < hi else set()))
    cont = sum(integrate.quad(dens, u, v, epsabs=1e-14, epsrel=1e-12)[0]
               for u, v in zip(pieces, pieces[1:]))
    total = atom + cont

    def cdf(m):
        below = integrate.quad(dens, lo, min(m, 0.0), epsabs=1e-14, epsrel=1e-12)[0] if m > lo else 0.0
        if m > 0:
            below += integrate.quad(dens, 0.0, m, epsabs=1e-14, epsrel=1e-12)[0]
        if m >= 0:
            below += atom
        return below / total

    if cdf(-1e-12) <= 0.5 <= cdf(0.0):
        return 0.0
    if cdf(0.0) < 0.5:
        return optimize.brentq(lambda m: cdf(m) - 0.5, 0.0, hi, xtol=1e-12)
    return optimize.brentq(lambda m: cdf(m) - 0.5, lo, -1e-12, xtol=1e-12)


def numeric_grad(f, x, h=1e-5):
    """Central differences of scalar ``f`` w.r.t. every entry of ``x`` (modified in place, restored)."""
    g = np.zeros_like(x)
    flat, gf = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        gf[i] = (fp - fm) / (2 * h)
    return g


def rel_error(a, b, floor=1e-8):
    """Largest elementwise |a-b| / (|a|+|b|), ignoring entries where both sides sit
    below ``floor`` (there the finite difference is pure rounding noise, ~1e-10 here)."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    big = np.maximum(np.abs(a), np.abs(b)) > floor
    if not big.any():
        return 0.0
    return float(np.max(np.abs(a - b)[big] / (np.abs(a) + np.abs(b))[big]))
