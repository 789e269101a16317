"""Special functions used by the kernels and the test statistics.

The regularized incomplete gamma function is computed with the classical
split: power series for ``x < a + 1``, modified-Lentz continued fraction
otherwise, targeting absolute error below 1e-12.  The shape argument is a
scalar; the second argument may be an array (all hot loops in this package
vary x at fixed shape).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import MrplabError, ParameterDomainError

_EPS = 1.0e-15
_TINY = 1.0e-300
_MAX_ITER = 20000


def _gamma_series(a: float, x: np.ndarray) -> np.ndarray:
    """Lower regularized P(a, x) by series, valid for x < a + 1."""
    out = np.zeros_like(x)
    pos = x > 0.0
    if not pos.any():
        return out
    xs = x[pos]
    ap = a
    delt = np.full(xs.shape, 1.0 / a)
    summ = delt.copy()
    for _ in range(_MAX_ITER):
        ap += 1.0
        delt = delt * xs / ap
        summ += delt
        if np.all(np.abs(delt) < np.abs(summ) * _EPS):
            break
    else:
        raise MrplabError("incomplete gamma series did not converge")
    out[pos] = summ * np.exp(-xs + a * np.log(xs) - math.lgamma(a))
    return out


def _gamma_cf(a: float, x: np.ndarray) -> np.ndarray:
    """Upper regularized Q(a, x) by continued fraction, valid for x >= a + 1."""
    b = x + 1.0 - a
    c = np.full(x.shape, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        np.copyto(d, _TINY, where=np.abs(d) < _TINY)
        c = b + an / c
        np.copyto(c, _TINY, where=np.abs(c) < _TINY)
        d = 1.0 / d
        delt = d * c
        h *= delt
        if np.all(np.abs(delt - 1.0) < _EPS):
            break
    else:
        raise MrplabError("incomplete gamma continued fraction did not converge")
    return np.exp(-x + a * np.log(x) - math.lgamma(a)) * h


def regularized_incomplete_gamma(a: float, x):
    """Lower regularized incomplete gamma P(a, x).

    Parameters
    ----------
    a : float
        Shape, strictly positive.
    x : float or ndarray
        Evaluation point(s), nonnegative (``inf`` allowed and maps to 1).

    Returns
    -------
    float or ndarray
        P(a, x) in [0, 1]; monotone nondecreasing in x.
    """
    if not (a > 0.0 and math.isfinite(a)):
        raise ParameterDomainError(f"incomplete gamma shape must be positive, got a={a}")
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa).copy()
    if np.any(xa < 0.0) or np.any(np.isnan(xa)):
        raise ParameterDomainError("incomplete gamma argument must be >= 0")
    out = np.empty_like(xa)
    inf = np.isinf(xa)
    out[inf] = 1.0
    lo = (~inf) & (xa < a + 1.0)
    hi = (~inf) & ~lo
    if lo.any():
        out[lo] = _gamma_series(a, xa[lo])
    if hi.any():
        out[hi] = 1.0 - _gamma_cf(a, xa[hi])
    np.clip(out, 0.0, 1.0, out=out)
    return float(out[0]) if scalar else out


def regularized_incomplete_gamma_upper(a: float, x):
    """Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x), computed directly."""
    if not (a > 0.0 and math.isfinite(a)):
        raise ParameterDomainError(f"incomplete gamma shape must be positive, got a={a}")
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa).copy()
    if np.any(xa < 0.0) or np.any(np.isnan(xa)):
        raise ParameterDomainError("incomplete gamma argument must be >= 0")
    out = np.empty_like(xa)
    inf = np.isinf(xa)
    out[inf] = 0.0
    lo = (~inf) & (xa < a + 1.0)
    hi = (~inf) & ~lo
    if lo.any():
        out[lo] = 1.0 - _gamma_series(a, xa[lo])
    if hi.any():
        out[hi] = _gamma_cf(a, xa[hi])
    np.clip(out, 0.0, 1.0, out=out)
    return float(out[0]) if scalar else out


def chi_square_sf(x: float, df: float) -> float:
    """Survival function of the chi-square distribution with `df` degrees of freedom."""
    if x <= 0.0:
        return 1.0
    return float(regularized_incomplete_gamma_upper(df / 2.0, x / 2.0))


def kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution.

    Uses the alternating series for large arguments and the Jacobi-theta dual
    series for small ones.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 0.4:
        # cdf = sqrt(2*pi)/lam * sum exp(-(2k-1)^2 pi^2 / (8 lam^2))
        s = 0.0
        for k in range(1, 40):
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * lam * lam))
            s += term
            if term < 1e-18 * max(s, 1e-300):
                break
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * s))
    s = 0.0
    sign = 1.0
    for j in range(1, 200):
        term = math.exp(-2.0 * j * j * lam * lam)
        s += sign * term
        if term < 1e-18:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * s))


def ks_statistic_lambda(d: float, n: float) -> float:
    """Finite-sample scaling of a one-sample KS statistic (Stephens)."""
    rn = math.sqrt(n)
    return d * (rn + 0.12 + 0.11 / rn)


def ks_one_sample_pvalue(d: float, n: int) -> float:
    """Asymptotic p-value of a one-sample KS statistic at sample size n."""
    return kolmogorov_sf(ks_statistic_lambda(d, n))


def ks_two_sample_pvalue(d: float, n: int, m: int) -> float:
    """Asymptotic p-value of a two-sample KS statistic at sample sizes (n, m)."""
    n_eff = n * m / (n + m)
    return kolmogorov_sf(ks_statistic_lambda(d, n_eff))


def ks_critical_value(n: int, alpha: float) -> float:
    """Critical one-sample KS distance at level alpha (asymptotic, Stephens scaled)."""
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ks_one_sample_pvalue(mid, n) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
