"""Small statistics helpers: chi-square tails, Wilson intervals, Pearson tests."""

import math

import numpy as np

_EPS = 1e-16
_TINY = 1e-300


def _gamma_series(a, x):
    # lower regularized P(a, x) by its power series (x < a + 1)
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(100000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a, x):
    # upper regularized Q(a, x) by Lentz's continued fraction (x >= a + 1)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 100000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def chi2_sf(x: float, df: int) -> float:
    """Upper tail P(X >= x) for a chi-square variable with df degrees of freedom."""
    return gammaincc(df / 2.0, x / 2.0)


def pearson_chi2(observed, expected):
    """(statistic, df, p) for observed counts against expected counts."""
    o = np.asarray(observed, float)
    e = np.asarray(expected, float)
    stat = float(((o - e) ** 2 / e).sum())
    df = len(o) - 1
    return stat, df, chi2_sf(stat, df)


def wilson_interval(k: int, n: int, z: float = 2.5758293035489004):
    """Wilson score interval for a binomial proportion (default 99%)."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return centre - half, centre + half
