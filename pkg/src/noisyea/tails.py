"""Binomial and multinomial tail/mass helpers.

Exact integer summation is used for small sample sizes; above
``EXACT_TAIL_MAX_M`` draws, tails are evaluated through the regularized
incomplete beta function (log-space capable), which keeps relative
error around 1e-14 even for astronomically small tails.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy import special

#: largest m for which exact rational binomial tails are computed
EXACT_TAIL_MAX_M = 10_000


def _fraction_prob(p) -> Fraction:
    q = Fraction(p)
    if not 0 <= q <= 1:
        raise ValueError(f"probability {p} outside [0, 1]")
    return q


def binom_tail_ge_exact(m: int, t: int, p) -> Fraction:
    """P(Bin(m, p) >= t) as an exact rational."""
    q = _fraction_prob(p)
    if t <= 0:
        return Fraction(1)
    if t > m:
        return Fraction(0)
    pn, pd = q.numerator, q.denominator
    qn = pd - pn
    if pn == 0:
        return Fraction(0)
    if qn == 0:
        return Fraction(1)
    # sum the shorter side in integer arithmetic over denominator pd**m
    if t > m // 2:
        lo, hi, complement = t, m, False
    else:
        lo, hi, complement = 0, t - 1, True
    term = math.comb(m, lo) * pn**lo * qn ** (m - lo)
    total = term
    for j in range(lo, hi):
        term = term * (m - j) * pn // ((j + 1) * qn)
        total += term
    result = Fraction(total, pd**m)
    return 1 - result if complement else result


def binom_tail_ge_float(m: int, t: int, p: float) -> float:
    """P(Bin(m, p) >= t) in float64 via the regularized incomplete beta."""
    if t <= 0:
        return 1.0
    if t > m:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    # P(X >= t) = I_p(t, m - t + 1)
    return float(special.betainc(t, m - t + 1, p))


def binom_tail_ge(m: int, t: int, p, *, exact: bool | None = None):
    """Dispatch on exactness: Fraction result in exact mode, float otherwise."""
    if exact is None:
        exact = isinstance(p, (int, Fraction)) and m <= EXACT_TAIL_MAX_M
    if exact:
        return binom_tail_ge_exact(m, t, p)
    return binom_tail_ge_float(m, t, float(p))


def binom_pmf_exact(m: int, p) -> list[Fraction]:
    """Exact binomial pmf vector [P(X=0), ..., P(X=m)]."""
    q = _fraction_prob(p)
    pn, pd = q.numerator, q.denominator
    qn = pd - pn
    if pn == 0:
        return [Fraction(1)] + [Fraction(0)] * m
    if qn == 0:
        return [Fraction(0)] * m + [Fraction(1)]
    denom = pd**m
    term = qn**m
    out = [Fraction(term, denom)]
    for j in range(m):
        term = term * (m - j) * pn // ((j + 1) * qn)
        out.append(Fraction(term, denom))
    return out


def binom_pmf_float(m: int, p: float) -> np.ndarray:
    """Float64 binomial pmf over 0..m (no truncation; exact zeros underflow)."""
    r = np.arange(m + 1)
    with np.errstate(divide="ignore"):
        logpmf = (
            special.gammaln(m + 1)
            - special.gammaln(r + 1)
            - special.gammaln(m - r + 1)
            + special.xlogy(r, p)
            + special.xlog1py(m - r, -p)
        )
    return np.exp(logpmf)


def hoeffding_two_sided(margin: float, m: int) -> float:
    """Reference bound 1 - 2*exp(-2*margin^2*m) on hitting the majority value."""
    return 1.0 - 2.0 * math.exp(-2.0 * margin * margin * m)
