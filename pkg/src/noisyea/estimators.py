"""Mean and median sampling: procedures, exact laws and acceptance.

Both sampling strategies exist twice, deliberately: as sample-based
procedures (``mean_estimate``/``median_estimate`` over concrete draws)
and as exact distribution transforms (``mean_distribution``/
``median_distribution``) that map a noisy-fitness law to the law of the
estimator output.  ``accept_probability`` then compares two estimator
laws exactly, which is what the lumped-chain analysis consumes.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .distributions import DiscreteDistribution, scaled_integer_values
from .errors import UnsupportedConfigError
from .noise import NoiseModelSpec, noisy_sample
from .tails import EXACT_TAIL_MAX_M, binom_pmf_exact, binom_pmf_float, binom_tail_ge

STRATEGIES = ("raw", "mean", "median")

#: presets expanding against the active problem size
PRESETS = {
    "2n3+1": lambda n: 2 * n**3 + 1,
    "4n3": lambda n: 4 * n**3,
    "n3": lambda n: n**3,
}

#: largest m for which exact-rational mean laws are built (k <= 2)
MEAN_EXACT_MAX_M = 2000
#: largest m for exact-rational three-atom mean laws
TRINOMIAL_EXACT_MAX_M = 200
#: support-size cap for the even-m median joint law
EVEN_MEDIAN_MAX_SUPPORT = 8
#: general composition-enumeration cost guard for mean laws
MEAN_COST_GUARD = 10**8


@dataclass(frozen=True)
class EstimatorSpec:
    """Sampling strategy plus sample size (or a size preset)."""

    strategy: str
    m: Optional[int] = None
    preset: Optional[str] = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.preset is not None:
            if self.preset not in PRESETS:
                raise ValueError(f"unknown preset {self.preset!r}")
            if self.m is not None:
                raise ValueError("give either m or preset, not both")
            if self.strategy == "raw":
                raise ValueError("raw evaluation takes no preset")
            return
        m = 1 if self.m is None and self.strategy == "raw" else self.m
        if m is None:
            raise ValueError(f"{self.strategy} sampling requires m or preset")
        if m < 1:
            raise ValueError(f"sample size must be >= 1, got {m}")
        if self.strategy == "raw" and m != 1:
            raise ValueError("raw evaluation means m = 1")
        object.__setattr__(self, "m", int(m))

    @staticmethod
    def raw() -> "EstimatorSpec":
        return EstimatorSpec(strategy="raw", m=1)

    @staticmethod
    def mean(m: int = None, preset: str = None) -> "EstimatorSpec":
        return EstimatorSpec(strategy="mean", m=m, preset=preset)

    @staticmethod
    def median(m: int = None, preset: str = None) -> "EstimatorSpec":
        return EstimatorSpec(strategy="median", m=m, preset=preset)

    def resolve(self, n: int) -> "EstimatorSpec":
        """Expand a preset against problem size n."""
        if self.preset is None:
            return self
        return EstimatorSpec(strategy=self.strategy, m=PRESETS[self.preset](n))

    def sample_size(self, n: int) -> int:
        return self.resolve(n).m

    def to_json(self) -> dict:
        if self.preset is not None:
            return {"strategy": self.strategy, "preset": self.preset}
        return {"strategy": self.strategy, "m": self.m}

    @staticmethod
    def from_json(obj: dict) -> "EstimatorSpec":
        return EstimatorSpec(
            strategy=obj["strategy"], m=obj.get("m"), preset=obj.get("preset")
        )

    def label(self) -> str:
        if self.preset is not None:
            return f"{self.strategy}(m={self.preset})"
        return f"{self.strategy}(m={self.m})"


# -- sample-based procedures ----------------------------------------------


def mean_estimate(samples: Sequence) -> Fraction:
    """Exact mean of the observed values."""
    if len(samples) == 0:
        raise ValueError("mean of an empty sample")
    return Fraction(sum(Fraction(s) for s in samples), len(samples))


def median_estimate(samples: Sequence) -> Fraction:
    """Middle order statistic (odd m) or mean of the two middle ones (even m)."""
    if len(samples) == 0:
        raise ValueError("median of an empty sample")
    ordered = sorted(Fraction(s) for s in samples)
    m = len(ordered)
    if m % 2 == 1:
        return ordered[m // 2]
    return (ordered[m // 2 - 1] + ordered[m // 2]) / 2


def sample_estimate(
    est: EstimatorSpec,
    noise: NoiseModelSpec,
    n: int,
    i: int,
    rng: np.random.Generator,
) -> Fraction:
    """Draw m independent noisy evaluations and apply the estimator."""
    spec = est.resolve(n)
    draws = [noisy_sample(noise, n, i, rng) for _ in range(spec.m)]
    if spec.strategy == "mean":
        return mean_estimate(draws)
    if spec.strategy == "median":
        return median_estimate(draws)
    return Fraction(draws[0])


# -- exact estimator laws ---------------------------------------------------


def median_distribution(d: DiscreteDistribution, m: int) -> DiscreteDistribution:
    """Exact law of the median of m independent draws from d.

    Odd m uses CDF-threshold binomial tails (exact rationals up to
    m = 10^4 draws, incomplete-beta tails above).  Even m computes the
    joint law of the two middle order statistics, whose support includes
    pairwise midpoints; that path is guarded to small supports.
    """
    if m < 1:
        raise ValueError("sample size must be >= 1")
    if m == 1 or len(d) == 1:
        return d
    if m % 2 == 1:
        return _median_distribution_odd(d, m)
    return _median_distribution_even(d, m)


def _median_distribution_odd(d: DiscreteDistribution, m: int) -> DiscreteDistribution:
    t = (m + 1) // 2
    exact = d.exact and m <= EXACT_TAIL_MAX_M
    k = len(d)
    if exact:
        cdf = [p for _, p in d.cdf_pairs()]
        tail_le = [binom_tail_ge(m, t, F, exact=True) for F in cdf[:-1]] + [Fraction(1)]
        atoms = []
        prev = Fraction(0)
        for idx in range(k):
            atoms.append((d.values[idx], tail_le[idx] - prev))
            prev = tail_le[idx]
        return DiscreteDistribution(atoms)
    probs = np.asarray(d.probs, dtype=np.float64) if not d.exact else np.array(
        [float(p) for p in d.probs]
    )
    cdf = np.cumsum(probs)
    surv = np.cumsum(probs[::-1])[::-1]  # P(X >= v_idx)
    # P(median <= v_idx) and P(median >= v_idx); pick the numerically
    # small side per atom so tiny masses keep relative accuracy
    le = np.array([binom_tail_ge(m, t, float(F), exact=False) for F in cdf])
    ge = np.array([binom_tail_ge(m, t, float(S), exact=False) for S in surv])
    masses = np.empty(k)
    for idx in range(k):
        lo = le[idx] - (le[idx - 1] if idx > 0 else 0.0)
        hi = ge[idx] - (ge[idx + 1] if idx + 1 < k else 0.0)
        if le[idx] <= 0.5:
            masses[idx] = lo  # both terms small: good relative accuracy
        elif ge[idx] <= 0.5:
            masses[idx] = hi
        else:
            masses[idx] = lo  # bulk atom: absolute accuracy suffices
        if masses[idx] < 0:
            masses[idx] = max(lo, hi, 0.0)
    return DiscreteDistribution(list(zip(d.values, masses)))


def _median_distribution_even(d: DiscreteDistribution, m: int) -> DiscreteDistribution:
    k = len(d)
    if k > EVEN_MEDIAN_MAX_SUPPORT:
        raise UnsupportedConfigError(
            f"even-m median law limited to support <= {EVEN_MEDIAN_MAX_SUPPORT} "
            f"(got {k}); use an odd sample size or Monte Carlo estimation"
        )
    r = m // 2
    zero = Fraction(0) if d.exact else 0.0
    probs = list(d.probs)
    cdf = []
    acc = zero
    for p in probs:
        acc = acc + p
        cdf.append(acc)
    surv = []
    acc = zero
    for p in reversed(probs):
        acc = acc + p
        surv.append(acc)
    surv.reverse()  # surv[a] = P(X >= v_a)

    def F(a):  # P(X <= v_a), F(-1) = 0
        return cdf[a] if a >= 0 else zero

    def S(a):  # P(X >= v_a), S(k) = 0
        return surv[a] if a < k else zero

    atoms: dict[Fraction, object] = {}

    def add(value, p):
        if p != 0:
            atoms[value] = atoms.get(value, zero) + p

    # distinct middle order statistics v_a < v_b
    for a in range(k):
        fa = F(a) ** r - F(a - 1) ** r
        if fa == 0:
            continue
        for b in range(a + 1, k):
            sb = S(b) ** (m - r) - S(b + 1) ** (m - r)
            if sb == 0:
                continue
            add((d.values[a] + d.values[b]) / 2, math.comb(m, r) * fa * sb)
    # both middle order statistics equal v_a: below-count u <= r-1 and
    # at least r+1-u draws sit exactly at v_a (trinomial tail sums)
    for a in range(k):
        pa = probs[a]
        if pa == 0:
            continue
        total = zero
        for u in range(0, r):
            below = F(a - 1) ** u  # 0**0 == 1 covers u == 0
            if below == 0:
                continue
            inner = zero
            for w in range(r + 1 - u, m - u + 1):
                coeff = math.comb(m, u) * math.comb(m - u, w)
                inner = inner + coeff * pa**w * S(a + 1) ** (m - u - w)
            total = total + below * inner
        add(d.values[a], total)
    return DiscreteDistribution(atoms.items())


def mean_distribution(d: DiscreteDistribution, m: int) -> DiscreteDistribution:
    """Exact law of the mean of m independent draws from d.

    Two-atom supports use binomial counts, three-atom supports trinomial
    composition counts; larger supports enumerate compositions under a
    cost guard.
    """
    if m < 1:
        raise ValueError("sample size must be >= 1")
    k = len(d)
    if m == 1 or k == 1:
        return d
    if k == 2:
        return _mean_distribution_binomial(d, m)
    if k == 3:
        return _mean_distribution_trinomial(d, m)
    return _mean_distribution_general(d, m)


def _mean_distribution_binomial(d: DiscreteDistribution, m: int) -> DiscreteDistribution:
    v0, v1 = d.values
    p1 = d.probs[1]
    step = Fraction(v1 - v0, m)
    if d.exact and m <= MEAN_EXACT_MAX_M:
        pmf = binom_pmf_exact(m, p1)
        return DiscreteDistribution(
            [(v0 + r * step, pmf[r]) for r in range(m + 1)]
        )
    pmf = binom_pmf_float(m, float(p1))
    nz = np.nonzero(pmf)[0]
    return DiscreteDistribution(
        [(v0 + int(r) * step, pmf[r]) for r in nz], normalize_check=False
    )


def _mean_distribution_trinomial(d: DiscreteDistribution, m: int) -> DiscreteDistribution:
    if 3 * m * m > MEAN_COST_GUARD:
        raise UnsupportedConfigError(
            f"three-atom mean law needs ~3*m^2 = {3*m*m:.2g} compositions "
            f"(guard {MEAN_COST_GUARD:.0e}); use Monte Carlo acceptance estimation"
        )
    v = d.values
    exact = d.exact and m <= TRINOMIAL_EXACT_MAX_M
    atoms: dict[Fraction, object] = {}
    if exact:
        p = [Fraction(q) for q in d.probs]
        denom_lcm = math.lcm(*(q.denominator for q in p))
        nums = [int(q * denom_lcm) for q in p]
        denom_total = denom_lcm**m
        for r1 in range(m + 1):
            c1 = math.comb(m, r1) * nums[0] ** r1
            for r2 in range(m - r1 + 1):
                r3 = m - r1 - r2
                num = c1 * math.comb(m - r1, r2) * nums[1] ** r2 * nums[2] ** r3
                value = Fraction(r1 * v[0] + r2 * v[1] + r3 * v[2], m)
                prob = Fraction(num, denom_total)
                atoms[value] = atoms.get(value, Fraction(0)) + prob
        return DiscreteDistribution(atoms.items())
    logp = [math.log(float(q)) if q > 0 else -math.inf for q in d.probs]
    lg = [math.lgamma(r + 1) for r in range(m + 1)]
    for r1 in range(m + 1):
        for r2 in range(m - r1 + 1):
            r3 = m - r1 - r2
            ll = (
                lg[m] - lg[r1] - lg[r2] - lg[r3]
                + r1 * logp[0] + r2 * logp[1] + r3 * logp[2]
            )
            prob = math.exp(ll)
            if prob == 0.0:
                continue
            value = Fraction(r1 * v[0] + r2 * v[1] + r3 * v[2], m)
            atoms[value] = atoms.get(value, 0.0) + prob
    return DiscreteDistribution(atoms.items(), normalize_check=False)


def _mean_distribution_general(d: DiscreteDistribution, m: int) -> DiscreteDistribution:
    k = len(d)
    compositions = math.comb(m + k - 1, k - 1)
    if k * m * m > MEAN_COST_GUARD or compositions > 2_000_000:
        raise UnsupportedConfigError(
            f"{k}-atom mean law with m={m} needs {compositions} compositions "
            f"(guard k*m^2 <= {MEAN_COST_GUARD:.0e}); use Monte Carlo estimation"
        )
    if not d.exact:
        raise UnsupportedConfigError(
            "general-support mean laws are implemented for exact inputs only"
        )
    atoms: dict[Fraction, Fraction] = {}
    values = d.values
    probs = [Fraction(p) for p in d.probs]

    def rec(idx: int, remaining: int, coeff: int, prob: Fraction, vsum: Fraction):
        if idx == k - 1:
            prob = prob * probs[idx] ** remaining
            value = (vsum + remaining * values[idx]) / m
            atoms[value] = atoms.get(value, Fraction(0)) + coeff * prob
            return
        for r in range(remaining + 1):
            rec(
                idx + 1,
                remaining - r,
                coeff * math.comb(remaining, r),
                prob * probs[idx] ** r,
                vsum + r * values[idx],
            )

    rec(0, m, 1, Fraction(1), Fraction(0))
    return DiscreteDistribution(atoms.items())


def estimator_distribution(spec: EstimatorSpec, d: DiscreteDistribution, n: int = None) -> DiscreteDistribution:
    """Law of the estimator output when evaluations are drawn from d."""
    if spec.preset is not None:
        if n is None:
            raise ValueError("preset sample sizes need the problem size n")
        spec = spec.resolve(n)
    if spec.strategy == "raw":
        return d
    if spec.strategy == "mean":
        return mean_distribution(d, spec.m)
    return median_distribution(d, spec.m)


# -- acceptance probabilities ----------------------------------------------


def accept_probability(
    parent_est: DiscreteDistribution,
    offspring_est: DiscreteDistribution,
    *,
    strict: bool = False,
):
    """P(offspring estimate >= parent estimate) over independent draws.

    ``strict=True`` computes P(offspring > parent) instead (the lemma
    conditions are strict while the algorithm accepts ties).  Exact when
    both laws are exact; float64 otherwise.
    """
    exact = parent_est.exact and offspring_est.exact
    if not exact:
        parent_est = parent_est.as_float()
        offspring_est = offspring_est.as_float()
    (pv, ov), _ = scaled_integer_values([parent_est, offspring_est])
    if exact:
        suffix = [Fraction(0)] * (len(ov) + 1)
        for idx in range(len(ov) - 1, -1, -1):
            suffix[idx] = suffix[idx + 1] + offspring_est.probs[idx]
        total = Fraction(0)
        for u, p in zip(pv, parent_est.probs):
            idx = bisect.bisect_right(ov, u) if strict else bisect.bisect_left(ov, u)
            total += p * suffix[idx]
        return total
    o_probs = np.asarray(offspring_est.probs)
    suffix = np.concatenate([np.cumsum(o_probs[::-1])[::-1], [0.0]])
    use_int64 = max(
        (abs(x) for x in pv + ov), default=0
    ) < 2**62
    if use_int64:
        ov_arr = np.array(ov, dtype=np.int64)
        pv_arr = np.array(pv, dtype=np.int64)
        side = "right" if strict else "left"
        idxs = np.searchsorted(ov_arr, pv_arr, side=side)
    else:
        idxs = np.array(
            [
                bisect.bisect_right(ov, u) if strict else bisect.bisect_left(ov, u)
                for u in pv
            ]
        )
    return float(np.dot(np.asarray(parent_est.probs), suffix[idxs]))
