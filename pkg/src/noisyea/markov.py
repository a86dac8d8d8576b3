"""Lumped-chain construction, hitting times, drift and condition checkers.

The search process projects exactly onto zero-count states 0..n because
mutation and every noise model depend on a solution only through its
zero count.  This module builds that (n+1)-state absorbing chain from a
noise model and an estimator, solves expected first hitting times as a
linear system (with an arbitrary-exponent fallback for regimes whose
hitting times overflow float64), and implements the drift decomposition
and the numeric condition checkers used by the experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import mpmath as mp
import numpy as np
from scipy import linalg as sla

from .distributions import DiscreteDistribution
from .errors import ChainStructureError, InapplicableBoundError, NumericFailureError
from .estimators import (
    EstimatorSpec,
    accept_probability,
    estimator_distribution,
    median_distribution,
)
from .fitness import MutationKernel, mutation_kernel
from .noise import NoiseModelSpec, noise_pmf

#: EFHT entries above this are flagged "effectively exponential"
OVERFLOW_THRESHOLD = 1e15
#: per-law atom cap under which the acceptance matrix is kept exact
EXACT_ACCEPTANCE_MAX_ATOMS = 256


# -- chain construction ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class LumpedChain:
    """Zero-count chain: mutation kernel x acceptance, optimum absorbing."""

    n: int
    noise: NoiseModelSpec
    estimator: EstimatorSpec
    kernel: MutationKernel
    acceptance: np.ndarray
    transition: np.ndarray
    acceptance_exact: Optional[tuple] = None
    estimator_laws: Optional[tuple] = None

    @property
    def m(self) -> int:
        return self.estimator.m

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "noise": self.noise.to_json(),
            "estimator": self.estimator.to_json(),
            "acceptance": self.acceptance.tolist(),
            "transition": self.transition.tolist(),
        }


def build_chain(n: int, noise: NoiseModelSpec, est: EstimatorSpec) -> LumpedChain:
    """Assemble the exact lumped chain for one configuration.

    Acceptance entry (i, j) is the probability that an offspring with j
    zero bits is accepted against a parent with i, under fresh
    independent estimates of both.
    """
    est = est.resolve(n)
    laws = tuple(
        estimator_distribution(est, noise_pmf(noise, n, i)) for i in range(n + 1)
    )
    exact_ok = all(law.exact and len(law) <= EXACT_ACCEPTANCE_MAX_ATOMS for law in laws)
    A = np.empty((n + 1, n + 1))
    A_exact = None
    if exact_ok:
        A_exact = tuple(
            tuple(accept_probability(laws[i], laws[j]) for j in range(n + 1))
            for i in range(n + 1)
        )
        for i in range(n + 1):
            for j in range(n + 1):
                A[i, j] = float(A_exact[i][j])
    else:
        float_laws = [law.as_float() for law in laws]
        for i in range(n + 1):
            for j in range(n + 1):
                A[i, j] = accept_probability(float_laws[i], float_laws[j])
    kernel = mutation_kernel(n)
    K = kernel.as_array()
    T = np.zeros((n + 1, n + 1))
    T[0, 0] = 1.0
    for i in range(1, n + 1):
        off = K[i] * A[i]
        off[i] = 0.0
        s = math.fsum(off)
        T[i] = off
        T[i, i] = max(1.0 - s, 0.0)
    return LumpedChain(
        n=n,
        noise=noise,
        estimator=est,
        kernel=kernel,
        acceptance=A,
        transition=T,
        acceptance_exact=A_exact,
        estimator_laws=laws,
    )


def _check_absorbing(T: np.ndarray):
    n1 = T.shape[0]
    if not (T[0, 0] == 1.0 and np.all(T[0, 1:] == 0.0)):
        raise ChainStructureError("state 0 is not absorbing")
    # reverse reachability from the optimum over positive transitions
    reached = np.zeros(n1, dtype=bool)
    reached[0] = True
    frontier = [0]
    incoming = [np.nonzero(T[:, j] > 0.0)[0] for j in range(n1)]
    while frontier:
        j = frontier.pop()
        for i in incoming[j]:
            if not reached[i]:
                reached[i] = True
                frontier.append(int(i))
    if not reached.all():
        missing = np.nonzero(~reached)[0].tolist()
        raise ChainStructureError(
            f"optimum unreachable from states {missing}; hitting times diverge"
        )


# -- expected first hitting times -------------------------------------------


@dataclass(frozen=True)
class EFHTVector:
    """Expected iterations to absorption from every zero-count state.

    ``iterations[i]`` may be ``inf`` when the true value exceeds float64
    range; ``log10`` stays finite in that case (computed by the
    arbitrary-exponent solver).  ``overflow`` is set as soon as any
    entry exceeds 1e15: growth rate, not digits, is the claim there.
    """

    iterations: np.ndarray
    log10: np.ndarray
    residual: float
    overflow: bool
    method: str

    def from_initial(self, initial: np.ndarray) -> float:
        """EFHT over a start distribution on zero counts."""
        initial = np.asarray(initial, dtype=np.float64)
        if abs(initial.sum() - 1.0) > 1e-9:
            raise ValueError("initial distribution must be normalized")
        return float(np.dot(initial, self.iterations))

    def csv_rows(self) -> list[tuple]:
        return [
            (
                i,
                self.iterations[i],
                int(self.overflow and self.iterations[i] > OVERFLOW_THRESHOLD),
                self.log10[i],
            )
            for i in range(len(self.iterations))
        ]

    def to_json(self) -> dict:
        return {
            "iterations": self.iterations.tolist(),
            "log10": self.log10.tolist(),
            "residual": self.residual,
            "overflow": self.overflow,
            "method": self.method,
        }


def _solve_float64(T: np.ndarray):
    n = T.shape[0] - 1
    A = np.eye(n) - T[1:, 1:]
    b = np.ones(n)
    lu, piv = sla.lu_factor(A)
    x = sla.lu_solve((lu, piv), b)
    # one round of iterative refinement
    r = b - A @ x
    x = x + sla.lu_solve((lu, piv), r)
    r = b - A @ x
    denom = np.linalg.norm(A, np.inf) * np.linalg.norm(x, np.inf) + 1.0
    residual = float(np.linalg.norm(r, np.inf) / denom)
    return x, residual


def _solve_mp(T: np.ndarray, prec_bits: int):
    n = T.shape[0] - 1
    with mp.workprec(prec_bits):
        A = mp.zeros(n, n)
        for i in range(n):
            for j in range(n):
                A[i, j] = -mp.mpf(T[i + 1, j + 1])
            A[i, i] += 1
        b = mp.matrix([1] * n)
        x = mp.lu_solve(A, b)
        r = A * x - b
        xnorm = max((abs(v) for v in x), default=mp.mpf(1))
        residual = max((abs(v) for v in r), default=mp.mpf(0)) / (2 * xnorm + 1)
        return x, residual, xnorm


def exact_efht(chain: LumpedChain) -> EFHTVector:
    """Solve E[0] = 0, E[i] = 1 + sum_j T[i][j] E[j] exactly enough.

    float64 with iterative refinement first; if entries overflow the
    1e15 threshold the system is re-solved with enough mantissa bits to
    resolve the largest entry, and log10 magnitudes are reported.
    """
    T = chain.transition
    _check_absorbing(T)
    n = chain.n
    x = None
    residual = math.inf
    try:
        x, residual = _solve_float64(T)
    except (sla.LinAlgError, ValueError):
        pass
    finite = x is not None and np.all(np.isfinite(x)) and np.all(x >= 0)
    if finite and residual <= 1e-8 and float(np.max(x)) <= OVERFLOW_THRESHOLD:
        iterations = np.concatenate([[0.0], x])
        with np.errstate(divide="ignore"):
            log10 = np.log10(iterations)
        return EFHTVector(iterations, log10, residual, False, "float64")
    # arbitrary-exponent path: precision must cover the dynamic range
    est_log10 = 30.0
    if finite and residual <= 1e-6:
        est_log10 = max(30.0, math.log10(float(np.max(x))))
    prec = int(3.33 * est_log10) + 120
    for _ in range(4):
        xs, res_mp, xnorm = _solve_mp(T, prec)
        needed = int(3.33 * float(mp.log10(xnorm))) + 120 if xnorm > 1 else 120
        if needed <= prec and res_mp < mp.mpf(10) ** (-12):
            iterations = np.array(
                [0.0] + [float(v) for v in xs]
            )  # inf where beyond float64
            log10 = np.array(
                [-math.inf] + [float(mp.log10(v)) if v > 0 else -math.inf for v in xs]
            )
            overflow = bool((log10[1:] > math.log10(OVERFLOW_THRESHOLD)).any())
            return EFHTVector(iterations, log10, float(res_mp), overflow, "mp")
        prec = max(needed, prec * 2)
    raise NumericFailureError(
        f"hitting-time solve did not converge (last residual {res_mp})"
    )


def value_iteration_efht(
    chain: LumpedChain, rtol: float = 1e-10, max_sweeps: int = 50_000_000
) -> np.ndarray:
    """Independent oracle: fixed-point iteration E <- 1 + T E, E[0] = 0.

    Stops when a geometric-tail extrapolation of the remaining error
    drops below ``rtol`` relative to the current iterate.
    """
    T = chain.transition
    n1 = T.shape[0]
    E = np.zeros(n1)
    ones = np.ones(n1)
    prev_incr = None
    check_every = 64
    for sweep in range(1, max_sweeps + 1):
        nxt = ones + T @ E
        nxt[0] = 0.0
        if sweep % check_every == 0:
            incr = float(np.max(nxt - E))
            if incr == 0.0:
                return nxt
            if prev_incr is not None and incr < prev_incr:
                # increments decay geometrically; extrapolate the tail
                # from the per-sweep ratio implied by the check spacing
                rho = (incr / prev_incr) ** (1.0 / check_every)
                remaining = incr * rho / (1.0 - rho) if rho < 1.0 else math.inf
                if remaining <= rtol * max(float(np.max(nxt)), 1.0):
                    return nxt
            prev_incr = incr
        E = nxt
    raise NumericFailureError("value iteration did not converge")


def binomial_initial(n: int) -> np.ndarray:
    """Binomial(n, 1/2) over zero counts: the uniform law on bit strings."""
    return np.array([float(Fraction(math.comb(n, i), 2**n)) for i in range(n + 1)])


def expected_runtime(
    efht: EFHTVector,
    est: EstimatorSpec,
    initial: Optional[np.ndarray] = None,
    *,
    n: Optional[int] = None,
) -> float:
    """Fitness-evaluation count m + 2m * E(tau) over the start distribution.

    The leading m pays for estimating the initial solution; each
    iteration estimates the offspring and re-estimates the parent.
    """
    if initial is None:
        if n is None:
            n = len(efht.iterations) - 1
        initial = binomial_initial(n)
    if n is None:
        n = len(initial) - 1
    m = est.sample_size(n)
    return m + 2.0 * m * efht.from_initial(initial)


# -- distance functions and drift -------------------------------------------

DISTANCE_KINDS = ("identity", "two-plateau", "mid-plateau")


@dataclass(frozen=True)
class DistanceFunction:
    """Per-state distance to the optimum used by the drift arguments.

    ``identity`` is the zero count itself.  The two piecewise variants
    flatten the regions where noisy comparisons are uninformative:
    ``two-plateau`` (valid for n/(2(n+1)) < p < n/(n+7)) pins two bands
    around n/(2p) and n - n/(2p); ``mid-plateau`` (valid for
    p >= n/(n+7)) pins one band spanning the middle.
    """

    kind: str
    n: int
    p: Optional[Fraction] = None
    values: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance function {self.kind!r}")
        n = self.n
        if self.kind == "identity":
            vals = tuple(Fraction(i) for i in range(n + 1))
        else:
            if self.p is None:
                raise ValueError(f"{self.kind} requires the noise level p")
            p = Fraction(self.p)
            object.__setattr__(self, "p", p)
            h = Fraction(n) / (2 * p)  # center of the upper uninformative band
            if self.kind == "two-plateau":
                if not Fraction(n, 2 * (n + 1)) < p < Fraction(n, n + 7):
                    raise ValueError(
                        f"two-plateau distance needs n/(2(n+1)) < p < n/(n+7), got p={p}"
                    )
                lo2 = max(Fraction(1), n - h - 3)
                vals = []
                for i in range(n + 1):
                    if h - 3 <= i <= h + 3:
                        vals.append(h)
                    elif lo2 <= i <= n - h + 3:
                        vals.append(n - h + 2)
                    else:
                        vals.append(Fraction(i))
                vals = tuple(vals)
            else:
                if not p >= Fraction(n, n + 7):
                    raise ValueError(
                        f"mid-plateau distance needs p >= n/(n+7), got p={p}"
                    )
                vals = tuple(
                    Fraction(n, 2)
                    if (n - h - 3 <= i <= h + 3 and i > 0)
                    else Fraction(i)
                    for i in range(n + 1)
                )
        if vals[0] != 0:
            raise AssertionError("distance of the optimum must be 0")
        if any(v <= 0 for v in vals[1:]):
            raise AssertionError("distance must be positive off the optimum")
        object.__setattr__(self, "values", vals)

    @staticmethod
    def identity(n: int) -> "DistanceFunction":
        return DistanceFunction(kind="identity", n=n)

    @staticmethod
    def two_plateau(n: int, p) -> "DistanceFunction":
        return DistanceFunction(kind="two-plateau", n=n, p=Fraction(p))

    @staticmethod
    def mid_plateau(n: int, p) -> "DistanceFunction":
        return DistanceFunction(kind="mid-plateau", n=n, p=Fraction(p))


def distance_value(df: DistanceFunction, i: int) -> Fraction:
    if not 0 <= i <= df.n:
        raise ValueError(f"state {i} outside [0, {df.n}]")
    return df.values[i]


@dataclass(frozen=True)
class DriftParts:
    """One-step expected distance decrease, split into gain and loss."""

    total: Union[Fraction, float]
    positive: Union[Fraction, float]
    negative: Union[Fraction, float]


def drift(chain: LumpedChain, df: DistanceFunction, i: int) -> DriftParts:
    """E+ - E- decomposition at state i (exact when the chain is exact)."""
    if not 1 <= i <= chain.n:
        raise ValueError(f"drift is defined for 1 <= i <= n, got {i}")
    exact = chain.kernel.exact and chain.acceptance_exact is not None
    V = df.values
    if exact:
        krow = chain.kernel.row(i)
        arow = chain.acceptance_exact[i]
        pos = Fraction(0)
        neg = Fraction(0)
        for j in range(chain.n + 1):
            w = krow[j] * arow[j]
            if V[j] < V[i]:
                pos += w * (V[i] - V[j])
            elif V[j] > V[i]:
                neg += w * (V[j] - V[i])
        return DriftParts(pos - neg, pos, neg)
    krow = np.asarray(chain.kernel.as_array()[i])
    arow = chain.acceptance[i]
    Vf = np.array([float(v) for v in V])
    w = krow * arow
    diff = Vf[i] - Vf
    pos = float(np.sum(w[diff > 0] * diff[diff > 0]))
    neg = float(-np.sum(w[diff < 0] * diff[diff < 0]))
    return DriftParts(pos - neg, pos, neg)


def drift_direct(chain: LumpedChain, df: DistanceFunction, i: int) -> float:
    """Consistency reference: one-step expected V-decrease straight from T."""
    V = np.array([float(v) for v in df.values])
    row = chain.transition[i]
    return float(V[i] - np.dot(row, V))


def additive_drift_bound(
    df: DistanceFunction, chain: LumpedChain, i: int
) -> Union[Fraction, float]:
    """Upper bound V(i)/c on the EFHT from state i, c = minimum drift.

    Raises :class:`InapplicableBoundError` when some state has
    nonpositive drift (the bound's hypothesis fails; the chain itself
    is fine).
    """
    drifts = [drift(chain, df, j).total for j in range(1, chain.n + 1)]
    c = min(drifts)
    if c <= 0:
        state = drifts.index(c) + 1
        raise InapplicableBoundError(
            f"minimum drift {float(c):.3g} at state {state} is not positive"
        )
    return distance_value(df, i) / c


# -- concentration checkers -------------------------------------------------


@dataclass(frozen=True)
class ConcentrationCase:
    """One applicable concentration regime at a state."""

    name: str
    predicted_value: Fraction
    probability: float
    reference_bound: float


def onebit_median_concentration(
    n: int, p, i: int, m: int, delta
) -> list[ConcentrationCase]:
    """Exact concentration of the m-sample median under one-bit noise.

    Evaluates, for caller-supplied margin delta > 0, which of the three
    regimes applies at zero count i and returns the exact probability of
    the predicted median value next to the two-sided Hoeffding reference
    1 - 2 exp(-2 delta^2 m / n^2).
    """
    if m % 2 == 0:
        raise ValueError("median concentration is stated for odd sample sizes")
    p = Fraction(p)
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    law = noise_pmf(NoiseModelSpec.one_bit(p), n, i)
    med = median_distribution(law, m)
    ref = 1.0 - 2.0 * math.exp(-2.0 * float(delta) ** 2 * m / n**2)
    half = Fraction(1, 2)
    thr = half + delta / n
    cases = []
    f = n - i
    if p * (n - i) / n >= thr:
        cases.append(
            ConcentrationCase("down-shift", Fraction(f - 1), float(med.prob_of(f - 1)), ref)
        )
    if p * i / n >= thr:
        cases.append(
            ConcentrationCase("up-shift", Fraction(f + 1), float(med.prob_of(f + 1)), ref)
        )
    if p * i / n <= half - delta / n:
        prob_le = float(
            math.fsum(float(q) for v, q in med if v <= f)
        )
        cases.append(ConcentrationCase("at-most-true", Fraction(f), prob_le, ref))
        if p * (n - i) / n <= half - delta / n:
            cases.append(
                ConcentrationCase("pinned-true", Fraction(f), float(med.prob_of(f)), ref)
            )
    return cases


def segmented_median_concentration(
    n: int, theta1: int, theta2: int, i: int, m: int
) -> tuple[Fraction, float]:
    """Exact P(median = majority value) under segmented noise.

    Returns (predicted value, probability).  Exact-evaluation states
    report probability 1.
    """
    if m % 2 == 0:
        raise ValueError("median concentration is stated for odd sample sizes")
    from .noise import segmented_pmf

    law = segmented_pmf(n, i, theta1, theta2)
    if i > theta2:
        return Fraction(n - i), 1.0
    majority = Fraction(n - i) if i > theta1 else Fraction(4 * n * (n - i))
    med = median_distribution(law, m)
    return majority, float(med.prob_of(majority))


# -- comparison-condition checkers ------------------------------------------


def strict_comparison_matrix(
    n: int, noise: NoiseModelSpec, est: EstimatorSpec
) -> list[list]:
    """S[j][a] = P(estimate of a j-zero solution < estimate of an a-zero one).

    Strict inequality: ties are excluded here while the acceptance rule
    includes them; the two must not be conflated.
    """
    est = est.resolve(n)
    laws = [estimator_distribution(est, noise_pmf(noise, n, i)) for i in range(n + 1)]
    S: list[list] = []
    for j in range(n + 1):
        row = []
        for a in range(n + 1):
            row.append(accept_probability(laws[j], laws[a], strict=True))
        S.append(row)
    return S


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a quantified comparison condition."""

    passed: bool
    witness: Optional[tuple] = None
    margin: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "witness": list(self.witness) if self.witness else None,
            "margin": self.margin,
        }


def check_reliable_comparisons(S: Sequence[Sequence], n: int, l, c) -> ConditionReport:
    """Sufficient conditions for efficient optimization via trustworthy
    comparisons: worse solutions lose against strictly better ones with
    probability at least 1 - l/n everywhere, tightening to 1 - c*i/n
    beyond level l.  Returns the first violation as a witness.
    """
    l = Fraction(l) if not isinstance(l, float) else l
    c = Fraction(c) if not isinstance(c, float) else c
    if not 0 < c <= Fraction(1, 15):
        raise ValueError("constant c must satisfy 0 < c <= 1/15")
    if not 2 < l <= Fraction(n, 2):
        raise ValueError("level l must satisfy 2 < l <= n/2")
    worst = None
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            prob = S[j][i - 1]
            thr1 = 1 - l / n
            bad = prob < thr1
            margin = float(prob - thr1)
            if i > l:
                thr2 = 1 - c * i / n
                if prob < thr2:
                    bad = True
                margin = min(margin, float(prob - thr2))
            if worst is None or margin < worst[2]:
                worst = (i, j, margin)
            if bad:
                return ConditionReport(False, witness=(i, j), margin=margin)
    return ConditionReport(True, witness=None, margin=worst[2] if worst else None)


def check_deceptive_comparisons(S: Sequence[Sequence], n: int, l, c) -> ConditionReport:
    """Sufficient condition for exponential escape times: near the
    optimum, the one-step improvement wins with probability at most
    1 - c*i/n.  Returns the first violation as a witness.
    """
    c = Fraction(c) if not isinstance(c, float) else c
    l = Fraction(l) if not isinstance(l, float) else l
    if not c >= 16:
        raise ValueError("constant c must satisfy c >= 16")
    if not 0 < l <= Fraction(n, 4):
        raise ValueError("level l must satisfy 0 < l <= n/4")
    worst = None
    for i in range(1, math.floor(l) + 1):
        prob = S[i][i - 1]
        thr = 1 - c * i / n
        margin = float(thr - prob)
        if worst is None or margin < worst[1]:
            worst = (i, margin)
        if prob > thr:
            return ConditionReport(False, witness=(i, i - 1), margin=margin)
    return ConditionReport(True, witness=None, margin=worst[1] if worst else None)
