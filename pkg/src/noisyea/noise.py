"""Noisy fitness models as exact per-state distributions plus samplers.

Three models: one-bit noise (a random bit is flipped before evaluation
with probability p), segmented noise (exact far from the optimum, two
distinct corruptions nearer it) and partial noise (exact on the poor
half of the space, a two-point corruption on the good half).  All of
them depend on a solution only through its zero count, so each model is
a map from zero count i to a :class:`DiscreteDistribution` over noisy
fitness values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .distributions import DiscreteDistribution

NOISE_KINDS = ("none", "one-bit", "segmented", "partial")


@dataclass(frozen=True)
class NoiseModelSpec:
    """Identifies a noise model and its parameters.

    ``p`` applies to one-bit noise only.  ``theta1``/``theta2`` are the
    segment boundaries of segmented noise (in zero-count bits); when
    omitted they default to floor(n/100) and floor(n/50) at pmf time.
    ``faithful`` rejects problem sizes not divisible by 100, for which
    the default boundaries reproduce the model's defining constants
    exactly.
    """

    kind: str
    p: Optional[Fraction] = None
    theta1: Optional[int] = None
    theta2: Optional[int] = None
    faithful: bool = False

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "one-bit":
            if self.p is None:
                raise ValueError("one-bit noise requires p")
            object.__setattr__(self, "p", Fraction(self.p))
            if not 0 <= self.p <= 1:
                raise ValueError(f"noise probability {self.p} outside [0, 1]")
        elif self.p is not None:
            raise ValueError(f"{self.kind} noise takes no p parameter")
        if self.kind != "segmented" and (self.theta1 is not None or self.theta2 is not None):
            raise ValueError(f"{self.kind} noise takes no segment boundaries")

    # -- constructors ---------------------------------------------------

    @staticmethod
    def none() -> "NoiseModelSpec":
        return NoiseModelSpec(kind="none")

    @staticmethod
    def one_bit(p) -> "NoiseModelSpec":
        return NoiseModelSpec(kind="one-bit", p=Fraction(p))

    @staticmethod
    def segmented(theta1=None, theta2=None, faithful=False) -> "NoiseModelSpec":
        return NoiseModelSpec(kind="segmented", theta1=theta1, theta2=theta2, faithful=faithful)

    @staticmethod
    def partial() -> "NoiseModelSpec":
        return NoiseModelSpec(kind="partial")

    # -- boundary resolution --------------------------------------------

    def boundaries(self, n: int) -> tuple[int, int]:
        """Resolved (theta1, theta2) for problem size n (segmented only)."""
        if self.kind != "segmented":
            raise ValueError("boundaries are defined for segmented noise only")
        if self.faithful and n % 100 != 0:
            raise ValueError(f"faithful segmented noise requires 100 | n, got n={n}")
        t1 = self.theta1 if self.theta1 is not None else n // 100
        t2 = self.theta2 if self.theta2 is not None else n // 50
        if not 0 <= t1 < t2 <= n:
            raise ValueError(f"invalid segment boundaries 0 <= {t1} < {t2} <= {n}")
        if t1 == 0:
            warnings.warn(
                "segmented noise with theta1=0: the cubic segment covers only "
                "the optimum itself",
                stacklevel=2,
            )
        return t1, t2

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        if self.kind == "one-bit":
            return {"kind": "one-bit", "p": float(self.p)}
        if self.kind == "segmented":
            out: dict = {"kind": "segmented", "faithful": self.faithful}
            if self.theta1 is not None:
                out["theta1"] = self.theta1
            if self.theta2 is not None:
                out["theta2"] = self.theta2
            return out
        return {"kind": self.kind}

    @staticmethod
    def from_json(obj: dict) -> "NoiseModelSpec":
        kind = obj["kind"]
        if kind == "one-bit":
            p = obj["p"]
            if isinstance(p, float):
                # JSON floats like 0.9 mean the decimal, not the binary float
                p = Fraction(p).limit_denominator(10**9)
            return NoiseModelSpec.one_bit(Fraction(p))
        if kind == "segmented":
            return NoiseModelSpec.segmented(
                obj.get("theta1"), obj.get("theta2"), obj.get("faithful", False)
            )
        if kind in ("none", "partial"):
            return NoiseModelSpec(kind=kind)
        raise ValueError(f"unknown noise kind {kind!r}")

    def label(self) -> str:
        if self.kind == "one-bit":
            return f"one-bit(p={float(self.p):g})"
        if self.kind == "segmented":
            t1 = self.theta1 if self.theta1 is not None else "n/100"
            t2 = self.theta2 if self.theta2 is not None else "n/50"
            return f"segmented({t1},{t2})"
        return self.kind


# -- per-state exact laws ------------------------------------------------


def _check_state(n: int, i: int):
    if not 0 <= i <= n:
        raise ValueError(f"zero count {i} outside [0, {n}]")


def onebit_pmf(n: int, i: int, p) -> DiscreteDistribution:
    """Law of noisy fitness under one-bit noise at zero count i.

    With probability p a uniformly chosen bit is flipped before
    evaluation: a 1-bit with probability (n-i)/n (fitness drops by one),
    a 0-bit with probability i/n (fitness rises by one).
    """
    _check_state(n, i)
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"noise probability {p} outside [0, 1]")
    f = n - i
    atoms = {
        f - 1: p * (n - i) / n,
        f: 1 - p,
        f + 1: p * i / n,
    }
    return DiscreteDistribution(atoms.items())


def segmented_pmf(n: int, i: int, theta1: int, theta2: int) -> DiscreteDistribution:
    """Law of noisy fitness under segmented noise at zero count i."""
    _check_state(n, i)
    if not 0 <= theta1 < theta2 <= n:
        raise ValueError(f"invalid segment boundaries 0 <= {theta1} < {theta2} <= {n}")
    f = n - i
    if i > theta2:
        return DiscreteDistribution.degenerate(f)
    if i > theta1:
        half = Fraction(1, 2)
        return DiscreteDistribution(
            [(f, half + Fraction(1, n)), (3 * n + i, half - Fraction(1, n))]
        )
    return DiscreteDistribution(
        [(4 * n * f, 1 - Fraction(1, n)), ((2 * n + i) ** 3, Fraction(1, n))]
    )


def partial_pmf(n: int, i: int) -> DiscreteDistribution:
    """Law of noisy fitness under partial noise at zero count i.

    Exact on the poor half (2i >= n); otherwise i/2 with probability 2/3
    and 2(n-i) with probability 1/3, so the reported value grows as the
    solution worsens.
    """
    _check_state(n, i)
    if 2 * i >= n:
        return DiscreteDistribution.degenerate(n - i)
    return DiscreteDistribution(
        [(Fraction(i, 2), Fraction(2, 3)), (2 * (n - i), Fraction(1, 3))]
    )


def noise_pmf(spec: NoiseModelSpec, n: int, i: int) -> DiscreteDistribution:
    """Per-state noisy fitness law for any model."""
    _check_state(n, i)
    if spec.kind == "none":
        return DiscreteDistribution.degenerate(n - i)
    if spec.kind == "one-bit":
        return onebit_pmf(n, i, spec.p)
    if spec.kind == "segmented":
        t1, t2 = spec.boundaries(n)
        return segmented_pmf(n, i, t1, t2)
    return partial_pmf(n, i)


# -- samplers -------------------------------------------------------------


def noisy_sample(spec: NoiseModelSpec, n: int, i: int, rng: np.random.Generator):
    """One noisy fitness draw for a solution with i zero bits.

    Matches :func:`noise_pmf` exactly; one-bit noise picks a fresh
    uniform bit position on every evaluation.
    """
    _check_state(n, i)
    f = n - i
    if spec.kind == "none":
        return f
    if spec.kind == "one-bit":
        if rng.random() < spec.p:
            # flipped bit is a 0-bit with probability i/n
            if rng.random() * n < i:
                return f + 1
            return f - 1
        return f
    if spec.kind == "segmented":
        t1, t2 = spec.boundaries(n)
        if i > t2:
            return f
        if i > t1:
            if rng.random() < 0.5 + 1.0 / n:
                return f
            return 3 * n + i
        if rng.random() < 1.0 - 1.0 / n:
            return 4 * n * f
        return (2 * n + i) ** 3
    # partial
    if 2 * i >= n:
        return f
    if rng.random() < 2.0 / 3.0:
        return Fraction(i, 2)
    return 2 * (n - i)
