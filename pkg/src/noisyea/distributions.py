"""Finite discrete distributions over exact rational values.

This is the universal currency of the workbench: noisy fitness laws,
estimator output laws and acceptance computations all move through
:class:`DiscreteDistribution`.  Values are always exact rationals
(:class:`fractions.Fraction`); probabilities are exact rationals in
"exact mode" or a float64 vector in "float mode" (used when sample
sizes make exact tail sums impractical).
"""

from __future__ import annotations

import bisect
import math
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

Rational = Union[int, Fraction]

#: additive tolerance for float-mode normalization checks
FLOAT_PROB_TOL = 1e-12


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    raise TypeError(f"distribution values must be exact rationals, got {type(v).__name__}")


class DiscreteDistribution:
    """Immutable finite distribution: sorted atoms with positive mass.

    Atoms with zero probability are dropped at construction; duplicate
    values are merged.  ``probs`` is a tuple of Fractions (exact mode)
    or a read-only float64 array (float mode).
    """

    __slots__ = ("values", "probs", "exact")

    def __init__(self, atoms: Iterable[tuple], *, normalize_check: bool = True):
        pairs = [(_as_fraction(v), p) for v, p in atoms]
        exact = all(isinstance(p, (int, Fraction)) for _, p in pairs)
        merged: dict[Fraction, object] = {}
        for v, p in pairs:
            if exact:
                p = Fraction(p)
                if p < 0:
                    raise ValueError(f"negative probability {p} at value {v}")
            else:
                p = float(p)
                if p < 0:
                    if p < -FLOAT_PROB_TOL:
                        raise ValueError(f"negative probability {p} at value {v}")
                    p = 0.0
            if v in merged:
                merged[v] = merged[v] + p
            else:
                merged[v] = p
        values = sorted(v for v, p in merged.items() if p > 0)
        object.__setattr__(self, "values", tuple(values))
        object.__setattr__(self, "exact", exact)
        if exact:
            object.__setattr__(self, "probs", tuple(merged[v] for v in values))
        else:
            arr = np.array([merged[v] for v in values], dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, "probs", arr)
        if normalize_check:
            total = self.total_mass()
            if exact:
                if total != 1:
                    raise ValueError(f"probabilities sum to {total}, expected 1")
            elif abs(total - 1.0) > FLOAT_PROB_TOL:
                raise ValueError(f"probabilities sum to {total!r}, outside float tolerance")

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("DiscreteDistribution is immutable")

    # -- basic queries -------------------------------------------------

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(zip(self.values, self.probs))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        if self.values != other.values or self.exact != other.exact:
            return False
        if self.exact:
            return self.probs == other.probs
        return bool(np.array_equal(self.probs, other.probs))

    def __hash__(self):
        return hash((self.values, self.exact))

    def __repr__(self) -> str:
        inner = ", ".join(f"{v}: {p}" for v, p in self)
        mode = "exact" if self.exact else "float"
        return f"DiscreteDistribution({{{inner}}}, {mode})"

    def total_mass(self):
        if self.exact:
            return sum(self.probs, Fraction(0))
        return float(math.fsum(self.probs))

    def prob_of(self, value) -> Union[Fraction, float]:
        """Mass at an exact value (0 if absent)."""
        v = _as_fraction(value)
        idx = bisect.bisect_left(self.values, v)
        if idx < len(self.values) and self.values[idx] == v:
            return self.probs[idx]
        return Fraction(0) if self.exact else 0.0

    def expectation(self):
        if self.exact:
            return sum((v * p for v, p in self), Fraction(0))
        return float(math.fsum(float(v) * p for v, p in zip(self.values, self.probs)))

    def cdf_pairs(self):
        """List of (value, P(X <= value)) in ascending value order."""
        out = []
        if self.exact:
            acc = Fraction(0)
            for v, p in self:
                acc += p
                out.append((v, acc))
        else:
            acc = np.cumsum(self.probs)
            out = list(zip(self.values, acc))
        return out

    def as_float(self) -> "DiscreteDistribution":
        """Float-mode copy (identity when already float)."""
        if not self.exact:
            return self
        return DiscreteDistribution(
            [(v, float(p)) for v, p in self], normalize_check=False
        )

    # -- construction helpers ------------------------------------------

    @staticmethod
    def degenerate(value) -> "DiscreteDistribution":
        return DiscreteDistribution([(value, Fraction(1))])

    @staticmethod
    def from_mapping(mapping: dict) -> "DiscreteDistribution":
        return DiscreteDistribution(mapping.items())


def two_quantile(d: DiscreteDistribution) -> tuple[Fraction, bool]:
    """Smallest atom v with P(X <= v) >= 1/2 and P(X >= v) >= 1/2.

    Returns ``(value, ambiguous)``.  The flag is set when more than one
    atom qualifies, or when any point strictly between two atoms also
    satisfies both inequalities (which happens exactly when the CDF
    passes through 1/2 at an atom).
    """
    half = Fraction(1, 2)
    if not d.exact:
        raise ValueError("two_quantile requires an exact distribution")
    qualifying = []
    below = Fraction(0)  # P(X < v)
    interior_ambiguity = False
    for v, p in d:
        at_or_below = below + p
        # P(X <= v) >= 1/2  and  P(X >= v) = 1 - P(X < v) >= 1/2
        if at_or_below >= half and (1 - below) >= half:
            qualifying.append(v)
        # any x in (v, next): P(X <= x) = at_or_below, P(X >= x) = 1 - at_or_below
        if at_or_below == half:
            interior_ambiguity = True
        below = at_or_below
    if not qualifying:
        raise AssertionError("normalized distribution must admit a 2-quantile")
    ambiguous = len(qualifying) > 1 or interior_ambiguity
    return qualifying[0], ambiguous


def scaled_integer_values(
    dists: Sequence[DiscreteDistribution],
) -> tuple[list, int]:
    """Common-denominator integer representations of atom values.

    Returns one Python int list per distribution, plus the common
    denominator used.  Exact: comparisons between the returned integer
    grids are equivalent to Fraction comparisons of the atom values.
    """
    denom = 1
    for d in dists:
        for v in d.values:
            denom = denom * v.denominator // math.gcd(denom, v.denominator)
    out = []
    for d in dists:
        out.append([int(v * denom) for v in d.values])
    return out, denom
