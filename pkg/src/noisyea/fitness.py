"""OneMax fitness, bit-string solutions and the standard-bit-mutation kernel.

Everything downstream depends on a solution only through its zero-bit
count, so the mutation operator also ships as an exact (n+1)x(n+1)
transition kernel over zero counts.  Kernel entries are exact rationals
for n <= EXACT_KERNEL_MAX_N and compensated float64 sums above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

#: largest n for which the kernel is built in exact rational arithmetic
EXACT_KERNEL_MAX_N = 64


@dataclass(frozen=True)
class Solution:
    """A length-n bit string; bits stored as a uint8 numpy array."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("bits must be a nonempty 1-d sequence")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bits must be 0/1 valued")
        object.__setattr__(self, "bits", arr)

    @property
    def n(self) -> int:
        return self.bits.size

    def zero_count(self) -> int:
        return int(self.n - self.bits.sum())

    @staticmethod
    def all_ones(n: int) -> "Solution":
        return Solution(np.ones(n, dtype=np.uint8))

    @staticmethod
    def from_bits(bits) -> "Solution":
        return Solution(np.asarray(bits, dtype=np.uint8))

    @staticmethod
    def random(n: int, rng: np.random.Generator) -> "Solution":
        return Solution(rng.integers(0, 2, size=n, dtype=np.uint8))

    @staticmethod
    def with_zero_count(n: int, i: int, rng: np.random.Generator) -> "Solution":
        """Uniformly random solution with exactly i zero bits."""
        if not 0 <= i <= n:
            raise ValueError(f"zero count {i} outside [0, {n}]")
        bits = np.ones(n, dtype=np.uint8)
        zero_pos = rng.choice(n, size=i, replace=False)
        bits[zero_pos] = 0
        return Solution(bits)


def onemax_fitness(x: Solution) -> int:
    """Number of 1-bits."""
    return int(x.bits.sum())


def mutate(x: Solution, rng: np.random.Generator) -> Solution:
    """Flip each bit independently with probability 1/n.

    An unchanged offspring is legal; there is no resampling.
    """
    mask = rng.random(x.n) < 1.0 / x.n
    return Solution(x.bits ^ mask.astype(np.uint8))


@dataclass(frozen=True)
class MutationKernel:
    """Row-stochastic zero-count transition matrix of standard bit mutation.

    ``rows[i][j]`` is the probability that an offspring has j zero bits
    given the parent has i.  ``exact`` rows are tuples of Fractions;
    float rows are numpy arrays.
    """

    n: int
    rows: tuple
    exact: bool

    def row(self, i: int):
        return self.rows[i]

    def entry(self, i: int, j: int):
        return self.rows[i][j]

    def as_array(self) -> np.ndarray:
        if self.exact:
            return np.array([[float(p) for p in row] for row in self.rows])
        return np.array(self.rows)


def _kernel_row_exact(n: int, i: int) -> tuple[Fraction, ...]:
    # P[i][j] = sum over a zero-bits flipped, b one-bits flipped with
    # j = i - a + b of C(i,a) C(n-i,b) (1/n)^(a+b) (1-1/n)^(n-a-b);
    # all terms share denominator n^n.
    denom = n**n
    numerators = [0] * (n + 1)
    for a in range(i + 1):
        ca = math.comb(i, a)
        for b in range(n - i + 1):
            j = i - a + b
            numerators[j] += ca * math.comb(n - i, b) * (n - 1) ** (n - a - b)
    return tuple(Fraction(num, denom) for num in numerators)


def _kernel_row_float(n: int, i: int) -> np.ndarray:
    log_flip = -math.log(n)
    log_keep = math.log1p(-1.0 / n) if n > 1 else -math.inf
    terms: list[list[float]] = [[] for _ in range(n + 1)]
    for a in range(i + 1):
        lca = math.lgamma(i + 1) - math.lgamma(a + 1) - math.lgamma(i - a + 1)
        for b in range(n - i + 1):
            j = i - a + b
            lcb = math.lgamma(n - i + 1) - math.lgamma(b + 1) - math.lgamma(n - i - b + 1)
            ll = lca + lcb + (a + b) * log_flip + (n - a - b) * log_keep
            terms[j].append(math.exp(ll))
    return np.array([math.fsum(t) for t in terms])


def mutation_kernel(n: int, *, exact: bool | None = None) -> MutationKernel:
    """Exact zero-count kernel of per-bit flip probability 1/n."""
    if n < 1:
        raise ValueError("problem size must be >= 1")
    if exact is None:
        exact = n <= EXACT_KERNEL_MAX_N
    if exact:
        rows = tuple(_kernel_row_exact(n, i) for i in range(n + 1))
        for idx, row in enumerate(rows):
            assert sum(row) == 1, f"row {idx} of exact kernel not normalized"
    else:
        rows = tuple(_kernel_row_float(n, i) for i in range(n + 1))
        for idx, row in enumerate(rows):
            if abs(float(np.sum(row)) - 1.0) > 1e-12:
                raise AssertionError(f"row {idx} of float kernel off by > 1e-12")
    return MutationKernel(n=n, rows=rows, exact=exact)


def kernel_row_by_mask_enumeration(n: int, i: int) -> tuple[Fraction, ...]:
    """Independent oracle: exhaustive 2^n flip-mask enumeration for one row.

    Intended for tests at small n; cost is O(2^n * n).
    """
    parent = [0] * i + [1] * (n - i)
    flip = Fraction(1, n)
    keep = 1 - flip
    out = [Fraction(0)] * (n + 1)
    for mask in range(2**n):
        bits_flipped = mask.bit_count()
        prob = flip**bits_flipped * keep ** (n - bits_flipped)
        j = sum(1 for k in range(n) if parent[k] == ((mask >> k) & 1))
        out[j] += prob
    return tuple(out)
