"""Exception types shared across the workbench.

Plain ``ValueError`` is used for precondition/usage violations; the
classes here mark conditions a caller may want to route differently
(cost guards and numeric breakdowns map to distinct CLI exit codes).
"""


class UnsupportedConfigError(Exception):
    """A configuration exceeds a documented cost guard.

    The message names the guard and a workaround (odd sample sizes or
    Monte Carlo estimation).
    """


class NumericFailureError(Exception):
    """A numeric computation failed its own quality check (residual,
    non-finite solve) with no fallback left."""


class ChainStructureError(Exception):
    """The transition system is not an absorbing chain with the optimum
    reachable from every state."""


class InapplicableBoundError(Exception):
    """The additive-drift bound does not apply: some state has
    nonpositive drift under the chosen distance function."""
