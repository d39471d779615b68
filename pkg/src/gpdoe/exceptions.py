"""Exception hierarchy shared across the package."""


class GpdoeError(Exception):
    """Base class for all errors raised by gpdoe."""


class DimensionMismatch(GpdoeError):
    """Inputs have incompatible dimensions."""


class NoBracket(GpdoeError):
    """Root bracket endpoints do not straddle a sign change."""


class NoConvergence(GpdoeError):
    """Iterative routine exhausted its iteration budget."""


class NegativeCount(GpdoeError):
    """Observed counts must be nonnegative integers."""


class ModelMNotOne(GpdoeError):
    """Operation requires exactly one observation per unit (m == 1)."""


class RankDeficientA(GpdoeError):
    """Coefficient matrix of the linear aspect is rank deficient."""


class NotIdentifiable(GpdoeError):
    """Requested linear aspect is not identifiable under the design."""


class SingularForD(GpdoeError):
    """D-criterion needs a regular information matrix."""


class ZeroCriterion(GpdoeError):
    """Efficiency ratio is undefined because a criterion value is zero."""


class BadIndexSet(GpdoeError):
    """Parameter index set must be a nonempty proper subset of {0..p-1}."""


class ZeroSlope(GpdoeError):
    """Closed-form constructions require all slope coefficients nonzero."""


class BadP(GpdoeError):
    """Closed-form constructions require at least two parameters (p >= 2)."""


class NonpositiveZ(GpdoeError):
    """Distance-to-vertex parameter z must be positive."""


class SingularInfo(GpdoeError):
    """Sensitivity evaluation needs a regular information matrix."""


class IneligibleCriterion(GpdoeError):
    """Criterion variant not covered by the cross-model comparison."""


class SingularStart(GpdoeError):
    """Weight optimizer started from a singular information matrix."""


class NoImprovement(GpdoeError):
    """Weight optimizer could not find an ascent step."""
