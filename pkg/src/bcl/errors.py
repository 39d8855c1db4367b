"""Exception hierarchy shared by every module."""


class BCLError(Exception):
    """Base class for all library errors."""


class DimensionError(BCLError, ValueError):
    """Probability tables with mismatched support sizes."""


class DomainError(BCLError, ValueError):
    """An argument lies outside the domain of the operation."""


class NormalizationError(BCLError, ValueError):
    """Weights are negative or do not sum to one."""


class InjectivityError(BCLError, ValueError):
    """Two indices of a family map to the same density."""


class PreconditionError(BCLError, ValueError):
    """A stated precondition of an inequality does not hold."""


class HypothesisError(PreconditionError):
    """A hypothesis of a bound fails; the message names it."""


class EmptyRestrictionError(BCLError, ValueError):
    """A restriction set carries zero prior mass."""


class DegenerateEvidenceError(BCLError, ValueError):
    """Every index with positive prior weight has zero likelihood."""


class InfeasibleError(BCLError, ValueError):
    """A sample-size gate fails, so no admissible plan exists."""


class DivergenceError(BCLError, ArithmeticError):
    """A series that must converge does not."""


class BoundViolation(BCLError, AssertionError):
    """A certified inequality was violated numerically."""


class ConfigError(BCLError, ValueError):
    """Invalid scenario configuration; the message names the offending field."""
