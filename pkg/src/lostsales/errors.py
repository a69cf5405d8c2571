"""Exception types raised by the package."""


class LostSalesError(Exception):
    """Base class for every error raised here."""


class ParameterError(LostSalesError, ValueError):
    """Invalid or conflicting input parameters."""


class OutOfRangeError(LostSalesError, ValueError):
    """A performance measure lies outside its attainable range."""


class DegenerateRelationError(LostSalesError, ValueError):
    """The requested measure does not determine gamma for these parameters."""


class InternalInconsistencyError(LostSalesError, ArithmeticError):
    """A computed quantity broke a mathematical guarantee (numerics bug)."""


class InvariantViolation(LostSalesError, AssertionError):
    """The simulated system left its admissible state space (policy bug)."""


class UnreachableTargetError(LostSalesError, ValueError):
    """No reorder point within the search limit meets the service target."""
