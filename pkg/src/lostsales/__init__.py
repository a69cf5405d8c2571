"""Bounds and simulation for the (r, q) lost-sales system with Poisson demand."""

from .core import (
    BoundsResult,
    PerformanceMeasures,
    SystemParams,
    bounds,
    cycle_stock,
    erlang_loss,
    gamma_from_measure,
    loss_function,
    lower_bound_gamma,
    measures_from_gamma,
    poisson_tail,
    upper_bound_gamma,
)
from .errors import (
    DegenerateRelationError,
    InternalInconsistencyError,
    InvariantViolation,
    LostSalesError,
    OutOfRangeError,
    ParameterError,
    UnreachableTargetError,
)

__version__ = "0.1.0"
