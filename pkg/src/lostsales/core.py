"""Closed-form quantities for the (r, q) lost-sales system.

Poisson loss function, Erlang loss, the lower and upper bounds on the
long-run stockout fraction ``gamma``, and the linear relations tying
``gamma`` to the average on-hand level ``L``, average inventory position
``P`` and average units on order ``U``.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (
    DegenerateRelationError,
    InternalInconsistencyError,
    OutOfRangeError,
    ParameterError,
)

__all__ = [
    "SystemParams",
    "BoundsResult",
    "PerformanceMeasures",
    "cycle_stock",
    "poisson_pmf",
    "poisson_tail",
    "loss_function",
    "erlang_loss",
    "lower_bound_gamma",
    "upper_bound_gamma",
    "bounds",
    "measures_from_gamma",
    "gamma_from_measure",
]

PROB_SLACK = 1e-12

_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# Series coefficients of the Stirling remainder: 1/12, 1/360, 1/1260, 1/1680, 1/1188.
_S0 = 1.0 / 12.0
_S1 = 1.0 / 360.0
_S2 = 1.0 / 1260.0
_S3 = 1.0 / 1680.0
_S4 = 1.0 / 1188.0


@dataclass(frozen=True)
class SystemParams:
    """One (r, q) system with Poisson demand rate ``lam`` and lead time ``tau``.

    ``x`` is the mean lead-time demand ``lam * tau``; it is derived once at
    construction and never passed in.
    """

    r: int
    q: int
    lam: float
    tau: float
    x: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.r, bool) or not isinstance(self.r, int) or self.r < 0:
            raise ParameterError(f"reorder point r must be a non-negative integer, got {self.r!r}")
        if isinstance(self.q, bool) or not isinstance(self.q, int) or self.q < 1:
            raise ParameterError(f"order quantity q must be a positive integer, got {self.q!r}")
        lam = float(self.lam)
        tau = float(self.tau)
        if not (math.isfinite(lam) and lam > 0):
            raise ParameterError(f"demand rate must be positive and finite, got {self.lam!r}")
        if not (math.isfinite(tau) and tau > 0):
            raise ParameterError(f"lead time must be positive and finite, got {self.tau!r}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "x", lam * tau)

    @classmethod
    def from_x(cls, r: int, q: int, x: float) -> "SystemParams":
        """Build from the mean lead-time demand alone (unit lead time)."""
        return cls(r, q, float(x), 1.0)

    @property
    def cycle_stock(self) -> int:
        return cycle_stock(self.r, self.q)

    @property
    def max_outstanding(self) -> int:
        """Largest number of orders that can be outstanding at once."""
        return (self.r + self.q) // self.q


def cycle_stock(r: int, q: int) -> int:
    """Inventory position whenever on-hand stock is zero: ``q * floor((r+q)/q)``."""
    return q * ((r + q) // q)


@dataclass(frozen=True)
class BoundsResult:
    loss: float
    erlang: float
    lb: float
    ub: float

    @property
    def gap(self) -> float:
        return self.ub - self.lb


@dataclass(frozen=True)
class PerformanceMeasures:
    """Long-run stockout fraction and the three average stock quantities."""

    gamma: float
    L: float
    P: float
    U: float


def _check_probability(value: float, what: str) -> float:
    # rounding excursions are clamped; anything larger is a bug
    if value < 0.0:
        if value < -PROB_SLACK:
            raise InternalInconsistencyError(f"{what} = {value!r} is below 0")
        return 0.0
    if value > 1.0:
        if value > 1.0 + PROB_SLACK:
            raise InternalInconsistencyError(f"{what} = {value!r} is above 1")
        return 1.0
    return value


def _check_x(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise ParameterError(f"mean demand x must be finite and non-negative, got {x!r}")
    return x


def _check_count(n, what: str) -> int:
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise ParameterError(f"{what} must be a non-negative integer, got {n!r}")
    return n


def _stirling_remainder(n: int) -> float:
    """``log(n!) - (n + 1/2) log n + n - log sqrt(2 pi)`` for n >= 1."""
    if n <= 15:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _LN_SQRT_2PI
    nn = float(n) * n
    if n > 500:
        return (_S0 - _S1 / nn) / n
    if n > 80:
        return (_S0 - (_S1 - _S2 / nn) / nn) / n
    if n > 35:
        return (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / n
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / n


def _deviance(k: int, mu: float) -> float:
    """``k log(k/mu) + mu - k`` without cancellation when k is close to mu."""
    d = k - mu
    if abs(d) < 0.1 * (k + mu):
        v = d / (k + mu)
        s = d * v
        ej = 2.0 * k * v
        v2 = v * v
        j = 1
        while True:
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return k * math.log(k / mu) + mu - k


def poisson_pmf(k: int, mu: float) -> float:
    """P(X = k) for X ~ Poisson(mu), accurate to a few ulps for large k and mu.

    Uses the saddle-point form exp(-stirling(k) - deviance(k, mu)) / sqrt(2 pi k),
    which avoids the cancellation in ``k log mu - mu - lgamma(k+1)``.
    """
    if k < 0:
        return 0.0
    if mu == 0.0:
        return 1.0 if k == 0 else 0.0
    if k == 0:
        return math.exp(-mu)
    return math.exp(-_stirling_remainder(k) - _deviance(k, mu)) / math.sqrt(2.0 * math.pi * k)


def _sum_down(start: int, mu: float, weight) -> float:
    """fsum of weight(k) * pmf(k) for k = start, start-1, ..., 0 (start <= mu)."""
    terms = []
    p = poisson_pmf(start, mu)
    k = start
    total = 0.0
    while k >= 0:
        t = weight(k) * p
        terms.append(t)
        total += t
        if p == 0.0 or t < total * 1e-18:
            break
        p *= k / mu
        k -= 1
    return math.fsum(terms)


def _sum_up(start: int, mu: float, weight) -> float:
    """fsum of weight(k) * pmf(k) for k = start, start+1, ... (start >= mu)."""
    terms = []
    p = poisson_pmf(start, mu)
    k = start
    total = 0.0
    while p > 0.0:
        t = weight(k) * p
        terms.append(t)
        total += t
        if t < total * 1e-18:
            break
        k += 1
        p *= mu / k
    return math.fsum(terms)


def poisson_tail(k: int, mu: float) -> float:
    """P(X >= k) for X ~ Poisson(mu)."""
    mu = _check_x(mu)
    if k <= 0:
        return 1.0
    if mu == 0.0:
        return 0.0
    if k > mu:
        return min(1.0, _sum_up(k, mu, lambda j: 1.0))
    # lower side is the short one; the complement is at least ~1/2 here
    return max(0.0, 1.0 - _sum_down(k - 1, mu, lambda j: 1.0))


def loss_function(x: float, r: int) -> float:
    """Expected shortfall E[(X - r)^+] for X ~ Poisson(x).

    Both branches sum positive terms only, walking away from the mode:
    for r >= x the upper tail sum_{k>r} (k-r) p_k, otherwise
    (x - r) + sum_{k<r} (r-k) p_k.
    """
    x = _check_x(x)
    r = _check_count(r, "r")
    if x == 0.0:
        return 0.0
    if r >= x:
        return _sum_up(r + 1, x, lambda k: k - r)
    if r == 0:
        return x
    return math.fsum([x - r, _sum_down(r - 1, x, lambda k: r - k)])


def erlang_loss(servers: int, x: float) -> float:
    """Erlang B blocking probability with ``servers`` servers and offered load ``x``.

    Computed by the recurrence B_n = x B_{n-1} / (n + x B_{n-1}), B_0 = 1.
    """
    if isinstance(servers, bool) or not isinstance(servers, int) or servers < 1:
        raise ParameterError(f"servers must be a positive integer, got {servers!r}")
    return _erlang(servers, _check_x(x))


def _erlang(n: int, x: float) -> float:
    b = 1.0
    for k in range(1, n + 1):
        xb = x * b
        b = xb / (k + xb)
    return b


def _lb_from_loss(loss: float, cs: int) -> float:
    return _check_probability(loss / (loss + cs), "lower bound")


def _ub_from_erlang(b_r: float, r: int, q: int, x: float) -> float:
    # odds of the bound: (r+1)/cs * x^{r+1}/(r+1)! / sum_{k<=r} x^k/k! = x B(r, x) / cs
    odds = x * b_r / cycle_stock(r, q)
    return _check_probability(odds / (1.0 + odds), "upper bound")


def lower_bound_gamma(params: SystemParams) -> float:
    """Lower bound LOSS / (LOSS + q floor((r+q)/q)); exact when r < q."""
    loss = loss_function(params.x, params.r)
    return _lb_from_loss(loss, params.cycle_stock)


def upper_bound_gamma(params: SystemParams) -> float:
    """Upper bound on gamma; equals the Erlang loss B(r+1, x) when q = 1.

    Evaluated through its odds c * B(r+1)/(1-B(r+1)) with
    c = (r+1)/(q floor((r+q)/q)). Those odds equal x B(r, x)/(r+1), so the
    bound only needs the recurrence up to r servers and never forms
    x^(r+1)/(r+1)! or 1 - B.
    """
    b_r = _erlang(params.r, params.x)
    return _ub_from_erlang(b_r, params.r, params.q, params.x)


def bounds(params: SystemParams) -> BoundsResult:
    r, x = params.r, params.x
    loss = loss_function(x, r)
    b_r = _erlang(r, x)
    xb = x * b_r
    erlang = xb / (r + 1 + xb)
    lb = _lb_from_loss(loss, params.cycle_stock)
    ub = _ub_from_erlang(b_r, r, params.q, x)
    if lb > ub:
        if lb > ub + PROB_SLACK:
            raise InternalInconsistencyError(f"lower bound {lb!r} exceeds upper bound {ub!r} for {params}")
        lb = ub
    return BoundsResult(loss=loss, erlang=erlang, lb=lb, ub=ub)


def _position_when_available(params: SystemParams) -> float:
    # mean position while stock is on hand: uniform on r+1..r+q
    return params.r + 0.5 * (params.q + 1)


def measures_from_gamma(gamma: float, params: SystemParams) -> PerformanceMeasures:
    gamma = float(gamma)
    if not (0.0 <= gamma <= 1.0):
        raise OutOfRangeError(f"gamma must lie in [0, 1], got {gamma!r}")
    P = (1.0 - gamma) * _position_when_available(params) + gamma * params.cycle_stock
    U = (1.0 - gamma) * params.x
    return PerformanceMeasures(gamma=gamma, L=P - U, P=P, U=U)


def _affine(which: str, params: SystemParams) -> tuple[float, float]:
    """(value at gamma=0, value at gamma=1) of the chosen measure."""
    a = _position_when_available(params)
    cs = params.cycle_stock
    if which == "P":
        return a, float(cs)
    if which == "U":
        return params.x, 0.0
    if which == "L":
        return a - params.x, float(cs)
    raise ParameterError(f"measure must be one of 'L', 'P', 'U', got {which!r}")


def gamma_from_measure(which: str, value: float, params: SystemParams) -> float:
    """Invert the linear relation between gamma and one of L, P, U.

    Raises DegenerateRelationError when the chosen measure does not depend
    on gamma for these parameters (P whenever q floor((r+q)/q) equals
    r + (q+1)/2, e.g. every q = 1 system), and OutOfRangeError when
    ``value`` is not attained for any gamma in [0, 1].
    """
    v0, v1 = _affine(which, params)
    slope = v1 - v0
    if slope == 0.0:
        raise DegenerateRelationError(
            f"{which} equals {v0!r} for every gamma when r={params.r}, q={params.q}, x={params.x}"
        )
    value = float(value)
    gamma = (value - v0) / slope
    slack = PROB_SLACK * max(1.0, abs(v0), abs(v1)) / abs(slope)
    if not (-slack <= gamma <= 1.0 + slack) or math.isnan(gamma):
        lo, hi = sorted((v0, v1))
        raise OutOfRangeError(f"{which}={value!r} is outside the attainable range [{lo!r}, {hi!r}]")
    return min(1.0, max(0.0, gamma))
