"""Discrete-event simulation of the (r, q) lost-sales system.

Unit Poisson demand, constant lead time, every demand that finds the shelf
empty is lost. Output is a set of long-run time averages with batch-means
confidence half-widths, used to check the closed forms in :mod:`lostsales.core`.

Random numbers
--------------
Demand gaps come from numpy's Philox4x64-10 counter-based generator keyed
directly with the 64-bit seed (``np.random.Philox(key=seed)``, counter
starting at zero). Each uniform is ``Generator.random()``, i.e. the top 53
bits of one 64-bit output scaled by 2**-53, and each gap is the inverse-CDF
transform ``-log1p(-u) / lam``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import SystemParams, cycle_stock, erlang_loss
from .errors import InvariantViolation, ParameterError

__all__ = [
    "SimConfig",
    "OutstandingOrder",
    "SimState",
    "SimEstimate",
    "IdentityCheck",
    "ValidationReport",
    "default_warmup",
    "initial_state",
    "simulate",
    "validate_theorem1",
    "check_conditioned_level",
]

MIN_BATCH_ARRIVALS = 100
DEFAULT_BATCHES = 32
_CHUNK = 1 << 16
_ABS_FLOOR = 1e-9


def default_warmup(params: SystemParams) -> int:
    return max(10 * (params.r + params.q), 10_000)


@dataclass(frozen=True)
class SimConfig:
    params: SystemParams
    n_demands: int
    warmup_demands: int | None = None
    n_batches: int = DEFAULT_BATCHES
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.params, SystemParams):
            raise ParameterError("params must be a SystemParams")
        if self.warmup_demands is None:
            object.__setattr__(self, "warmup_demands", default_warmup(self.params))
        if self.n_batches < 10:
            raise ParameterError(f"need at least 10 batches, got {self.n_batches}")
        if self.n_demands < self.n_batches * MIN_BATCH_ARRIVALS:
            raise ParameterError(
                f"n_demands={self.n_demands} gives fewer than {MIN_BATCH_ARRIVALS} arrivals "
                f"per batch with {self.n_batches} batches"
            )
        if self.warmup_demands < 0:
            raise ParameterError("warmup_demands must be non-negative")
        if not (0 <= self.seed < 2**64):
            raise ParameterError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class OutstandingOrder:
    delivery_epoch: float


@dataclass
class SimState:
    params: SystemParams
    clock: float = 0.0
    on_hand: int = 0
    pipeline: deque = field(default_factory=deque)
    served: int = 0
    lost: int = 0
    stockout_time: float = 0.0
    level_integral: float = 0.0
    position_integral: float = 0.0

    @property
    def position(self) -> int:
        return self.on_hand + self.params.q * len(self.pipeline)

    def check(self, started: bool = True) -> None:
        """Raise InvariantViolation unless the state is admissible.

        ``started`` means at least one order has been triggered, after which
        the position must stay on the ladder r+1, ..., r+q.
        """
        p = self.params
        pos = self.position
        if self.on_hand < 0:
            raise InvariantViolation(f"negative on-hand stock {self.on_hand}")
        if started and not (p.r < pos <= p.r + p.q):
            raise InvariantViolation(f"position {pos} off the ladder ({p.r}, {p.r + p.q}]")
        if self.on_hand == 0 and pos != p.cycle_stock:
            raise InvariantViolation(f"stockout at position {pos}, expected {p.cycle_stock}")
        if len(self.pipeline) > p.max_outstanding:
            raise InvariantViolation(f"{len(self.pipeline)} orders outstanding, max {p.max_outstanding}")
        epochs = [o.delivery_epoch for o in self.pipeline]
        if any(b < a for a, b in zip(epochs, epochs[1:])):
            raise InvariantViolation("pipeline delivery epochs are not FIFO")


def initial_state(params: SystemParams) -> SimState:
    """Full shelf (r + q on hand), nothing on order."""
    return SimState(params=params, on_hand=params.r + params.q)


@dataclass(frozen=True)
class SimEstimate:
    """Point estimates from one run plus 95% batch-means half-widths.

    ``half_widths`` is keyed by ``gamma_time``, ``gamma_lost``, ``L``, ``U``,
    ``P`` and ``L_cond`` (average on-hand level while stock is positive).
    """

    gamma_time: float
    gamma_lost: float
    L_hat: float
    U_hat: float
    P_hat: float
    L_cond: float
    half_widths: dict
    demands_observed: int
    served: int
    lost: int
    elapsed: float
    n_batches: int


def _demand_gaps(rng: np.random.Generator, lam: float, n: int):
    while n > 0:
        m = min(n, _CHUNK)
        u = rng.random(m)
        yield from (-np.log1p(-u) / lam).tolist()
        n -= m


def _half_width(values: np.ndarray, tq: float) -> float:
    if len(values) < 2 or not np.all(np.isfinite(values)):
        return math.inf
    return float(tq * np.std(values, ddof=1) / math.sqrt(len(values)))


def simulate(config: SimConfig, trace=None) -> SimEstimate:
    """Run one replication and return its time averages.

    ``trace``, if given, is called after every event as
    ``trace(kind, clock, on_hand, position, pipeline, served, delivered)``
    with ``kind`` one of ``"delivery"``, ``"served"``, ``"lost"``. The
    pipeline deque is live; do not mutate it.
    """
    p = config.params
    r, q, lam, tau = p.r, p.q, p.lam, p.tau
    cs = cycle_stock(r, q)
    max_out = p.max_outstanding

    state = initial_state(p)
    on_hand = state.on_hand
    init_on_hand = on_hand
    position = on_hand
    pipe = deque()
    clock = 0.0
    served_total = 0
    delivered = 0

    n = config.n_demands
    nb = config.n_batches
    # batch 0 is the warm-up and is discarded; batch sizes differ by at most one
    sizes = [config.warmup_demands] + [(k + 1) * n // nb - k * n // nb for k in range(nb)]
    gaps = _demand_gaps(np.random.Generator(np.random.Philox(key=config.seed)), lam, config.warmup_demands + n)

    cols = np.zeros((7, nb + 1))  # duration, stockout, level, position, on-order units, lost, arrivals
    for b, size in enumerate(sizes):
        start = clock
        st = lvl = pos_int = out_int = 0.0
        lost = 0
        for _ in range(size):
            t = clock + next(gaps)
            while pipe and pipe[0] <= t:
                d = pipe.popleft()
                dt = d - clock
                lvl += on_hand * dt
                pos_int += position * dt
                out_int += (len(pipe) + 1) * dt
                if on_hand == 0:
                    st += dt
                clock = d
                on_hand += q
                delivered += 1
                if trace is not None:
                    trace("delivery", clock, on_hand, position, pipe, served_total, delivered)
            dt = t - clock
            lvl += on_hand * dt
            pos_int += position * dt
            out_int += len(pipe) * dt
            clock = t
            if on_hand == 0:
                st += dt
                lost += 1
                if trace is not None:
                    trace("lost", clock, on_hand, position, pipe, served_total, delivered)
                continue
            on_hand -= 1
            position -= 1
            served_total += 1
            if position == r:
                due = t + tau
                if pipe and due < pipe[-1]:
                    raise InvariantViolation("order would overtake an earlier one")
                pipe.append(due)
                position += q
                if len(pipe) > max_out:
                    raise InvariantViolation(f"{len(pipe)} orders outstanding, max {max_out}")
            if on_hand == 0 and position != cs:
                raise InvariantViolation(f"stockout at position {position}, expected {cs}")
            if trace is not None:
                trace("served", clock, on_hand, position, pipe, served_total, delivered)
        if init_on_hand + q * delivered - served_total != on_hand:
            raise InvariantViolation("stock is not conserved")
        if position != on_hand + q * len(pipe):
            raise InvariantViolation("position out of sync with on-hand and pipeline")
        cols[:, b] = (clock - start, st, lvl, pos_int, q * out_int, lost, size)

    cols = cols[:, 1:]
    dur, st, lvl, pos_int, out_int, lost, arr = cols
    T = dur.sum()
    up = T - st.sum()
    tq = float(stats.t.ppf(0.975, nb - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        per_batch = {
            "gamma_time": st / dur,
            "gamma_lost": lost / arr,
            "L": lvl / dur,
            "U": out_int / dur,
            "P": pos_int / dur,
            "L_cond": lvl / (dur - st),
        }
    hws = {k: _half_width(v, tq) for k, v in per_batch.items()}
    total_lost = int(lost.sum())
    return SimEstimate(
        gamma_time=float(st.sum() / T),
        gamma_lost=total_lost / n,
        L_hat=float(lvl.sum() / T),
        U_hat=float(out_int.sum() / T),
        P_hat=float(pos_int.sum() / T),
        L_cond=float(lvl.sum() / up) if up > 0 else math.nan,
        half_widths=hws,
        demands_observed=n,
        served=n - total_lost,
        lost=total_lost,
        elapsed=float(T),
        n_batches=nb,
    )


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    observed: float
    expected: float
    tolerance: float

    @property
    def discrepancy(self) -> float:
        return abs(self.observed - self.expected)

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.tolerance


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> IdentityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _tolerance(k_sigma: float, expected: float, *hws: float) -> float:
    # floor keeps exact-zero half-widths from failing on rounding noise
    return k_sigma * math.hypot(*hws) + _ABS_FLOOR * (1.0 + abs(expected))


def validate_theorem1(estimate: SimEstimate, params: SystemParams, k_sigma: float = 3.0) -> ValidationReport:
    """Check the simulated averages against the gamma relations.

    Each identity is evaluated at the simulated ``gamma_time`` and passes
    when the discrepancy is within ``k_sigma`` combined half-widths; the
    half-width of a term ``c * gamma_time`` is ``|c|`` times that of gamma.
    """
    g = estimate.gamma_time
    hw = estimate.half_widths
    hg = hw["gamma_time"]
    a = params.r + 0.5 * (params.q + 1)
    cs = params.cycle_stock
    x = params.x

    u_exp = (1.0 - g) * x
    p_exp = (1.0 - g) * a + g * cs
    l_exp = (1.0 - g) * (a - x) + g * cs
    checks = (
        IdentityCheck("U", estimate.U_hat, u_exp, _tolerance(k_sigma, u_exp, hw["U"], x * hg)),
        IdentityCheck("P", estimate.P_hat, p_exp, _tolerance(k_sigma, p_exp, hw["P"], abs(cs - a) * hg)),
        IdentityCheck("L", estimate.L_hat, l_exp, _tolerance(k_sigma, l_exp, hw["L"], abs(cs - a + x) * hg)),
        IdentityCheck("PASTA", estimate.gamma_time, estimate.gamma_lost,
                      _tolerance(k_sigma, g, hg, hw["gamma_lost"])),
    )
    return ValidationReport(checks)


def check_conditioned_level(estimate: SimEstimate, params: SystemParams, k_sigma: float = 3.0) -> IdentityCheck:
    """Average on-hand level while stock is positive, against its q = 1 closed form.

    For q = 1 this level is (r + 1 - x) + (r + 1) B / (1 - B) with
    B = erlang_loss(r + 1, x).
    """
    if params.q != 1:
        raise ParameterError("the closed-form conditioned level holds for q = 1 only")
    r, x = params.r, params.x
    b = erlang_loss(r + 1, x)
    expected = (r + 1 - x) + (r + 1) * b / (1.0 - b)
    return IdentityCheck("L_cond", estimate.L_cond, expected,
                         _tolerance(k_sigma, expected, estimate.half_widths["L_cond"]))
