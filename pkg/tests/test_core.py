import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lostsales import (
    DegenerateRelationError,
    InternalInconsistencyError,
    OutOfRangeError,
    ParameterError,
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
from lostsales import core


# --- independent oracles -----------------------------------------------------


def loss_series(x, r, terms=200):
    """Truncated defining series in 50-digit arithmetic."""
    with mpmath.workdps(50):
        x = mpmath.mpf(x)
        return float(mpmath.fsum((k - r) * x**k / mpmath.factorial(k) for k in range(r, r + terms)) * mpmath.exp(-x))


def loss_gamma(x, r, dps=120):
    """x P(X >= r-1) - r P(X >= r) via regularized incomplete gamma at high precision."""
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)

        def tail(k):
            return mpmath.mpf(1) if k <= 0 else mpmath.gammainc(k, 0, x, regularized=True)

        return x * tail(r - 1) - r * tail(r)


def erlang_direct(s, x):
    x = Fraction(x)
    top = x**s / math.factorial(s)
    return float(top / sum(x**k / math.factorial(k) for k in range(s + 1)))


def ub_direct(r, q, x):
    with mpmath.workdps(50):
        x = mpmath.mpf(x)
        c = mpmath.mpf(r + 1) / cycle_stock(r, q)
        t = x ** (r + 1) / mpmath.factorial(r + 1)
        s = mpmath.fsum(x**k / mpmath.factorial(k) for k in range(r + 1))
        return float(c * t / (c * t + s))


def P(r, q, x):
    return SystemParams.from_x(r, q, x)


# --- SystemParams ------------------------------------------------------------


def test_params_derive_x():
    p = SystemParams(3, 2, 0.4, 2.5)
    assert p.x == 0.4 * 2.5
    assert SystemParams.from_x(3, 2, 7.25).x == 7.25


@pytest.mark.parametrize("args", [(-1, 1, 1.0, 1.0), (0, 0, 1.0, 1.0), (1, 1, 0.0, 1.0), (1, 1, 1.0, -2.0),
                                  (1.5, 1, 1.0, 1.0), (1, 1, math.nan, 1.0), (True, 1, 1.0, 1.0)])
def test_params_reject(args):
    with pytest.raises(ParameterError):
        SystemParams(*args)


@pytest.mark.parametrize("r", range(0, 40))
@pytest.mark.parametrize("q", [1, 2, 3, 7, 16, 41])
def test_cycle_stock_range(r, q):
    cs = cycle_stock(r, q)
    assert r < cs <= r + q
    assert cs % q == 0


def test_cycle_stock_exact_for_huge_values():
    # float division would round here
    r, q = 2**60 - 1, 3
    assert cycle_stock(r, q) == q * ((r + q) // q)


# --- loss function -----------------------------------------------------------


def test_loss_examples():
    assert loss_function(0, 5) == 0
    assert loss_function(1, 0) == 1
    assert loss_function(1, 2) == pytest.approx(0.10363832351433, rel=1e-12)
    assert loss_function(1, 2) == pytest.approx(loss_series(1, 2), rel=1e-13)


@pytest.mark.parametrize("x", [0.05, 0.5, 1.0, 3.3, 10.0, 25.0, 60.0, 100.0])
@pytest.mark.parametrize("r", [0, 1, 2, 5, 10, 20, 35, 50])
def test_loss_matches_truncated_series(x, r):
    expected = loss_series(x, r, terms=400)
    assert loss_function(x, r) == pytest.approx(expected, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize(
    "x, r",
    [(2048.0, 1024), (1024.0, 1024), (512.0, 1024), (768.0, 1024), (1536.0, 1024),
     (8192.0, 4096), (4096.0, 4096), (3000.0, 4096), (8192.0, 8100), (7000.5, 7100), (0.3, 40)],
)
def test_loss_large_arguments(x, r):
    expected = loss_gamma(x, r)
    assert float(expected) > 1e-280
    assert loss_function(x, r) == pytest.approx(float(expected), rel=1e-12)


@pytest.mark.parametrize("x, r", [(1.0, 1.0), (-1.0, 2), (2.0, -1)])
def test_loss_rejects(x, r):
    with pytest.raises(ParameterError):
        loss_function(x, r)


def test_tail_identity_between_consecutive_losses():
    for x in [0.7, 4.0, 17.5, 99.0, 250.0, 400.0]:
        for r in [0, 1, 3, 10, 50, 120, 200]:
            diff = loss_function(x, r) - loss_function(x, r + 1)
            assert diff == pytest.approx(stats.poisson.sf(r, x), abs=1e-10)


@pytest.mark.parametrize("x", [0.1, 2.0, 30.0, 800.0])
@pytest.mark.parametrize("k", [0, 1, 2, 15, 40, 900])
def test_poisson_tail_against_scipy(x, k):
    assert poisson_tail(k, x) == pytest.approx(stats.poisson.sf(k - 1, x), rel=1e-11, abs=1e-300)


def test_poisson_pmf_saddle_point_accuracy():
    with mpmath.workdps(40):
        for k, mu in [(8192, 8192.0), (5000, 5100.5), (1, 0.5), (20, 3.0), (300, 250.0)]:
            exact = mpmath.exp(k * mpmath.log(mu) - mu - mpmath.loggamma(k + 1))
            assert core.poisson_pmf(k, mu) == pytest.approx(float(exact), rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(0.0, 300.0), r=st.integers(0, 300))
def test_loss_monotone(x, r):
    base = loss_function(x, r)
    assert base >= 0
    assert loss_function(x, r + 1) <= base
    assert loss_function(x + 0.5, r) >= base


# --- Erlang loss ---------------------------------------------------------------


def test_erlang_examples():
    assert erlang_loss(1, 1) == 0.5
    assert erlang_loss(3, 0) == 0
    assert erlang_loss(3, 1) == 0.0625


@pytest.mark.parametrize("servers", range(1, 31))
@pytest.mark.parametrize("x", [0.0, 0.1, 1.0, 4.5, 15.0, 30.0, 60.0])
def test_erlang_recurrence_matches_direct_sum(servers, x):
    assert erlang_loss(servers, x) == pytest.approx(erlang_direct(servers, x), rel=1e-12, abs=0)


@pytest.mark.parametrize("servers, x", [(0, 1.0), (2, -1.0), (1.0, 1.0)])
def test_erlang_rejects(servers, x):
    with pytest.raises(ParameterError):
        erlang_loss(servers, x)


def test_erlang_large_servers_finite():
    b = erlang_loss(1025, 2048.0)
    assert 0.0 < b < 1.0
    # offered load twice capacity: blocking near 1 - servers/x
    assert b == pytest.approx(1 - 1025 / 2048, abs=0.01)


# --- bounds --------------------------------------------------------------------


def test_lower_bound_examples():
    assert lower_bound_gamma(P(2, 2, 1.0)) == pytest.approx(0.025255, abs=5e-7)
    assert 1 - lower_bound_gamma(P(2, 2, 1.0)) == pytest.approx(0.974745, abs=5e-7)
    assert lower_bound_gamma(P(5, 3, 1e-300)) == 0.0
    l44 = loss_series(4, 4)
    assert lower_bound_gamma(P(4, 3, 4.0)) == pytest.approx(l44 / (l44 + 6), rel=1e-12)
    assert lower_bound_gamma(P(4, 3, 4.0)) == pytest.approx(0.11523571955411591, rel=1e-12)


def test_upper_bound_examples():
    assert upper_bound_gamma(P(2, 2, 1.0)) == pytest.approx(1 / 21, rel=1e-14)
    assert 1 - upper_bound_gamma(P(2, 2, 1.0)) == pytest.approx(0.952381, abs=5e-7)
    assert upper_bound_gamma(P(3, 1, 2.0)) == pytest.approx(erlang_loss(4, 2.0), rel=1e-14)
    assert upper_bound_gamma(P(8, 5, 8.0)) == pytest.approx(ub_direct(8, 5, 8.0), rel=1e-13)
    assert upper_bound_gamma(P(8, 5, 8.0)) == pytest.approx(0.15857227846328664, rel=1e-13)


@pytest.mark.parametrize("r, q, x", [(0, 1, 3.0), (4, 2, 9.0), (20, 7, 15.0), (40, 3, 80.0), (60, 60, 1.0), (5, 2, 0.01)])
def test_upper_bound_matches_high_precision_quotient(r, q, x):
    assert upper_bound_gamma(P(r, q, x)) == pytest.approx(ub_direct(r, q, x), rel=1e-12)


def test_upper_bound_no_overflow_at_large_r():
    ub = upper_bound_gamma(P(1024, 3, 2048.0))
    assert 0.0 < ub < 1.0
    assert upper_bound_gamma(P(1024, 1, 1e6)) == pytest.approx(erlang_loss(1025, 1e6), rel=1e-12)


def test_bounds_bundle():
    b = bounds(P(2, 2, 1.0))
    assert b.loss == pytest.approx(0.103638, abs=5e-7)
    assert b.erlang == 0.0625
    assert b.lb == pytest.approx(0.025255, abs=5e-7)
    assert b.ub == pytest.approx(0.047619, abs=5e-7)

    tiny = bounds(P(0, 1, 1e-12))
    assert tiny.lb == pytest.approx(tiny.ub, rel=1e-12)
    assert tiny.ub < 1e-11

    b8 = bounds(P(8, 8, 8.0))
    assert b8.ub - b8.lb <= 0.0628


def test_bounds_detects_inconsistency(monkeypatch):
    monkeypatch.setattr(core, "_ub_from_erlang", lambda *a: 0.01)
    with pytest.raises(InternalInconsistencyError):
        bounds(P(2, 2, 1.0))


def test_probability_clamp_only_absorbs_rounding():
    assert core._check_probability(1.0 + 5e-13, "p") == 1.0
    assert core._check_probability(-5e-13, "p") == 0.0
    with pytest.raises(InternalInconsistencyError):
        core._check_probability(1.0 + 1e-9, "p")


GRID = [
    (r, q, x)
    for r in range(0, 65)
    for q in range(1, r + 5)
    for x in (0.25 * r + 0.1, 0.5 * r + 0.1, r + 0.1, 2 * r + 0.1)
]


def test_bounds_ordered_on_grid():
    for r, q, x in GRID:
        b = bounds(P(r, q, x))
        assert 0.0 <= b.lb <= b.ub <= 1.0, (r, q, x)
        assert b.loss >= 0 and 0.0 <= b.erlang <= 1.0


def test_equality_cases_on_grid():
    for r, q, x in GRID:
        p = P(r, q, x)
        if q == 1:
            assert upper_bound_gamma(p) == pytest.approx(erlang_loss(r + 1, x), rel=1e-12)
        if r < q:
            loss = loss_function(x, r)
            assert lower_bound_gamma(p) == pytest.approx(loss / (loss + q), rel=1e-12)


# --- measures --------------------------------------------------------------------


def test_measures_examples():
    p = P(2, 2, 1.0)
    m = measures_from_gamma(0, p)
    assert (m.P, m.U, m.L) == (3.5, 1.0, 2.5)
    m = measures_from_gamma(1, p)
    assert (m.P, m.U, m.L) == (4.0, 0.0, 4.0)
    m = measures_from_gamma(0.03, p)
    assert m.P == pytest.approx(3.515, rel=1e-14)
    assert m.U == pytest.approx(0.97, rel=1e-14)
    assert m.L == pytest.approx(2.545, rel=1e-14)


@pytest.mark.parametrize("g", [-0.01, 1.01, math.nan])
def test_measures_reject_bad_gamma(g):
    with pytest.raises(OutOfRangeError):
        measures_from_gamma(g, P(2, 2, 1.0))


def test_gamma_from_measure_examples():
    p = P(2, 2, 1.0)
    assert gamma_from_measure("U", p.x, p) == 0.0
    assert gamma_from_measure("P", cycle_stock(2, 2), p) == 1.0
    assert gamma_from_measure("L", 2.545, p) == pytest.approx(0.03, rel=1e-12)
    assert gamma_from_measure("U", 0.97, p) == pytest.approx(0.03, rel=1e-12)


def test_gamma_from_measure_errors():
    p = P(2, 2, 1.0)
    with pytest.raises(OutOfRangeError):
        gamma_from_measure("U", 1.5, p)
    with pytest.raises(OutOfRangeError):
        gamma_from_measure("P", 3.0, p)
    with pytest.raises(ParameterError):
        gamma_from_measure("gamma", 0.5, p)
    # position is pinned at r + 1 whenever q = 1
    with pytest.raises(DegenerateRelationError):
        gamma_from_measure("P", 4.0, P(3, 1, 2.0))
    # L is constant when r + (q+1)/2 - x equals q floor((r+q)/q): 4.5 - 0.5 == 4
    with pytest.raises(DegenerateRelationError):
        gamma_from_measure("L", 4.0, P(3, 2, 0.5))


ROUND_TRIP_PARAMS = [P(2, 2, 1.0), P(8, 3, 12.5), P(0, 4, 0.3), P(64, 5, 70.1), P(1024, 17, 2048.0)]


@pytest.mark.parametrize("p", ROUND_TRIP_PARAMS, ids=str)
@pytest.mark.parametrize("which", ["L", "P", "U"])
@pytest.mark.parametrize("g", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_round_trip(p, which, g):
    m = measures_from_gamma(g, p)
    assert gamma_from_measure(which, getattr(m, which), p) == pytest.approx(g, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(g=st.floats(0, 1), r=st.integers(0, 500), q=st.integers(1, 500), x=st.floats(1e-6, 1e3))
def test_measures_satisfy_level_relation(g, r, q, x):
    p = P(r, q, x)
    m = measures_from_gamma(g, p)
    cs = q * ((r + q) // q)
    level = (1 - g) * (r + 0.5 * (q + 1) - x) + g * cs
    assert m.L == pytest.approx(level, rel=1e-12, abs=1e-12 * (r + q + x))
    assert m.U == pytest.approx((1 - g) * x, rel=1e-12)
    assert m.L == pytest.approx(m.P - m.U, rel=1e-12, abs=1e-12 * (r + q + x))


@settings(max_examples=300, deadline=None)
@given(r=st.integers(0, 200), q=st.integers(1, 200), x=st.floats(1e-3, 400))
def test_bounds_property(r, q, x):
    b = bounds(P(r, q, x))
    assert 0.0 <= b.lb <= b.ub <= 1.0
