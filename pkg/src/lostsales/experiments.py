"""Parameter sweeps: the published bound table, the worst-gap curve, and
simulation checks of the bounds over a grid of systems."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from decimal import Decimal
from importlib import resources

from .core import SystemParams, _erlang, _lb_from_loss, _ub_from_erlang, bounds, cycle_stock, loss_function
from .errors import ParameterError, UnreachableTargetError
from .simulator import SimConfig, check_conditioned_level, simulate, validate_theorem1

__all__ = [
    "TABLE2_R",
    "TABLE2_K",
    "AggregateRow",
    "FigurePoint",
    "CellCheck",
    "CellResult",
    "aggregate_row",
    "table2",
    "figure1",
    "load_paper_table2",
    "compare_table2",
    "cell_seed",
    "make_grid",
    "verify_cell",
    "verify_grid",
    "search_min_r",
    "write_records",
]

TABLE2_R = tuple(2**k for k in range(1, 11))
TABLE2_K = (0.5, 0.75, 1.0, 1.5, 2.0)
AGGREGATE_FIELDS = ("avg_ub_sl_pct", "avg_lb_sl_pct", "avg_diff", "max_diff", "min_diff")


@dataclass(frozen=True)
class AggregateRow:
    """Bounds aggregated over q = 2..r for one (r, K), in percent.

    The labels follow the published table: ``avg_ub_sl_pct`` is the mean of
    100 (1 - lower bound on gamma), i.e. the service-level *upper* bound, and
    ``avg_lb_sl_pct`` is the mean of 100 (1 - upper bound on gamma).
    """

    r: int
    K: float
    avg_ub_sl_pct: float
    avg_lb_sl_pct: float
    avg_diff: float
    max_diff: float
    min_diff: float


@dataclass(frozen=True)
class FigurePoint:
    r: int
    worst_gap: float
    worst_K: float
    worst_q: int


def _gap_sweep(r: int, x: float, q_values):
    """Yield (q, lb, ub) over q, sharing the q-independent pieces."""
    loss = loss_function(x, r)
    b_r = _erlang(r, x)
    for q in q_values:
        lb = _lb_from_loss(loss, cycle_stock(r, q))
        ub = _ub_from_erlang(b_r, r, q, x)
        yield q, lb, ub


def aggregate_row(r: int, K: float) -> AggregateRow:
    if r < 2:
        raise ParameterError("aggregates need r >= 2 (q runs over 2..r)")
    n = r - 1
    ub_sl, lb_sl, diffs = [], [], []
    for _, lb, ub in _gap_sweep(r, K * r, range(2, r + 1)):
        ub_sl.append(1.0 - lb)
        lb_sl.append(1.0 - ub)
        diffs.append(ub - lb)
    return AggregateRow(
        r=r,
        K=K,
        avg_ub_sl_pct=100.0 * math.fsum(ub_sl) / n,
        avg_lb_sl_pct=100.0 * math.fsum(lb_sl) / n,
        avg_diff=100.0 * math.fsum(diffs) / n,
        max_diff=100.0 * max(diffs),
        min_diff=100.0 * min(diffs),
    )


def table2(r_values=TABLE2_R, k_values=TABLE2_K) -> list[AggregateRow]:
    """One row per (r, K), r-major, matching the published layout."""
    return [aggregate_row(r, K) for r in r_values for K in k_values]


def _k_grid(k_min: float, k_max: float, k_step: float) -> list[float]:
    lo, hi, step = Decimal(str(k_min)), Decimal(str(k_max)), Decimal(str(k_step))
    n = int((hi - lo) / step)
    return [float(lo + i * step) for i in range(n + 1)]


def figure1(r_max: int = 100, k_min: float = 0.5, k_max: float = 1.5, k_step: float = 0.01) -> list[FigurePoint]:
    """Worst bound gap over q = 2..r and K on [k_min, k_max], for each r = 2..r_max.

    K values are generated as exact decimals k_min + i * k_step.
    """
    if r_max < 2:
        raise ParameterError("r_max must be at least 2")
    if k_step <= 0 or k_min > k_max:
        raise ParameterError("need k_min <= k_max and k_step > 0")
    ks = _k_grid(k_min, k_max, k_step)
    points = []
    for r in range(2, r_max + 1):
        best = (-1.0, math.nan, 0)
        for K in ks:
            for q, lb, ub in _gap_sweep(r, K * r, range(2, r + 1)):
                if ub - lb > best[0]:
                    best = (ub - lb, K, q)
        points.append(FigurePoint(r=r, worst_gap=best[0], worst_K=best[1], worst_q=best[2]))
    return points


def load_paper_table2() -> dict:
    """Published aggregates keyed by (r, K), values in percent."""
    text = resources.files("lostsales").joinpath("data/table2_paper.csv").read_text()
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = {}
    for row in csv.DictReader(lines):
        key = (int(row["r"]), float(row["K"]))
        out[key] = {f: float(row[f]) for f in AGGREGATE_FIELDS}
    return out


def compare_table2(rows, tol: float = 1e-4) -> list[dict]:
    """Cells where a computed aggregate differs from the published one by more than ``tol``."""
    paper = load_paper_table2()
    mismatches = []
    for row in rows:
        ref = paper.get((row.r, row.K))
        if ref is None:
            continue
        for f in AGGREGATE_FIELDS:
            got = getattr(row, f)
            if abs(got - ref[f]) > tol:
                mismatches.append({"r": row.r, "K": row.K, "field": f, "computed": got, "published": ref[f]})
    return mismatches


# --- simulation checks -------------------------------------------------------


def cell_seed(root_seed: int, r: int, q: int, k_index: int) -> int:
    """64-bit seed for one grid cell: BLAKE2b-64 of the four integers, little-endian."""
    h = hashlib.blake2b(digest_size=8)
    for v in (root_seed, r, q, k_index):
        h.update(int(v).to_bytes(8, "little", signed=False))
    return int.from_bytes(h.digest(), "little")


def make_grid(r_values, q_values, k_values, n_demands: int = 1_000_000, root_seed: int = 0,
              n_batches: int = 32, warmup_demands=None) -> list[SimConfig]:
    grid = []
    for r in r_values:
        for q in q_values:
            for i, K in enumerate(k_values):
                params = SystemParams.from_x(r, q, K * r)
                grid.append(SimConfig(params, n_demands, warmup_demands, n_batches, cell_seed(root_seed, r, q, i)))
    return grid


@dataclass(frozen=True)
class CellCheck:
    """One pass/fail check; ``margin`` is the unused slack, negative on failure."""

    name: str
    observed: float
    expected: float
    tolerance: float
    margin: float

    @property
    def passed(self) -> bool:
        return self.margin >= 0.0

    @classmethod
    def two_sided(cls, name, observed, expected, tolerance):
        return cls(name, observed, expected, tolerance, tolerance - abs(observed - expected))


@dataclass(frozen=True)
class CellResult:
    r: int
    q: int
    x: float
    seed: int
    lb: float
    ub: float
    gamma_lost: float
    gamma_time: float
    hw_gamma_lost: float
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def verify_cell(config: SimConfig, k_sigma: float = 3.0) -> CellResult:
    p = config.params
    est = simulate(config)
    b = bounds(p)
    hw = est.half_widths["gamma_lost"]
    g = est.gamma_lost
    slack = k_sigma * hw
    checks = [
        CellCheck("lower_bracket", g, b.lb, slack, g - (b.lb - slack)),
        CellCheck("upper_bracket", g, b.ub, slack, (b.ub + slack) - g),
    ]
    if p.q == 1:
        checks.append(CellCheck.two_sided("erlang_equality", g, b.erlang, slack))
    if p.r < p.q:
        checks.append(CellCheck.two_sided("lb_equality", g, b.lb, slack))
    identities = list(validate_theorem1(est, p, k_sigma).checks)
    if p.q == 1:
        identities.append(check_conditioned_level(est, p, k_sigma))
    for c in identities:
        name = "conditioned_level" if c.name == "L_cond" else f"theorem1_{c.name}"
        checks.append(CellCheck.two_sided(name, c.observed, c.expected, c.tolerance))
    return CellResult(p.r, p.q, p.x, config.seed, b.lb, b.ub, g, est.gamma_time, hw, tuple(checks))


def _verify_one(args):
    return verify_cell(*args)


def verify_grid(grid, k_sigma: float = 3.0, workers: int = 1) -> list[CellResult]:
    """Simulate every config and check it against the analytic results.

    Cells run in worker processes when ``workers`` != 1 (0 means one per
    CPU); output order and values do not depend on the worker count.
    """
    jobs = [(cfg, k_sigma) for cfg in grid]
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers == 1 or len(jobs) <= 1:
        return [_verify_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_verify_one, jobs))


def search_min_r(q: int, x: float, target_lost_fraction: float, r_limit: int = 10**6) -> int:
    """Smallest reorder point whose guaranteed lost-sales fraction is at most the target.

    Scans r = 0, 1, ... with the Erlang recurrence carried along, so the
    whole scan costs O(r*). The returned r* satisfies ub(r*) <= target and,
    when r* > 0, ub(r* - 1) > target.
    """
    if not (0.0 < target_lost_fraction < 1.0):
        raise ParameterError("target must lie strictly between 0 and 1")
    SystemParams.from_x(0, q, x)  # validates q and x
    b = 1.0  # Erlang loss with r servers, starting from r = 0
    for r in range(r_limit + 1):
        if r > 0:
            xb = x * b
            b = xb / (r + xb)
        if _ub_from_erlang(b, r, q, x) <= target_lost_fraction:
            return r
    raise UnreachableTargetError(f"no r <= {r_limit} brings the upper bound below {target_lost_fraction}")


# --- output ------------------------------------------------------------------


def _flatten(rec) -> dict:
    if isinstance(rec, CellResult):
        base = {f.name: getattr(rec, f.name) for f in fields(rec) if f.name != "checks"}
        base["passed"] = rec.passed
        for c in rec.checks:
            base[f"{c.name}_passed"] = c.passed
            base[f"{c.name}_margin"] = c.margin
        return base
    if hasattr(rec, "__dataclass_fields__"):
        return asdict(rec)
    return dict(rec)


def _round4(v):
    if isinstance(v, float) and math.isfinite(v):
        return round(v, 4)
    return v


def write_records(records, fh, fmt: str = "json", round4: bool = False) -> None:
    """Write records as a JSON array or as CSV with a header row.

    Floats are written at full precision (17 significant digits in CSV,
    shortest round-trip repr in JSON) unless ``round4``.
    """
    rows = [_flatten(r) for r in records]
    if round4:
        rows = [{k: _round4(v) for k, v in row.items()} for row in rows]
    if fmt == "json":
        json.dump(rows, fh, indent=2)
        fh.write("\n")
        return
    if fmt != "csv":
        raise ParameterError(f"unknown format {fmt!r}")
    if not rows:
        return
    header = list(dict.fromkeys(k for row in rows for k in row))
    spec = ".4f" if round4 else ".17g"
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(_csv_cell(row.get(k), spec) for k in header) + "\n")


def _csv_cell(v, spec: str) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, spec)
    return "" if v is None else str(v)
