"""Command-line front end.

Exit codes: 0 ok, 2 usage, 3 measure out of range, 4 I/O failure,
5 reproduction or verification mismatch.
"""

from __future__ import annotations

import argparse
import io
import sys

from . import experiments as ex
from .core import SystemParams, bounds, gamma_from_measure, measures_from_gamma
from .errors import DegenerateRelationError, OutOfRangeError, ParameterError, UnreachableTargetError
from .simulator import SimConfig, simulate

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO, EXIT_MISMATCH = 0, 2, 3, 4, 5


class _Exit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json", help="output format (default json)")
    p.add_argument("--out", metavar="PATH", help="output file (default standard output)")
    p.add_argument("--round4", action="store_true", help="round floats to 4 decimals")


def _add_system(p: argparse.ArgumentParser) -> None:
    p.add_argument("--r", type=int, required=True, help="reorder point")
    p.add_argument("--q", type=int, required=True, help="order quantity")
    p.add_argument("--x", type=float, help="mean lead-time demand (alternative to --lambda/--tau)")
    p.add_argument("--lambda", dest="lam", type=float, help="Poisson demand rate")
    p.add_argument("--tau", type=float, help="lead time")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lostsales",
        description="Bounds and simulation for the (r, q) lost-sales system with Poisson demand.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="lower/upper bounds on the lost-sales fraction")
    _add_system(p)
    _add_output(p)

    p = sub.add_parser("convert", help="convert one of gamma, L, P, U into all four")
    _add_system(p)
    for name in ("gamma", "L", "P", "U"):
        p.add_argument(f"--{name}", type=float, help=f"known value of {name}")
    _add_output(p)

    p = sub.add_parser("simulate", help="discrete-event simulation of one system")
    _add_system(p)
    p.add_argument("--demands", type=int, default=1_000_000, help="arrivals after warm-up (default 1e6)")
    p.add_argument("--warmup", type=int, help="arrivals discarded first (default max(10(r+q), 1e4))")
    p.add_argument("--batches", type=int, default=32, help="batches for the confidence intervals (default 32)")
    p.add_argument("--seed", type=int, default=0, help="64-bit RNG seed (default 0)")
    _add_output(p)

    p = sub.add_parser("table2", help="bound aggregates over q = 2..r on the published (r, K) grid")
    p.add_argument("--compare-paper", action="store_true",
                   help="diff against the published values; exit 5 on any difference > 1e-4")
    _add_output(p)

    p = sub.add_parser("figure1", help="worst bound gap per reorder point")
    p.add_argument("--r-max", type=int, default=100)
    p.add_argument("--k-min", type=float, default=0.5)
    p.add_argument("--k-max", type=float, default=1.5)
    p.add_argument("--k-step", type=float, default=0.01)
    _add_output(p)

    p = sub.add_parser("verify", help="simulate a grid of systems and check the bounds")
    p.add_argument("--r", type=_int_list, default=[2, 4, 8], help="comma-separated reorder points")
    p.add_argument("--q", type=_int_list, default=[2, 3, 5], help="comma-separated order quantities")
    p.add_argument("--K", type=_float_list, default=[0.5, 1.0, 2.0], help="comma-separated x/r ratios")
    p.add_argument("--demands", type=int, default=1_000_000)
    p.add_argument("--batches", type=int, default=32)
    p.add_argument("--seed", type=int, default=0, help="root seed; per-cell seeds derive from it")
    p.add_argument("--k-sigma", type=float, default=3.0, help="tolerance in half-widths (default 3)")
    p.add_argument("--threads", type=int, default=1, help="worker processes, 0 = one per CPU")
    _add_output(p)

    p = sub.add_parser("min-r", help="smallest r whose upper bound meets a lost-sales target")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--target", type=float, required=True, help="allowed fraction of sales lost")
    _add_output(p)
    return parser


def _params(args) -> SystemParams:
    has_x = args.x is not None
    has_lt = args.lam is not None or args.tau is not None
    if has_x and has_lt:
        raise _Exit(EXIT_USAGE, "give either --x or --lambda/--tau, not both")
    if has_x:
        return SystemParams.from_x(args.r, args.q, args.x)
    if args.lam is None or args.tau is None:
        raise _Exit(EXIT_USAGE, "need --x, or both --lambda and --tau")
    return SystemParams(args.r, args.q, args.lam, args.tau)


def _system_fields(p: SystemParams) -> dict:
    return {"r": p.r, "q": p.q, "lambda": p.lam, "tau": p.tau, "x": p.x}


def cmd_bounds(args):
    p = _params(args)
    b = bounds(p)
    rec = _system_fields(p) | {
        "loss": b.loss,
        "erlang": b.erlang,
        "lb": b.lb,
        "ub": b.ub,
        "ub_service_level": 1.0 - b.lb,
        "lb_service_level": 1.0 - b.ub,
        "gap": b.gap,
    }
    return [rec], EXIT_OK


def cmd_convert(args):
    p = _params(args)
    given = [(n, getattr(args, n)) for n in ("gamma", "L", "P", "U") if getattr(args, n) is not None]
    if len(given) != 1:
        raise _Exit(EXIT_USAGE, "give exactly one of --gamma, --L, --P, --U")
    which, value = given[0]
    gamma = value if which == "gamma" else gamma_from_measure(which, value, p)
    m = measures_from_gamma(gamma, p)
    return [_system_fields(p) | {"gamma": m.gamma, "L": m.L, "P": m.P, "U": m.U}], EXIT_OK


def cmd_simulate(args):
    p = _params(args)
    est = simulate(SimConfig(p, args.demands, args.warmup, args.batches, args.seed))
    b = bounds(p)
    rec = _system_fields(p) | {
        "seed": args.seed,
        "demands": est.demands_observed,
        "gamma_time": est.gamma_time,
        "gamma_lost": est.gamma_lost,
        "L": est.L_hat,
        "U": est.U_hat,
        "P": est.P_hat,
        "L_cond": est.L_cond,
    }
    rec |= {f"hw_{k}": v for k, v in est.half_widths.items()}
    rec |= {"lb": b.lb, "ub": b.ub, "erlang": b.erlang}
    return [rec], EXIT_OK


def cmd_table2(args):
    rows = ex.table2()
    code = EXIT_OK
    if args.compare_paper:
        bad = ex.compare_table2(rows)
        for m in bad:
            print(f"mismatch r={m['r']} K={m['K']} {m['field']}: computed {m['computed']:.6f}, "
                  f"published {m['published']:.4f}", file=sys.stderr)
        if bad:
            code = EXIT_MISMATCH
    return rows, code


def cmd_figure1(args):
    return ex.figure1(args.r_max, args.k_min, args.k_max, args.k_step), EXIT_OK


def cmd_verify(args):
    grid = ex.make_grid(args.r, args.q, args.K, args.demands, args.seed, args.batches)
    results = ex.verify_grid(grid, args.k_sigma, workers=args.threads)
    failed = [c for c in results if not c.passed]
    for c in failed:
        names = ", ".join(ch.name for ch in c.checks if not ch.passed)
        print(f"FAIL r={c.r} q={c.q} x={c.x}: {names}", file=sys.stderr)
    return results, EXIT_MISMATCH if failed else EXIT_OK


def cmd_min_r(args):
    r = ex.search_min_r(args.q, args.x, args.target)
    p = SystemParams.from_x(r, args.q, args.x)
    return [{"q": args.q, "x": args.x, "target": args.target, "r": r, "ub": bounds(p).ub}], EXIT_OK


COMMANDS = {
    "bounds": cmd_bounds,
    "convert": cmd_convert,
    "simulate": cmd_simulate,
    "table2": cmd_table2,
    "figure1": cmd_figure1,
    "verify": cmd_verify,
    "min-r": cmd_min_r,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        records, code = COMMANDS[args.command](args)
    except _Exit as e:
        print(f"lostsales {args.command}: {e}", file=sys.stderr)
        return e.code
    except (OutOfRangeError, DegenerateRelationError, UnreachableTargetError) as e:
        print(f"lostsales {args.command}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except ParameterError as e:
        print(f"lostsales {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE

    buf = io.StringIO()
    ex.write_records(records, buf, args.format, args.round4)
    try:
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
    except OSError as e:
        print(f"lostsales {args.command}: cannot write output: {e}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
