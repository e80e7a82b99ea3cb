"""Command-line front end: ``cpdsplit {simulate,converge,eps-scan,energy}``."""
from __future__ import annotations

import argparse
import os
import re
import sys

from . import __version__
from .diagnostics import energy_errors
from .fields import PROBLEM_NAMES, get_problem
from .harness import (DEFAULT_EPS, DEFAULT_EPS_SCAN, DEFAULT_H, ENERGY_T_END, SweepConfig,
                      energy_study, fit_convergence, fit_eps_scaling, run_sweep, write_csv,
                      write_table)
from .integrators import METHODS, RefSolverConfig, SchemeContext, integrate_to_rows

_DYADIC = re.compile(r"^2\^(-?\d+)$")
_RANGE = re.compile(r"^2\^(-?\d+)\.\.2\^(-?\d+)$")

EPILOG = (
    f"problems: {', '.join(PROBLEM_NAMES)}\n"
    f"methods:  {', '.join(METHODS)}\n"
    "grids:    comma lists of decimals or 2^k, and dyadic ranges such as 2^-4..2^-10"
)


def parse_grid(text: str) -> list[float]:
    """Expand ``"2^-4..2^-10"``, ``"2^-6"`` or ``"0.1,0.05"`` into floats."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise argparse.ArgumentTypeError(f"empty entry in {text!r}")
        m = _RANGE.match(item)
        if m:
            a, b = int(m.group(1)), int(m.group(2))
            step = 1 if b >= a else -1
            out.extend(2.0 ** k for k in range(a, b + step, step))
            continue
        m = _DYADIC.match(item)
        if m:
            out.append(2.0 ** int(m.group(1)))
            continue
        try:
            out.append(float(item))
        except ValueError:
            raise argparse.ArgumentTypeError(f"cannot parse {item!r} as a number") from None
    return out


def _positive_grid(text):
    vals = parse_grid(text)
    bad = [v for v in vals if not v > 0.0 or v != v or v == float("inf")]
    if bad:
        raise argparse.ArgumentTypeError(f"values must be positive and finite, got {bad}")
    return vals


def _eps_grid(text):
    vals = _positive_grid(text)
    if any(v > 1.0 for v in vals):
        raise argparse.ArgumentTypeError("eps must lie in (0, 1]")
    return vals


def _methods(text):
    vals = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in vals if m not in METHODS]
    if not vals or bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return list(dict.fromkeys(vals))


def _problem(text):
    if text not in PROBLEM_NAMES:
        raise argparse.ArgumentTypeError(f"unknown problem {text!r}; choose from {', '.join(PROBLEM_NAMES)}")
    return text


def _pos_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0.0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return v


def _pos_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpdsplit",
        description="Splitting integrators for charged particles in strong magnetic fields.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{simulate,converge,eps-scan,energy}")
    sub.required = True

    def common(p, method_help):
        p.add_argument("--problem", type=_problem, required=True, help=", ".join(PROBLEM_NAMES))
        p.add_argument("--method", type=_methods, default=["s2new"], help=method_help)
        p.add_argument("--out", default="-", help="output CSV path (default: stdout)")
        return p

    def sweep_flags(p):
        p.add_argument("--jobs", type=_pos_int, default=1, help="parallel cells")
        p.add_argument("--rtol", type=_pos_float, default=1e-12, help="reference solver rtol")
        p.add_argument("--atol", type=_pos_float, default=1e-12, help="reference solver atol")
        p.add_argument("--timing", action="store_true",
                       help="fill wall_time_ms (output is then not reproducible)")

    kw = dict(epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p = common(sub.add_parser("simulate", help="write one trajectory", **kw), "one of s2new, s2vp")
    p.add_argument("--eps", type=_eps_grid, required=True)
    p.add_argument("--h", type=_positive_grid, required=True)
    p.add_argument("--t-end", type=_pos_float, default=None)
    p.add_argument("--record-every", type=_pos_int, default=1)

    p = common(sub.add_parser("converge", help="error vs h sweep", **kw), "comma list")
    p.add_argument("--eps", type=_eps_grid, default=list(DEFAULT_EPS))
    p.add_argument("--h", type=_positive_grid, default=list(DEFAULT_H))
    p.add_argument("--t-end", type=_pos_float, default=1.0)
    sweep_flags(p)

    p = common(sub.add_parser("eps-scan", help="error vs eps at fixed h", **kw), "comma list")
    p.add_argument("--eps", type=_eps_grid, default=list(DEFAULT_EPS_SCAN))
    p.add_argument("--h", type=_positive_grid, default=[2.0 ** -8])
    p.add_argument("--t-end", type=_pos_float, default=1.0)
    sweep_flags(p)

    p = common(sub.add_parser("energy", help="energy error along a long run", **kw),
               "one of s2new, s2vp")
    p.add_argument("--eps", type=_eps_grid, required=True)
    p.add_argument("--h", type=_positive_grid, required=True)
    p.add_argument("--t-end", type=_pos_float, default=ENERGY_T_END)
    p.add_argument("--record-every", type=_pos_int, default=1)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    single = args.command in ("simulate", "energy")
    if single:
        for name in ("method", "eps", "h"):
            if len(getattr(args, name)) != 1:
                parser.error(f"{args.command} takes exactly one --{name}")
    if args.command == "eps-scan" and len(args.h) != 1:
        parser.error("eps-scan takes exactly one --h")
    return args


def _color(text, code):
    if os.environ.get("CPD_NO_COLOR") or not sys.stderr.isatty():
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def _note(msg):
    print(msg, file=sys.stderr)


def _run(args) -> int:
    problem = get_problem(args.problem)
    if args.command == "simulate":
        t_end = args.t_end if args.t_end is not None else problem.t_end
        ctx = SchemeContext(problem, args.eps[0], args.h[0])
        rows = integrate_to_rows(ctx, args.method[0], t_end, args.record_every)
        e_h = energy_errors(problem, rows)
        write_table(args.out, ("t", "x1", "x2", "x3", "v1", "v2", "v3", "e_H"),
                    (tuple(r) + (e,) for r, e in zip(rows.tolist(), e_h.tolist())))
        return 0
    if args.command == "energy":
        series = energy_study(problem, args.method[0], args.eps[0], args.h[0], args.t_end,
                              args.record_every)
        write_table(args.out, ("t", "e_H"), zip(series.times, series.e_H))
        return 0

    cfg = SweepConfig(problem.name, tuple(args.method), tuple(args.eps), tuple(args.h),
                      args.t_end, RefSolverConfig(rtol=args.rtol, atol=args.atol), args.jobs,
                      args.timing)
    rows = run_sweep(cfg)
    write_csv(rows, args.out)
    failed = [r for r in rows if r.status != "ok"]
    for r in failed:
        _note(_color("warning:", "33") + f" {r.method} eps={r.eps!r} h={r.h!r}: {r.reason}")
    for m in cfg.methods:
        mrows = [r for r in rows if r.method == m]
        if args.command == "converge":
            for eps, fit in fit_convergence(mrows, m).items():
                _note(f"{m} eps={eps!r}: order {fit.slope:.3f} (r2 {fit.r2:.4f})")
        elif len([r for r in mrows if r.status == "ok"]) >= 3:
            fit = fit_eps_scaling(mrows, m)
            _note(f"{m} h={cfg.h_list[0]!r}: eps exponent {fit.slope:.3f} (r2 {fit.r2:.4f})")
    return 1 if failed and len(failed) == len(rows) else 0


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _run(args)
    except KeyboardInterrupt:
        _note(_color("error:", "31") + " interrupted")
        return 1
    except Exception as exc:
        _note(_color("error:", "31") + f" {type(exc).__name__}: {exc}".replace("\n", " "))
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
