"""Command-line front end.

Commands::

    cprob run FILE              frequencies for every query in a scenario file
    cprob scan FILE --param P   frequencies over a parameter range
    cprob verify                invariant suites, pass/fail per group
    cprob propagator            free-particle convergence scan and moment round trip

Exit codes: 0 success, 1 I/O error, 2 invalid input or usage, 3 failed
verification. A bare FILE name that does not exist locally is looked up
among the scenarios shipped with the package.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, propagator, verify
from .errors import CProbError, UnknownParameter
from .frequency import DENOMINATOR_TOL
from .scenarios import fixture_path, load_scenario, run
from .statespace import ROW_SUM_TOL

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_FAILED = 0, 1, 2, 3

DEFAULT_REFINEMENTS = "4,8,16,32"
MOMENT_TAU = 1e-3
MOMENT_EXTENT = 2.0
MOMENT_FIELDS = propagator.Fields(0.0, 0.7, 1 + 1j)


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _resolve(path: str) -> Path:
    p = Path(path)
    if not p.exists() and p.parent == Path("."):
        shipped = fixture_path(p.name)
        if shipped.exists():
            return shipped
    return p


def _tolerance_notes(args) -> list[str]:
    notes = []
    for flag, default in (("row_tol", ROW_SUM_TOL), ("denom_tol", DENOMINATOR_TOL)):
        value = getattr(args, flag, None)
        if value is not None and value != default:
            notes.append(f"{flag.replace('_', '-')}={value!r} (default {default!r})")
    return notes


def _header(args, extra: list[str]) -> list[str]:
    lines = [f"cprob {__version__} {args.command}"] + extra
    notes = _tolerance_notes(args)
    if notes:
        lines.append("tolerance overrides: " + ", ".join(notes))
    return lines


def _render(args, columns: list[str], rows: list[list], meta: list[str]) -> str:
    buf = io.StringIO()
    if args.format == "json-lines":
        if not args.no_header:
            buf.write(json.dumps({"meta": meta}) + "\n")
        for row in rows:
            buf.write(json.dumps(dict(zip(columns, row))) + "\n")
        return buf.getvalue()
    if not args.no_header:
        for line in meta:
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args):
    path = _resolve(args.scenario)
    row_tol = ROW_SUM_TOL if args.row_tol is None else args.row_tol
    return path, load_scenario(path, row_tol=row_tol)


def _denom_tol(args) -> float:
    return DENOMINATOR_TOL if args.denom_tol is None else args.denom_tol


def cmd_run(args) -> int:
    path, s = _load(args)
    result = run(s, tol=_denom_tol(args))
    meta = _header(args, [f"scenario {s.name or path.name}"])
    if s.params:
        meta.append("params " + " ".join(f"{k}={_fmt(v)}" for k, v in s.params.items()))
    if args.deficits:
        rows = [[label, d] for label, d in result.deficits.items()]
        _emit(args, _render(args, ["endpoint", "deficit"], rows, meta))
    else:
        rows = [[name, fr.value] for name, fr in result.frequencies.items()]
        _emit(args, _render(args, ["query", "frequency"], rows, meta))
    return EXIT_OK


def cmd_scan(args) -> int:
    if args.steps < 1:
        raise UsageError(f"empty scan range: --steps must be at least 1, got {args.steps}")
    path, s = _load(args)
    if args.param not in s.params:
        raise UnknownParameter(
            f"scenario {s.name or path.name} has no parameter {args.param!r}"
            f" (declared: {', '.join(sorted(s.params)) or 'none'})")
    values = np.linspace(args.start, args.stop, args.steps)
    queries = list(s.queries)
    rows = []
    tol = _denom_tol(args)
    for v in values:
        result = run(s.with_params(**{args.param: float(v)}), tol=tol, max_paths=0)
        rows.append([float(v)] + [result.frequencies[q].value for q in queries])
    meta = _header(args, [f"scenario {s.name or path.name}",
                          f"scan {args.param} from {_fmt(args.start)} to {_fmt(args.stop)} in {args.steps} steps"])
    _emit(args, _render(args, [args.param] + queries, rows, meta))
    return EXIT_OK


def cmd_verify(args) -> int:
    names = [args.group] if args.group else list(verify.GROUPS)
    results = verify.run_all(names)
    out = sys.stdout
    for name, checks in results.items():
        ok = all(c.ok for c in checks)
        out.write(f"{name}: {'PASS' if ok else 'FAIL'}\n")
        for c in checks:
            detail = f" ({c.detail})" if c.detail else ""
            out.write(f"  [{'ok' if c.ok else 'FAIL'}] {c.name}{detail}\n")
    return EXIT_OK if verify.summary_ok(results) else EXIT_FAILED


def cmd_propagator(args) -> int:
    try:
        refinements = tuple(int(n) for n in args.refinements.split(","))
    except ValueError:
        raise UsageError(f"--refinements must be comma-separated integers, got {args.refinements!r}") from None
    if not refinements or min(refinements) < 1:
        raise UsageError("--refinements needs positive integers")
    if args.mass <= 0:
        raise UsageError("--mass must be positive")
    rows = propagator.schrodinger_scan(mass=args.mass, points=args.grid, extent=args.extent,
                                       refinements=refinements, delta=args.delta)
    meta = _header(args, [f"free packet mass={_fmt(args.mass)} grid={args.grid} extent={_fmt(args.extent)}",
                          "delta=" + ("edge regulator per step" if args.delta is None else _fmt(args.delta))])
    _emit(args, _render(args, ["N", "epsilon", "delta", "residual"], [list(r) for r in rows], meta))

    grid = propagator.Grid.from_extent(args.grid, MOMENT_EXTENT)
    rt = propagator.moment_round_trip(MOMENT_FIELDS, MOMENT_TAU, grid)
    err = sys.stderr
    err.write(f"moment round trip (tau={MOMENT_TAU:g}, grid={args.grid}, extent={MOMENT_EXTENT:g})\n")
    for key, (want, got) in rt.items():
        want, got = np.asarray(want), np.asarray(got)
        err.write(f"  {key}: input {np.array2string(want, precision=6)} extracted {np.array2string(got, precision=6)}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write data here instead of stdout")
    common.add_argument("--format", choices=("csv", "json-lines"), default="csv")
    common.add_argument("--no-header", action="store_true", help="omit the metadata comment header")

    tols = argparse.ArgumentParser(add_help=False)
    tols.add_argument("--row-tol", type=float, default=None,
                      help=f"kernel row-sum tolerance (default {ROW_SUM_TOL:g})")
    tols.add_argument("--denom-tol", type=float, default=None,
                      help=f"smallest admissible frequency denominator (default {DENOMINATOR_TOL:g})")

    parser = argparse.ArgumentParser(prog="cprob", description="Complex-probability scenario engine")
    parser.add_argument("--version", action="version", version=f"cprob {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common, tols], help="evaluate a scenario file")
    p.add_argument("scenario")
    p.add_argument("--deficits", action="store_true", help="emit per-endpoint interference deficits")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scan", parents=[common, tols], help="scan a scenario parameter")
    p.add_argument("scenario")
    p.add_argument("--param", required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", help="run the invariant suites")
    p.add_argument("--group", choices=tuple(verify.GROUPS))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("propagator", parents=[common], help="free-particle convergence study")
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=256, help="grid points")
    p.add_argument("--extent", type=float, default=20.0, help="grid length")
    p.add_argument("--delta", type=float, default=None, help="fixed regulator (default: edge regulator)")
    p.add_argument("--refinements", default=DEFAULT_REFINEMENTS, help="comma-separated sub-step counts")
    p.set_defaults(func=cmd_propagator)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cprob {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CProbError as exc:
        print(f"cprob {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"cprob {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
