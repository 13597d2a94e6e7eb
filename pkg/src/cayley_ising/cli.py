"""Command-line front end.

Every computation in the library is reachable here with machine
readable output: JSON envelopes (schema_version 1) or flat CSV, both
suitable for piping back into `verify`. Report-style subcommands
(`scan`, `plot-phi`) also render a matplotlib figure next to the
delimited output unless told not to.

Exit codes: 0 success, 1 verification failure, 2 usage or domain
error, 3 resource cap exceeded. Log verbosity comes from the
CAYLEY_ISING_LOG environment variable (DEBUG/INFO/WARNING/ERROR).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .cayley_group import (
    IDENTITY,
    ResourceLimitError,
    SubgroupSpec,
    ball,
    children,
    in_HA,
    parent,
    reduce_word,
)
from .gibbs_oracle import DEFAULT_CONFIG_CAP, check_compatibility, check_eq4
from .ising_field import FieldQuad, ModelParams, SolutionRecord
from .reduction import alpha_critical, count_I3_solutions, psi
from .solvers import count_phi_crossings, scan_alpha, solve_full_system

__all__ = ["main", "entry", "build_parser"]

log = logging.getLogger("cayley_ising.cli")

_EXIT_OK = 0
_EXIT_VERIFY = 1
_EXIT_USAGE = 2
_EXIT_RESOURCE = 3

_RECORD_CSV_HEADER = [
    "k", "a_size", "alpha", "theta", "h1", "h2", "h3", "h4",
    "residual", "ti", "i1", "i2", "i3", "source",
]


def _setup_logging() -> None:
    name = os.environ.get("CAYLEY_ISING_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _canonical_spec(k: int, a_size: int) -> SubgroupSpec:
    # Any index set of the same size is equivalent up to relabeling
    # generators, so the CLI always takes A = {1, .., a_size}.
    return SubgroupSpec(k=k, members=frozenset(range(1, a_size + 1)))


def _envelope(command: str, params: dict, results: list, diagnostics: dict) -> dict:
    return {
        "schema_version": 1,
        "command": command,
        "params": params,
        "results": results,
        "diagnostics": diagnostics,
    }


def _write_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _emit_json(obj: dict, out: str | None) -> None:
    _write_text(json.dumps(obj, indent=2) + "\n", out)


def _emit_csv(header: list[str], rows: list[list], out: str | None) -> None:
    if out is None:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _record_csv_row(rec: SolutionRecord) -> list:
    p, h, fl = rec.params, rec.h, rec.flags
    return [
        p.k, p.a_size, p.alpha, p.theta, h.h1, h.h2, h.h3, h.h4,
        rec.residual, int(fl.ti), int(fl.in_i1), int(fl.in_i2), int(fl.in_i3),
        rec.source,
    ]


def _figure_path(args) -> str | None:
    """Where the report figure goes: --fig wins, --no-fig kills it,
    otherwise a .png sibling of --out (no figure when writing to stdout)."""
    if getattr(args, "no_fig", False):
        return None
    if getattr(args, "fig", None):
        return args.fig
    if getattr(args, "out", None):
        return str(Path(args.out).with_suffix(".png"))
    return None


def _resolve_params(args) -> ModelParams:
    if (args.alpha is None) == (args.theta is None):
        raise ValueError("give exactly one of --alpha and --theta")
    return ModelParams(
        k=args.k, a_size=args.a_size, alpha=args.alpha, theta=args.theta
    )


# ---------------------------------------------------------------- group

def cmd_group(args) -> int:
    k = args.k
    b = ball(args.n, k)
    diag: dict = {
        "n": args.n,
        "level_sizes": [len(lv) for lv in b.levels],
        "total_vertices": len(b.vertices),
        "boundary_vertices": len(b.boundary),
    }
    a_size = None
    spec = None
    if args.a is not None:
        members = frozenset(int(t) for t in args.a.split(",") if t.strip())
        spec = SubgroupSpec(k=k, members=members)
        a_size = spec.a_size
        counts = {1: 0, 2: 0, 3: 0, 4: 0}
        for level in b.levels[1:]:
            for w in level:
                cx, cp = in_HA(w, spec), in_HA(parent(w), spec)
                role = (1 if cp else 2) if cx else (3 if cp else 4)
                counts[role] += 1
        diag["subgroup"] = {
            "members": sorted(members),
            "role_counts": {str(r): c for r, c in counts.items()},
        }
    if args.word is not None:
        letters = [int(t) for t in args.word.split() if t.strip()]
        w = reduce_word(letters, k=k)
        info: dict = {
            "input": letters,
            "reduced": list(w),
            "length": len(w),
            "is_root": w == IDENTITY,
            "children": [list(c) for c in children(w, k)],
        }
        if w != IDENTITY:
            info["parent"] = list(parent(w))
        if spec is not None:
            info["in_HA"] = in_HA(w, spec)
        diag["word"] = info
    params = {"k": k, "a_size": a_size, "alpha": None, "theta": None}
    _emit_json(_envelope("group", params, [], diag), args.out)
    return _EXIT_OK


# ------------------------------------------------------------- critical

def cmd_critical(args) -> int:
    if args.mode == "a1k4":
        report = scan_alpha(4, 1, 0.05, 0.3, 60, restrict="I3", jobs=args.jobs)
        if not report.transitions:
            raise ValueError("scan found no count transitions in [0.05, 0.3]")
        outer = report.transitions[-1]
        diag = {
            "mode": "a1k4",
            "alpha_critical_estimate": outer.midpoint,
            "transitions": [t.as_dict() for t in report.transitions],
            "counts": list(report.counts),
            "grid": {"alpha_lo": 0.05, "alpha_hi": 0.3, "steps": 60},
        }
        params = {"k": 4, "a_size": 1, "alpha": None, "theta": None}
        _emit_json(_envelope("critical", params, [], diag), args.out)
        return _EXIT_OK
    if args.k is None:
        raise ValueError("give --k 4 or --mode a1k4")
    if args.k in (2, 3):
        print("no critical point: count is constant", file=sys.stderr)
        return _EXIT_USAGE
    if args.k != 4:
        print(
            f"critical point location is only implemented for --k 4 "
            f"(got k={args.k}); use scan for other orders",
            file=sys.stderr,
        )
        return _EXIT_USAGE
    a_cr = alpha_critical()
    counted = count_I3_solutions(4, a_cr)
    diag = {
        "mode": "balanced-k4",
        "alpha_critical": a_cr,
        "psi_residual": psi(a_cr),
        "count_at_critical": counted.count,
        "tangent": counted.tangent,
        "tolerances": {"tangency_tol": counted.tangency_tol},
    }
    params = {"k": 4, "a_size": 4, "alpha": a_cr,
              "theta": counted.records[0].params.theta if counted.records else None}
    results = [r.as_dict() for r in counted.records]
    _emit_json(_envelope("critical", params, results, diag), args.out)
    return _EXIT_OK


# ---------------------------------------------------------------- count

def cmd_count(args) -> int:
    params = _resolve_params(args)
    exact = args.set == "I3" and params.a_size == params.k and params.k in (3, 4)
    if args.set == "I3" and params.a_size == params.k and params.alpha > 1.0:
        counted = count_I3_solutions(params.k, params.alpha)
        records = list(counted.records)
        count = counted.count
        diag: dict = {
            "count": count,
            "exactness": "exact" if exact else "observed",
            "tangent": counted.tangent,
            "grid": None,
            "dropped_starts": 0,
            "tolerances": {"tangency_tol": counted.tangency_tol},
        }
    else:
        solved = solve_full_system(params)
        records = list(solved.filtered(args.set))
        count = len(records)
        diag = {
            "count": count,
            "exactness": "observed",
            "grid": None,
            "dropped_starts": solved.dropped_starts,
            "tolerances": {"residual_tol": 1e-10},
        }
    log.info("count=%d (%s) for k=%d a_size=%d set=%s",
             count, diag["exactness"], params.k, params.a_size, args.set)
    env = _envelope("count", params.as_dict(), [r.as_dict() for r in records], diag)
    if args.format == "csv":
        _emit_csv(_RECORD_CSV_HEADER, [_record_csv_row(r) for r in records], args.out)
    else:
        _emit_json(env, args.out)
    return _EXIT_OK


# ---------------------------------------------------------------- solve

def cmd_solve(args) -> int:
    params = _resolve_params(args)
    solved = solve_full_system(params, tol=args.tol)
    records = list(solved.filtered(args.set))
    diag = {
        "count": len(records),
        "exactness": "observed",
        "grid": None,
        "dropped_starts": solved.dropped_starts,
        "n_starts": solved.n_starts,
        "tolerances": {"residual_tol": args.tol},
    }
    if args.format == "csv":
        _emit_csv(_RECORD_CSV_HEADER, [_record_csv_row(r) for r in records], args.out)
    else:
        env = _envelope("solve", params.as_dict(), [r.as_dict() for r in records], diag)
        _emit_json(env, args.out)
    return _EXIT_OK


# ----------------------------------------------------------------- scan

def cmd_scan(args) -> int:
    report = scan_alpha(
        args.k, args.a_size, args.alpha_lo, args.alpha_hi, args.steps,
        tol=args.tol, restrict=args.set, jobs=args.jobs,
    )
    results = []
    for a, recs in zip(report.alphas, report.records):
        for rec in recs:
            d = rec.as_dict()
            d["alpha"] = a
            results.append(d)
    diag = {
        "counts": list(report.counts),
        "alphas": list(report.alphas),
        "transitions": [t.as_dict() for t in report.transitions],
        "grid": {"alpha_lo": args.alpha_lo, "alpha_hi": args.alpha_hi,
                 "steps": args.steps},
        "restrict": report.restrict,
        **report.diagnostics,
    }
    params = {"k": args.k, "a_size": args.a_size, "alpha": None, "theta": None}
    if args.format == "csv":
        header = ["alpha", "count"] + _RECORD_CSV_HEADER[4:]
        rows = []
        for a, c, recs in zip(report.alphas, report.counts, report.records):
            if not recs:
                rows.append([a, c] + [""] * (len(header) - 2))
            for rec in recs:
                rows.append([a, c] + _record_csv_row(rec)[4:])
        _emit_csv(header, rows, args.out)
        for t in report.transitions:
            log.info("transition %d -> %d in [%.6f, %.6f]",
                     t.count_before, t.count_after, t.alpha_lo, t.alpha_hi)
    else:
        _emit_json(_envelope("scan", params, results, diag), args.out)
    fig = _figure_path(args)
    if fig is not None:
        from .figures import render_scan_figure

        render_scan_figure(report, fig)
        log.info("figure written to %s", fig)
    return _EXIT_OK


# ------------------------------------------------------------- plot-phi

def cmd_plot_phi(args) -> int:
    from .reduction import phi

    result = count_phi_crossings(
        args.k, args.alpha, x_lo=args.x_lo, x_hi=args.x_hi
    )
    x = np.geomspace(result.x_lo, result.x_hi, args.points)
    if not np.any(x == 1.0):
        x = np.sort(np.append(x, 1.0))
    y = phi(x, args.k, args.alpha)
    rows = [[float(a), float(b), float(a)] for a, b in zip(x, y)]
    _emit_csv(["x", "phi", "identity"], rows, args.out)
    log.info("phi crosses the identity %d time(s) on [%g, %g]",
             result.count, result.x_lo, result.x_hi)
    fig = _figure_path(args)
    if fig is not None:
        from .figures import render_phi_figure

        render_phi_figure(result, fig)
        log.info("figure written to %s", fig)
    return _EXIT_OK


# --------------------------------------------------------------- verify

def _params_from_json(obj: dict, fallback: dict | None) -> ModelParams:
    src = obj.get("params") or fallback
    if src is None:
        raise ValueError("record carries no parameters and no top-level params")
    merged = dict(src)
    if "alpha" in obj and obj["alpha"] is not None:
        merged["alpha"] = obj["alpha"]
        merged["theta"] = None
    return ModelParams(
        k=merged["k"],
        a_size=merged["a_size"],
        alpha=merged.get("alpha"),
        theta=merged.get("theta"),
    )


def cmd_verify(args) -> int:
    payload = json.loads(Path(args.infile).read_text(encoding="utf-8"))
    if isinstance(payload, dict) and "results" in payload:
        records = payload["results"]
        fallback = payload.get("params")
    elif isinstance(payload, list):
        records, fallback = payload, None
    else:
        raise ValueError("input is neither a result envelope nor a record list")
    if not records:
        raise ValueError("no records to verify")
    failures = 0
    reports = []
    for i, obj in enumerate(records):
        params = _params_from_json(obj, fallback)
        quad = FieldQuad(*(float(v) for v in obj["h"]))
        spec = _canonical_spec(params.k, params.a_size)
        rep = check_eq4(quad, params, spec, depth=args.depth)
        ok = rep.max_residual < args.tol
        entry: dict = {"record": i, "eq4": rep.as_dict(), "eq4_ok": ok}
        nv2 = 1 + (params.k + 1) * (1 + params.k)
        if args.compat and nv2 <= np.log2(DEFAULT_CONFIG_CAP):
            disc = check_compatibility(params, quad, spec, n=2)
            entry["compatibility"] = disc
            entry["compat_ok"] = disc < args.compat_tol
            ok = ok and entry["compat_ok"]
        status = "OK" if ok else "FAIL"
        print(f"record {i}: eq4 residual {rep.max_residual:.3e} "
              f"(depth {args.depth})"
              + (f", marginal defect {entry['compatibility']:.3e}"
                 if "compatibility" in entry else "")
              + f" .. {status}")
        failures += 0 if ok else 1
        reports.append(entry)
    if args.out:
        diag = {"depth": args.depth, "failures": failures,
                "tolerances": {"eq4_tol": args.tol, "compat_tol": args.compat_tol}}
        _emit_json(_envelope("verify", fallback or {}, reports, diag), args.out)
    if failures:
        print(f"{failures} of {len(records)} record(s) failed", file=sys.stderr)
        return _EXIT_VERIFY
    return _EXIT_OK


# --------------------------------------------------------------- parser

def _add_out_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="output format (default json)")


def _add_fig_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fig", help="explicit figure path (PNG)")
    p.add_argument("--no-fig", action="store_true",
                   help="suppress the figure even when --out is a file")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, required=True, help="tree order")
    p.add_argument("--a-size", type=int, required=True,
                   help="size of the generator index set A")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha", type=float, help="activity parameter, > 0")
    g.add_argument("--theta", type=float, help="tanh of the coupling, in (-1, 1)")
    p.add_argument("--set", choices=("I1", "I2", "I3", "full"), default="full",
                   help="invariant-set restriction (default full)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cayley-ising",
        description="Boundary-field fixed points of the Ising model on a Cayley tree.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("group", help="inspect the vertex group and ball structure")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, default=3, help="ball depth (default 3)")
    p.add_argument("--word", help="space-separated generator indices to reduce")
    p.add_argument("--a", help="comma-separated index set A, e.g. 1,2")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("critical", help="locate the bifurcation point")
    p.add_argument("--k", type=int, help="tree order (4 is the solved case)")
    p.add_argument("--mode", choices=("a1k4",),
                   help="a1k4: |A| = 1, k = 4, scan-based localization")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("count", help="count boundary-law solutions")
    _add_model_flags(p)
    _add_out_format(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("solve", help="solve the full four-component system")
    _add_model_flags(p)
    p.add_argument("--tol", type=float, default=1e-10,
                   help="residual acceptance tolerance (default 1e-10)")
    _add_out_format(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("scan", help="count solutions over an alpha grid")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--a-size", type=int, required=True)
    p.add_argument("--alpha-lo", type=float, required=True)
    p.add_argument("--alpha-hi", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--set", choices=("I1", "I2", "I3", "full"), default="full")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes (default 1, deterministic)")
    _add_out_format(p)
    _add_fig_flags(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", help="re-check records from a JSON result file")
    p.add_argument("--in", dest="infile", required=True,
                   help="JSON envelope or record list to verify")
    p.add_argument("--depth", type=int, default=4,
                   help="ball depth for the recursion check (default 4)")
    p.add_argument("--tol", type=float, default=1e-9,
                   help="recursion residual tolerance (default 1e-9)")
    p.add_argument("--compat", action=argparse.BooleanOptionalAction, default=True,
                   help="also run the enumeration marginal check when feasible")
    p.add_argument("--compat-tol", type=float, default=1e-8,
                   help="marginal defect tolerance (default 1e-8)")
    p.add_argument("--out", help="optional JSON report path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot-phi", help="tabulate the composed boundary map")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--x-lo", type=float, help="lower end of the x grid")
    p.add_argument("--x-hi", type=float, help="upper end of the x grid")
    p.add_argument("--points", type=int, default=512,
                   help="rows in the emitted table (default 512)")
    p.add_argument("--out", help="CSV path (default: stdout)")
    _add_fig_flags(p)
    p.set_defaults(func=cmd_plot_phi)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse uses 2 for usage errors, 0 for --help
        return int(e.code or 0)
    _setup_logging()
    try:
        return args.func(args)
    except ResourceLimitError as e:
        print(f"error: {e}", file=sys.stderr)
        return _EXIT_RESOURCE
    except (ValueError, ArithmeticError, RuntimeError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return _EXIT_USAGE


def entry() -> None:
    sys.exit(main())
