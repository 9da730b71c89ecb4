"""``fheat`` command line: kernels, spectra, volumes and the verification suite.

Exit codes: 0 success / all hard checks pass, 1 a hard check failed,
2 usage or precondition error, 3 numeric failure. ``FHEAT_OUTPUT_DIR``
sets the default directory for written tables and reports.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, spectral
from .config import ConfigError, closed_form_for, load_manifest, load_space, make_space, \
    parse_domain, parse_values
from .errors import FHeatError, NumericError
from .evolution import kernel_from_delta
from .geometry import weighted_ball_volume
from .report import SCHEMA_VERSION, jsonable, reports_to_csv, reports_to_json, summary_table
from .suite import DEFAULT_MANIFEST, REGISTRY, exit_status, run_manifest

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
OUTPUT_ENV = "FHEAT_OUTPUT_DIR"


class UsageError(Exception):
    pass


def _output_dir(args):
    path = getattr(args, "output_dir", None) or os.environ.get(OUTPUT_ENV)
    if not path:
        return None
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text: str, args, default_name: str):
    """Write to ``--output``, else into the output directory, else stdout."""
    target = getattr(args, "output", None)
    if target is None:
        outdir = _output_dir(args)
        if outdir is not None:
            target = outdir / default_name
    if target is None or str(target) == "-":
        sys.stdout.write(text)
        return
    Path(target).write_text(text)


def _run_manifest_record(args, command: str, extra: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "tool_version": __version__,
            "argv": list(getattr(args, "_argv", [])), "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            **extra}


def _space_from_args(args):
    if getattr(args, "space_file", None):
        if args.profile:
            raise UsageError("--space-file and --profile are mutually exclusive")
        return load_space(args.space_file), None
    profile = args.profile or "steady:+1"
    return make_space(profile, args.L, args.space_nodes, args.rule, args.dimension), profile


def _table(rows, header, fmt):
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()


# -- kernel ------------------------------------------------------------------
def cmd_kernel(args) -> int:
    if args.t is None:
        raise UsageError("kernel needs --t")
    xs, ys, ts = parse_values(args.x), parse_values(args.y), parse_values(args.t)
    if any(t <= 0 for t in ts):
        raise UsageError("--t values must be positive")
    numeric_flags = [f for f in ("K", "domain", "nodes") if getattr(args, f) is not None]
    if args.method == "closed" and numeric_flags:
        raise UsageError(f"--method closed does not take --{', --'.join(numeric_flags)}")
    space, profile = _space_from_args(args)
    rows = []
    if args.method == "closed":
        kern = closed_form_for(profile) if profile else None
        if kern is None:
            raise UsageError(f"profile {profile!r} has no closed-form kernel")
        for t in ts:
            for y in ys:
                for x in xs:
                    rows.append((x, y, t, float(kern(x, y, t)), "closed"))
    elif args.method == "spectral":
        dom = parse_domain(args.domain) if args.domain else (space.lo, space.hi)
        es = spectral.eigensolve(space, dom, K=args.K or spectral.DEFAULT_MODES,
                                 nodes=args.nodes or spectral.DEFAULT_NODES)
        for t in ts:
            H = es.kernel(xs, ys, t)
            for j, y in enumerate(ys):
                for i, x in enumerate(xs):
                    rows.append((x, y, t, float(H[i, j]), "spectral"))
    else:
        if args.K is not None:
            raise UsageError("--K only applies to --method spectral")
        dom = parse_domain(args.domain) if args.domain else None
        for y in ys:
            field = kernel_from_delta(space, y, sorted(ts), domain=dom,
                                      nodes=args.nodes or spectral.DEFAULT_NODES)
            for k, t in enumerate(field.times):
                for x, v in zip(xs, field.at(xs, k)):
                    rows.append((x, y, float(t), float(v), "pde"))
    _emit(_table(rows, ("x", "y", "t", "H", "method"), args.format), args, f"kernel.{args.format}")
    return EXIT_OK


# -- spectrum ----------------------------------------------------------------
def cmd_spectrum(args) -> int:
    space, _ = _space_from_args(args)
    nodes = args.nodes or spectral.DEFAULT_NODES
    if args.exhaust:
        if args.domain:
            raise UsageError("--exhaust builds its own domains; drop --domain")
        res = spectral.bottom_of_spectrum(space, K=1, nodes=nodes, workers=args.jobs)
        rows = [(f"{d[0]:g}:{d[1]:g}", float(lam)) for d, lam in zip(res.domains, res.eigenvalues)]
        rows.append(("limit", res.limit))
        _emit(_table(rows, ("domain", "lambda1"), args.format), args, f"spectrum.{args.format}")
        return EXIT_OK if res.monotone else EXIT_NUMERIC
    dom = parse_domain(args.domain) if args.domain else (space.lo, space.hi)
    es = spectral.eigensolve(space, dom, K=args.k, nodes=nodes, bc=args.bc)
    rows = [(i + 1, float(lam)) for i, lam in enumerate(es.eigenvalues)]
    _emit(_table(rows, ("i", "lambda"), args.format), args, f"spectrum.{args.format}")
    if args.export:
        Path(args.export).write_text(json.dumps(jsonable(es.to_dict(stride=args.stride))))
    return EXIT_OK


# -- volume ------------------------------------------------------------------
def cmd_volume(args) -> int:
    space, _ = _space_from_args(args)
    rows = [(c, r, weighted_ball_volume(space, c, r)) for c in parse_values(args.center)
            for r in parse_values(args.r)]
    _emit(_table(rows, ("center", "r", "volume"), args.format), args, f"volume.{args.format}")
    return EXIT_OK


# -- verify ------------------------------------------------------------------
def cmd_verify(args) -> int:
    if args.list:
        print("\n".join(sorted(REGISTRY)))
        return EXIT_OK
    if args.manifest and args.default:
        raise UsageError("give a manifest path or --default, not both")
    manifest = DEFAULT_MANIFEST if (args.default or not args.manifest) else load_manifest(args.manifest)
    if args.seed is not None:
        manifest = {**manifest, "seed": args.seed}
    reports = run_manifest(manifest, jobs=args.jobs)
    status = exit_status(reports)
    outdir = _output_dir(args)
    text = reports_to_json(reports)
    if outdir is not None:
        (outdir / "report.json").write_text(text)
        (outdir / "report.csv").write_text(reports_to_csv(reports))
        (outdir / "summary.txt").write_text(summary_table(reports))
        record = _run_manifest_record(args, "verify", {"seed": manifest.get("seed", 0),
                                                       "defaults": manifest.get("defaults", {}),
                                                       "checks": manifest["checks"]})
        (outdir / "manifest.json").write_text(json.dumps(jsonable(record), indent=2))
    if args.json:
        sys.stdout.write(text)
    else:
        print(summary_table(reports))
        hard = [r for r in reports if r.kind == "hard"]
        print(f"{sum(r.passed for r in hard)}/{len(hard)} hard checks passed; "
              f"{len(reports) - len(hard)} fitted")
        for r in hard:
            if not r.passed:
                loc = r.details.get("first_violation") if isinstance(r.details, dict) else None
                print(f"FAIL {r.name} [{r.digest}] {r.anchor}" + (f" at {loc}" if loc else ""))
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fheat", description="Weighted heat kernels and the "
                                     "inequalities they satisfy on weighted lines and radial models.")
    parser.add_argument("--version", action="version", version=f"fheat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def space_args(p):
        p.add_argument("--profile", help="profile spec, e.g. steady:+1, euclid, shrinking, power:1")
        p.add_argument("--space-file", help="key-value space file (overrides --profile)")
        p.add_argument("--L", type=float, default=None, help="truncation half-length")
        p.add_argument("--space-nodes", type=int, default=None, help="quadrature nodes of the space")
        p.add_argument("--rule", choices=("simpson", "trapezoid"), default=None)
        p.add_argument("--dimension", type=int, default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", help="output file ('-' for stdout)")
        p.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV})")

    p = sub.add_parser("kernel", help="tabulate H(x, y, t)")
    space_args(p)
    p.add_argument("--method", choices=("closed", "spectral", "pde"), default="closed")
    p.add_argument("--x", default="0", help="values: a,b,c or start:stop:count")
    p.add_argument("--y", default="0")
    p.add_argument("--t", default=None)
    p.add_argument("--K", type=int, default=None, help="modes (spectral)")
    p.add_argument("--domain", default=None, help="a:b computational domain")
    p.add_argument("--nodes", type=int, default=None, help="grid nodes (spectral/pde)")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("spectrum", help="Dirichlet/Neumann eigenvalues or the exhaustion trace")
    space_args(p)
    p.add_argument("--domain", default=None)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--bc", choices=("dirichlet", "neumann"), default="dirichlet")
    p.add_argument("--exhaust", action="store_true", help="first eigenvalue along [-2^i, 2^i]")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--export", help="write eigenvalues and sampled eigenfunctions as JSON")
    p.add_argument("--stride", type=int, default=8, help="grid stride for --export")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("volume", help="weighted ball volumes")
    space_args(p)
    p.add_argument("--center", default="0")
    p.add_argument("--r", default="1")
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("verify", help="run a verification manifest")
    p.add_argument("manifest", nargs="?", help="JSON manifest (default: builtin steady suite)")
    p.add_argument("--default", action="store_true", help="run the builtin manifest")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="override the manifest seed")
    p.add_argument("--json", action="store_true", help="print the JSON report instead of the table")
    p.add_argument("--output-dir", help=f"write report.json/csv, summary and manifest (default ${OUTPUT_ENV})")
    p.add_argument("--list", action="store_true", help="list check names")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    args._argv = argv
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"fheat: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"fheat: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FHeatError, ValueError) as exc:
        print(f"fheat: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FloatingPointError as exc:
        print(f"fheat: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
