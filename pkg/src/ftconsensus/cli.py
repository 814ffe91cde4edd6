"""Command-line entry point ``ftconsensus``.

Verbs::

    ftconsensus run <scenario> [--dt S] [--t-end S] [--output PATH] [--disable-ftc] [--sgn-layer EPS]
    ftconsensus verify-graph <scenario>
    ftconsensus summarize <trace.csv>

``<scenario>`` is a YAML file or the name of a bundled scenario. Exit
codes: 0 success, 1 runtime failure, 2 usage error, 3 parse error,
4 validation error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from .errors import FtcError, ParseError, ValidationError
from .graph import augmented_laplacians, laplacian_check
from .sim import run

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_PARSE, EXIT_VALIDATION = 0, 1, 2, 3, 4


def _matrix(name, m):
    rows = np.array2string(np.asarray(m), precision=4, suppress_small=True, max_line_width=200)
    return f"{name} =\n{rows}"


def cmd_run(args) -> int:
    cfg = io.load_scenario(args.scenario)
    cfg = cfg.with_overrides(dt=args.dt, t_end=args.t_end, disable_ftc=True if args.disable_ftc else None,
                             sgn_layer=args.sgn_layer, output=args.output)
    result = run(cfg)
    out = cfg.output or f"{cfg.name}_trace.csv"
    io.write_trace(result.trace, out, result.events)
    print(f"wrote {len(result.trace)} rows to {out} and events to {io.events_path(out)}")
    print(io.summarize(result.trace, result.events))
    return EXIT_OK


def cmd_verify_graph(args) -> int:
    cfg = io.load_scenario(args.scenario)
    topo = cfg.topology()
    lap = augmented_laplacians(topo)
    check = laplacian_check(topo)
    print(_matrix("L", lap.L))
    print(_matrix("Psi", lap.Psi))
    print(_matrix("Lbar", lap.Lbar))
    print("eigenvalues(Lbar) = " + " ".join(f"{v:.6g}" for v in check["eigenvalues"]))
    print(f"zero eigenvalues: {check['zero_multiplicity']}, min eigenvalue: {check['min_eigenvalue']:.3g}, "
          f"|Lbar 1|_inf: {check['null_residual']:.3g}")
    verdict = "holds" if check["holds"] else "FAILS"
    print(f"Lbar positive semidefinite with a simple zero eigenvalue on the ones vector: {verdict}")
    return EXIT_OK if check["holds"] else EXIT_RUNTIME


def cmd_summarize(args) -> int:
    trace, events = io.read_trace(args.trace)
    print(io.summarize(trace, events))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftconsensus",
                                     description="Fault-tolerant leader-follower consensus simulator.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write its trace")
    p.add_argument("scenario", help="scenario file or bundled scenario name")
    p.add_argument("--dt", type=float, help="integration step in seconds")
    p.add_argument("--t-end", type=float, help="final time in seconds")
    p.add_argument("--output", help="trace CSV path (default <name>_trace.csv)")
    p.add_argument("--disable-ftc", action="store_true", help="keep the baseline controller after a fault")
    p.add_argument("--sgn-layer", type=float, help="boundary-layer width for the sign function")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify-graph", help="print the scenario's Laplacians and spectral check")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_verify_graph)

    p = sub.add_parser("summarize", help="summarize a trace CSV written by 'run'")
    p.add_argument("trace")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FtcError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
