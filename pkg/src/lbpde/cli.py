"""Command-line front end: derive, verify, simulate, schemes list.

Exit codes: 0 success, 1 usage, 2 scheme validation or parse failure,
3 verification mismatch, 4 numeric instability detected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .diffop import DEFAULT_DEGREE_CAP, DegreeCapError
from .dispersion import verify_expansion
from .expansion import assemble_pde, expand, render_pde
from .scheme import BUILTIN_SCHEMES, SchemeError, builtin_scheme, validate
from .schemefile import load_scheme
from .simulate import convergence_study

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_VERIFY_MISMATCH = 3
EXIT_INSTABILITY = 4

ENV_DEGREE_CAP = "CE_EXPAND_DEGREE_CAP"


class _UsageExit(Exception):
    def __init__(self, message):
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageExit(message)


def _degree_cap() -> int:
    raw = os.environ.get(ENV_DEGREE_CAP)
    if raw is None:
        return DEFAULT_DEGREE_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise _UsageExit(f"{ENV_DEGREE_CAP} must be an integer, got {raw!r}") from None
    if cap < 4:
        raise _UsageExit(f"{ENV_DEGREE_CAP} must be at least 4, got {cap}")
    return cap


def _resolve_scheme(identifier: str):
    if identifier.startswith("builtin:"):
        return builtin_scheme(identifier[len("builtin:"):])
    return load_scheme(identifier)


def _load_validated(identifier: str):
    scheme = _resolve_scheme(identifier)
    report = validate(scheme)
    if not report.ok:
        raise SchemeError(f"{identifier}: " + "; ".join(report.errors))
    return scheme


def _write_output(text: str, path):
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _cmd_derive(args) -> int:
    scheme = _load_validated(args.scheme)
    result = expand(scheme, order=args.order, cap=_degree_cap())
    pde = assemble_pde(result, scheme)
    _write_output(render_pde(pde, args.format), args.output)
    return EXIT_OK


def _cmd_verify(args) -> int:
    scheme = _load_validated(args.scheme)
    report = verify_expansion(scheme, order=args.order, tol=args.tol)
    if args.format == "json":
        payload = {
            "mode": report.mode,
            "order": report.order,
            "passed": report.passed,
            "first_mismatch": list(report.first_mismatch) if report.first_mismatch else None,
            "mismatch_count": len(report.mismatches),
            "residual": report.residual,
            "condition_number": report.cond,
        }
        _write_output(json.dumps(payload, indent=2, sort_keys=True), args.output)
    else:
        _write_output(report.summary(), args.output)
    return EXIT_OK if report.passed else EXIT_VERIFY_MISMATCH


def _cmd_simulate(args) -> int:
    scheme = _load_validated(args.scheme)
    k_index = tuple(int(v) for v in args.mode.split(","))
    grids = tuple(int(v) for v in args.grids.split(","))
    report = convergence_study(scheme, k_index, grids, args.steps,
                               amplitude=args.amplitude,
                               corrected_init=args.corrected_init)
    _write_output(report.to_csv(), args.output)
    if args.gnuplot:
        with open(args.gnuplot, "w", encoding="utf-8") as handle:
            handle.write(report.to_gnuplot())
    if args.steps > 0 and any(m.unstable for m in report.measurements):
        print("instability detected: modal amplitude does not decay",
              file=sys.stderr)
        return EXIT_INSTABILITY
    return EXIT_OK


def _cmd_schemes(args) -> int:
    if args.action == "list":
        for name in sorted(BUILTIN_SCHEMES):
            _, description = BUILTIN_SCHEMES[name]
            print(f"builtin:{name}\t{description}")
        return EXIT_OK
    raise _UsageExit(f"unknown schemes action {args.action!r}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="lbpde",
                     description="Equivalent-PDE analysis of lattice Boltzmann schemes")
    sub = parser.add_subparsers(dest="command", required=True)

    derive = sub.add_parser("derive", help="derive the equivalent PDE")
    derive.add_argument("--scheme", required=True,
                        help="scheme file path or builtin:<name>")
    derive.add_argument("--order", type=int, default=4, choices=(1, 2, 3, 4),
                        help="truncation order of the expansion")
    derive.add_argument("--format", default="text", choices=("text", "latex", "json"))
    derive.add_argument("-o", "--output", default=None)
    derive.set_defaults(func=_cmd_derive)

    verify = sub.add_parser("verify", help="check the expansion against the "
                                           "dispersion oracle")
    verify.add_argument("--scheme", required=True)
    verify.add_argument("--order", type=int, default=4, choices=(1, 2, 3, 4))
    verify.add_argument("--tol", type=float, default=1e-6,
                        help="tolerance for the sampled multi-conserved path")
    verify.add_argument("--format", default="text", choices=("text", "json"))
    verify.add_argument("-o", "--output", default=None)
    verify.set_defaults(func=_cmd_verify)

    simulate = sub.add_parser("simulate", help="measure modal decay on periodic "
                                               "grids and compare to predictions")
    simulate.add_argument("--scheme", required=True)
    simulate.add_argument("--mode", default="1",
                          help="comma-separated integer mode index, e.g. 1,0")
    simulate.add_argument("--grids", default="32,64,128",
                          help="comma-separated grid sizes")
    simulate.add_argument("--steps", type=int, default=200)
    simulate.add_argument("--amplitude", type=float, default=1e-4)
    simulate.add_argument("--corrected-init", action="store_true",
                          help="add the first-order correction to the initial "
                               "nonconserved moments")
    simulate.add_argument("-o", "--output", default=None, help="CSV output path")
    simulate.add_argument("--gnuplot", default=None,
                          help="also write a gnuplot-ready data file")
    simulate.set_defaults(func=_cmd_simulate)

    schemes = sub.add_parser("schemes", help="inspect available schemes")
    schemes.add_argument("action", choices=("list",))
    schemes.set_defaults(func=_cmd_schemes)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageExit as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemeError, DegreeCapError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
