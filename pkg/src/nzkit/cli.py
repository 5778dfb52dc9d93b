"""Command-line front end: ``run``, ``sweep`` and ``verify``."""

from __future__ import annotations

import argparse
import sys
import warnings

from . import __version__
from .errors import NumericalError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _parse_values(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    out = []
    for item in text.split(","):
        try:
            out.append(float(item))
        except ValueError:
            raise ValidationError(f"--values: {item!r} is not a number") from None
    return out


def _cmd_run(args) -> int:
    from .scenario import load_scenario, run

    sc = load_scenario(args.scenario)
    csv_path, json_path, summary = run(sc, args.out_dir)
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    print(f"max trace distance {summary.max_trace_distance:.6g}  "
          f"({summary.duration:.2f} s)", file=sys.stderr)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from .scenario import load_scenario, sweep

    sc = load_scenario(args.scenario)
    path = sweep(sc, args.param, _parse_values(args.values), args.out_dir)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .acceptance import run_all

    results = run_all(quick=args.quick)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nzkit", description="Projection-operator reductions of open quantum systems.")
    parser.add_argument("--version", action="version", version=f"nzkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full vs reduced comparison for one scenario")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--out-dir", default=".", help="output directory (default: .)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="repeat a scenario over values of one parameter")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--param", required=True, help="dotted parameter path, e.g. params.g")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out-dir", default=".", help="output directory (default: .)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify", help="run the built-in acceptance checks")
    p.add_argument("--quick", action="store_true",
                   help="skip the full-model steady state and determinism checks")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
