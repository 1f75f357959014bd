import argparse
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from utils.exceptions import MeasurementError, SpecValidationError
from utils.experiment_functions import list_presets, preset_text, run_experiment
from utils.io_functions import read_text, write_bytes, write_text
from utils.report_functions import REPORT_FORMATS, emit_report
from utils.spec_functions import Diagnostic, check_spec, parse_spec

# ---------------------------
# Configuration
# ---------------------------

LOG_FORMAT = "%(levelname)s: %(message)s"
EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else (logging.WARNING if quiet else logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def load_document(path: str) -> str:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        return read_text(path)
    except UnicodeDecodeError as e:
        where = f"byte {e.object[e.start]:#04x} at offset {e.start}"
        raise SpecValidationError([Diagnostic("<document>", f"not UTF-8 text ({where})")]) from e
    except OSError as e:
        raise SpecValidationError([Diagnostic("<document>", f"cannot read {path}: {e.strerror or e}")]) from e


# ---------------------------
# Subcommands
# ---------------------------

def cmd_run(args) -> int:
    spec = parse_spec(load_document(args.spec))
    report = run_experiment(spec, runs=args.runs, seed=args.seed, progress=not args.quiet)
    write_bytes(args.out, emit_report(report, args.format))
    if args.out and args.out != "-":
        logging.info(f"Saved {args.format} report: {args.out}")
    if not report.reduction_triggered:
        logging.warning("No branch lost its separation status; the report carries no registrations")
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        diagnostics = check_spec(load_document(args.spec))
    except SpecValidationError as e:
        diagnostics = e.diagnostics
    if diagnostics:
        print("Experiment spec is NOT valid:", file=sys.stderr)
        for d in diagnostics:
            print(f"  - {d}", file=sys.stderr)
        return EXIT_INVALID
    print("Experiment spec is valid.", file=sys.stderr)
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.action == "list":
        for name in list_presets():
            print(name)
        return EXIT_OK
    if not args.name:
        logging.error("preset dump needs a preset name")
        return EXIT_INVALID
    try:
        text = preset_text(args.name)
    except KeyError as e:
        logging.error(e.args[0])
        return EXIT_INVALID
    write_text(args.out, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Finite-dimensional measurement simulator with "
                                                 "separation-status-triggered state reduction.")
    parser.add_argument("--verbose", "-v", action="store_true", help="Log debug messages.")
    parser.add_argument("--quiet", "-q", action="store_true", help="Only log warnings and errors; no progress bars.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment document and emit a report.")
    run.add_argument("spec", type=str, help="Path to the experiment document (YAML).")
    run.add_argument("--runs", "-n", type=int, default=None, help="Number of registrations (default: from the document).")
    run.add_argument("--seed", "-s", type=int, default=None, help="Master seed (default: from the document).")
    run.add_argument("--out", "-o", type=str, default="-", help="Output file ('-' = stdout).")
    run.add_argument("--format", "-f", type=str, choices=REPORT_FORMATS, default="json", help="Report format.")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="Validate an experiment document without running it.")
    check.add_argument("spec", type=str, help="Path to the experiment document (YAML).")
    check.set_defaults(func=cmd_check)

    preset = sub.add_parser("preset", help="List or print the built-in experiment presets.")
    preset.add_argument("action", choices=["list", "dump"], help="'list' names, 'dump' prints one document.")
    preset.add_argument("name", nargs="?", default="", help="Preset name for 'dump'.")
    preset.add_argument("--out", "-o", type=str, default="-", help="Output file ('-' = stdout).")
    preset.set_defaults(func=cmd_preset)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        logging.error(f"Input file not found: {e}")
        return EXIT_INVALID
    except SpecValidationError as e:
        logging.error(str(e))
        return EXIT_INVALID
    except MeasurementError as e:
        logging.error(str(e))
        return EXIT_RUNTIME
    except OSError as e:
        logging.error(f"Cannot write output: {e}")
        return EXIT_RUNTIME
    except (np.linalg.LinAlgError, MemoryError, FloatingPointError) as e:
        logging.error(f"Numerical failure: {str(e) or type(e).__name__}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
