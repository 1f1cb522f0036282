#!/usr/bin/env python3
"""Single entry point exposing the diracutils programs as subcommands."""

import argparse
import sys

from diracutils.cli import basisdiag, forward, invert, roundtrip
from diracutils.cli.util import create_base_parser, run_guarded

COMMANDS = {
    "forward": (forward, "Spectrum and characteristic function of a kernel"),
    "invert": (invert, "Reconstruct the kernel on (a, pi) from a subspectrum"),
    "roundtrip": (roundtrip, "Generate, truncate and reconstruct a kernel"),
    "basis-diag": (basisdiag, "Gram and completeness diagnostics of a subspectrum system"),
}


def create_parser() -> argparse.ArgumentParser:
    parser = create_base_parser(
        prog="diracutils",
        description="Forward and partial inverse spectral problems for Dirac systems",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (module, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(
            name,
            help=help_text,
            description=module.__doc__,
            epilog=getattr(module, "EPILOG", None),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        module.add_arguments(sub)
        sub.set_defaults(run=module.run)
    return parser


def main() -> None:
    """Main CLI function."""
    args = create_parser().parse_args()
    sys.exit(run_guarded(args.run, args))


if __name__ == "__main__":
    main()
