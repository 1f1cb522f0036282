#!/usr/bin/env python3
"""
CLI tool to continue a kernel known on (0, a) to (a, pi) from a subspectrum.
"""

import argparse
import logging
import math
import sys
from typing import Any

from diracutils.basis import Subspectrum
from diracutils.cli.util import (
    EXIT_OK,
    EXIT_STAGE,
    OutputWriter,
    add_experiment_arguments,
    config_from_args,
    create_base_parser,
    read_kernel_csv,
    read_subspectrum_csv,
    run_guarded,
    setup_logging,
)
from diracutils.config import ExperimentConfig
from diracutils.errors import InvalidArgumentError, StageError
from diracutils.forward import KernelPair
from diracutils.gridfn import restrict
from diracutils.inverse import InversionResult, KnownPart, algorithm1, subspectrum_residual

LOGGER = logging.getLogger(__name__)

EPILOG = """
Examples:
  diracinvert known.csv subspectrum.csv --m 2      # half-inverse problem
  diracinvert known.csv subspectrum.csv --m 3 --out run3
"""


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("known", help="Kernel table on [0, pi]; values beyond a are ignored")
    parser.add_argument(
        "subspectrum",
        help="Table k, re_lambda, im_lambda, multiplicity of the given eigenvalues",
    )
    add_experiment_arguments(parser)


def stage_failure_summary(err: StageError) -> dict[str, Any]:
    cause = err.cause
    report: dict[str, Any] = {
        "ok": False,
        "failed_stage": err.stage,
        "error": type(cause).__name__,
        "message": str(cause),
    }
    for attribute in ("residual", "condition", "history", "box"):
        if hasattr(cause, attribute):
            report[attribute] = getattr(cause, attribute)
    return report


def recon_columns(kernel: KernelPair, a: float) -> dict[str, Any]:
    sub = kernel.grid.subgrid(a, math.pi)
    p = restrict(kernel.p, sub).values
    q = restrict(kernel.q, sub).values
    return {
        "t": sub.nodes,
        "re_p": p.real,
        "im_p": p.imag,
        "re_q": q.real,
        "im_q": q.imag,
    }


def reconstruct(
    config: ExperimentConfig, known: KnownPart, sub: Subspectrum, writer: OutputWriter
) -> InversionResult | None:
    """Run the reconstruction, writing the summary also when a stage fails."""
    try:
        result = algorithm1(known, sub, window=config.extraction)
    except StageError as err:
        print(f"Error: {err}", file=sys.stderr)
        writer.write_summary(stage_failure_summary(err))
        return None
    print("Stage diagnostics:")
    result.print()
    return result


def run(args: argparse.Namespace) -> int:
    setup_logging(args.verbose)
    config = config_from_args(args)
    kernel = read_kernel_csv(args.known)
    if kernel.grid.n_points != config.grid:
        err = f"{args.known} has {kernel.grid.n_points} points but the config expects {config.grid}"
        raise InvalidArgumentError(err)
    known = KnownPart.from_kernel(kernel, config.split_point)
    sub = read_subspectrum_csv(args.subspectrum)
    writer = OutputWriter(config)

    result = reconstruct(config, known, sub, writer)
    if result is None:
        return EXIT_STAGE
    residual = subspectrum_residual(result.kernel, sub)
    print(f"max |Delta(lambda_k)| of the reconstruction = {residual:.3e}")
    writer.write_csv("recon.csv", recon_columns(result.kernel, config.split_point))
    writer.write_kernel("kernel.csv", result.kernel)
    writer.write_summary(
        {
            "ok": True,
            "stages": result.diagnostics,
            "subspectrum_residual": residual,
            "extraction_passed": result.extraction.within_tolerance,
        }
    )
    return EXIT_OK


def main() -> None:
    """Main CLI function."""
    parser = create_base_parser(
        description="Reconstruct the kernel on (a, pi) from its known part and a subspectrum",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    add_arguments(parser)
    sys.exit(run_guarded(run, parser.parse_args()))


if __name__ == "__main__":
    main()
