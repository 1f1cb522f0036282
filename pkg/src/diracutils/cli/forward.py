#!/usr/bin/env python3
"""
CLI tool to compute the spectrum of the integro-differential Dirac system.

Writes the eigenvalues with their multiplicities, samples of the characteristic
function, the extracted transform pair and the kernel itself.
"""

import argparse
import logging
import sys
import warnings

import numpy as np

from diracutils.cli.util import (
    EXIT_OK,
    OutputWriter,
    add_experiment_arguments,
    config_from_args,
    create_base_parser,
    read_kernel_csv,
    run_guarded,
    setup_logging,
)
from diracutils.config import build_kernel
from diracutils.forward import char_fn, eigenvalues
from diracutils.oracle import MAX_POINTS, oracle_eigenvalues
from diracutils.wtransform import extract_w_fit

LOGGER = logging.getLogger(__name__)

EPILOG = """
Examples:
  diracforward --kernel zero --window 16          # free spectrum, integers
  diracforward --kernel random --seed 3 --oracle  # compare with the dense oracle
  diracforward --kernel-file kernel.csv --out run # sampled kernel from a file
"""


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_experiment_arguments(parser)
    parser.add_argument(
        "--kernel-file",
        help="Kernel table (t, re_p, im_p, re_q, im_q) instead of an analytic family",
    )
    parser.add_argument(
        "--oracle",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="Add the distance to the dense oracle eigenvalues (grid <= 1024)",
    )


def run(args: argparse.Namespace) -> int:
    setup_logging(args.verbose)
    config = config_from_args(args)
    kernel_file = args.kernel_file or config.kernel_file
    if kernel_file:
        kernel = read_kernel_csv(kernel_file)
        if kernel.grid.n_points != config.grid:
            config = config.with_overrides(grid=kernel.grid.n_points)
    else:
        kernel = build_kernel(config)
    writer = OutputWriter(config)

    spectrum = eigenvalues(kernel, config.window, im_bound=config.im_bound)
    print(f"Spectrum for |Re lambda| <= {config.window + 0.5} on {kernel.grid}:")
    spectrum.print()

    summary: dict[str, object] = {"eigenvalues": len(spectrum)}
    extra = {}
    if args.oracle:
        if kernel.grid.n_points > MAX_POINTS:
            warnings.warn(
                f"Grid of {kernel.grid.n_points} points is too large for the oracle; skipped",
                UserWarning,
                stacklevel=2,
            )
        else:
            reference = oracle_eigenvalues(kernel, config.window, im_bound=config.im_bound)
            ref_values = reference.expanded()
            distances = [
                abs(e.value - ref_values[e.index]) if e.index in ref_values else np.nan
                for e in spectrum.entries
            ]
            extra["oracle_dist"] = distances
            summary["oracle_max_dist"] = float(np.nanmax(distances))
            print(f"Max distance to oracle: {summary['oracle_max_dist']:.3e}")
    writer.write_spectrum("spectrum.csv", spectrum, extra)

    kappa = spectrum.kappa()
    cumulative = spectrum.kappa_sq_cumulative()
    summary["kappa_max"] = max((abs(v) for v in kappa.values()), default=0.0)
    summary["kappa_sq_total"] = max(cumulative.values(), default=0.0)

    lams = np.linspace(-config.window - 0.5, config.window + 0.5, 8 * config.window + 9)
    delta = char_fn(kernel, lams)
    writer.write_csv(
        "delta.csv", {"lambda": lams, "re_delta": delta.real, "im_delta": delta.imag}
    )

    fit = extract_w_fit(kernel, window=config.extraction)
    fit.print()
    writer.write_csv(
        "w.csv",
        {
            "t": fit.w.grid.nodes,
            "re_w1": fit.w.w1.values.real,
            "im_w1": fit.w.w1.values.imag,
            "re_w2": fit.w.w2.values.real,
            "im_w2": fit.w.w2.values.imag,
        },
    )
    writer.write_kernel("kernel.csv", kernel)
    summary["extraction_residual"] = fit.residual
    summary["extraction_condition"] = fit.condition
    summary["extraction_passed"] = fit.within_tolerance
    writer.write_summary(summary)
    LOGGER.info("Results written to %s", writer.directory)
    return EXIT_OK


def main() -> None:
    """Main CLI function."""
    parser = create_base_parser(
        description="Compute eigenvalues and the characteristic function of a Dirac system",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    add_arguments(parser)
    sys.exit(run_guarded(run, parser.parse_args()))


if __name__ == "__main__":
    main()
