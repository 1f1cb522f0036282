#!/usr/bin/env python3
"""
CLI tool for end-to-end reconstruction experiments.

A kernel is generated, its spectrum computed and the subspectrum
``{lambda_sm : |s| <= S}`` extracted; the kernel is then truncated to (0, a)
and reconstructed on (a, pi) from that data. The files ``known.csv`` and
``subspectrum.csv`` are valid inputs for ``diracinvert``.
"""

import argparse
import logging
import math
import sys

import numpy as np

from diracutils.basis import Subspectrum
from diracutils.cli.invert import reconstruct
from diracutils.cli.util import (
    EXIT_FAIL,
    EXIT_OK,
    EXIT_STAGE,
    OutputWriter,
    add_experiment_arguments,
    config_from_args,
    create_base_parser,
    run_guarded,
    setup_logging,
)
from diracutils.config import build_kernel
from diracutils.forward import eigenvalues
from diracutils.gridfn import restrict
from diracutils.inverse import KnownPart, relative_error, subspectrum_residual

LOGGER = logging.getLogger(__name__)

EPILOG = """
Examples:
  diracroundtrip                                # half-inverse problem, default kernel
  diracroundtrip --m 3 --grid 769 --out run3    # a = 2 pi / 3
  diracroundtrip --kernel zero --window 8
"""


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_experiment_arguments(parser)


def run(args: argparse.Namespace) -> int:
    setup_logging(args.verbose)
    config = config_from_args(args)
    writer = OutputWriter(config)
    a = config.split_point
    kernel = build_kernel(config)

    spectrum = eigenvalues(kernel, config.window * config.m, im_bound=config.im_bound)
    indices = [s * config.m for s in range(-config.window, config.window + 1)]
    sub = Subspectrum.from_spectrum(spectrum, config.m, config.window)
    known = KnownPart.from_kernel(kernel, a)
    writer.write_kernel("kernel.csv", kernel)
    writer.write_kernel("known.csv", known.as_kernel())
    writer.write_spectrum("subspectrum.csv", spectrum.subspectrum(indices))
    LOGGER.info("Subspectrum of %d eigenvalues, a = %.6g", len(sub), a)

    result = reconstruct(config, known, sub, writer)
    if result is None:
        return EXIT_STAGE

    rel_err = relative_error(result.kernel, kernel, a)
    residual = subspectrum_residual(result.kernel, sub)
    passed = rel_err <= config.tol
    print(f"rel_err = {rel_err:.3e} <= {config.tol:.1e}: {'PASS' if passed else 'FAIL'}")

    grid = kernel.grid.subgrid(a, math.pi)
    p_true = restrict(kernel.p, grid).values
    q_true = restrict(kernel.q, grid).values
    p_rec = restrict(result.kernel.p, grid).values
    q_rec = restrict(result.kernel.q, grid).values
    writer.write_csv(
        "recon.csv",
        {
            "t": grid.nodes,
            "re_p_true": p_true.real,
            "im_p_true": p_true.imag,
            "re_p_rec": p_rec.real,
            "im_p_rec": p_rec.imag,
            "re_q_true": q_true.real,
            "im_q_true": q_true.imag,
            "re_q_rec": q_rec.real,
            "im_q_rec": q_rec.imag,
            "pointwise_err": np.hypot(np.abs(p_rec - p_true), np.abs(q_rec - q_true)),
        },
    )
    writer.write_summary(
        {
            "ok": True,
            "passed": passed,
            "rel_err": rel_err,
            "tol": config.tol,
            "subspectrum_residual": residual,
            "extraction_passed": result.extraction.within_tolerance,
            "stages": result.diagnostics,
        }
    )
    return EXIT_OK if passed else EXIT_FAIL


def main() -> None:
    """Main CLI function."""
    parser = create_base_parser(
        description="Generate, truncate and reconstruct a kernel from a subspectrum",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    add_arguments(parser)
    sys.exit(run_guarded(run, parser.parse_args()))


if __name__ == "__main__":
    main()
