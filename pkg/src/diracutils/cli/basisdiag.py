#!/usr/bin/env python3
"""
CLI tool to diagnose the vector-function system of a progression subspectrum.

Reports the Gram matrix condition, the largest off-diagonal entry relative to
``b`` and the completeness score, optionally for randomly perturbed values
``lambda_sm = s m + kappa_s`` with ``kappa_s`` decaying like ``1 / (1 + |s|)``.
"""

import argparse
import math
import sys

import numpy as np

from diracutils.basis import Subspectrum, build_basis, completeness_score, gram
from diracutils.cli.util import (
    EXIT_OK,
    OutputWriter,
    add_experiment_arguments,
    config_from_args,
    create_base_parser,
    positive_float,
    run_guarded,
    setup_logging,
)
from diracutils.config import ExperimentConfig

EPILOG = """
Examples:
  diracbasis --m 3 --grid 769 --window 16     # unperturbed, Gram = b * identity
  diracbasis --perturb 0.1 --seed 7           # random square-summable perturbation
"""


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_experiment_arguments(parser)
    parser.add_argument(
        "--perturb",
        type=positive_float,
        help="Scale of the random perturbation kappa_s (default: none)",
    )


def perturbation(config: ExperimentConfig, scale: float | None) -> np.ndarray | None:
    if scale is None:
        return None
    rng = np.random.default_rng(config.seed)
    s = np.arange(-config.window, config.window + 1)
    noise = rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size)
    return scale * noise / (1.0 + np.abs(s))


def run(args: argparse.Namespace) -> int:
    setup_logging(args.verbose)
    config = config_from_args(args)
    writer = OutputWriter(config)
    b = math.pi - config.split_point
    sub = Subspectrum.progression(config.m, config.window, perturbation(config, args.perturb))
    basis = build_basis(sub, config.full_grid.subgrid(0.0, b))

    report = gram(basis)
    score = completeness_score(basis)
    offdiag = report.matrix - np.diag(np.diag(report.matrix))
    relative_offdiag = float(np.max(np.abs(offdiag))) / b
    print(f"System of {len(basis)} vectors on (0, {b:.6g}):")
    report.print()
    print(f"  completeness score {score:.6e} (sqrt(b) = {math.sqrt(b):.6e})")

    values = np.array([sub.value_at(k) for k in sub.indices])
    writer.write_csv(
        "subspectrum.csv",
        {
            "k": sub.indices,
            "re_lambda": values.real,
            "im_lambda": values.imag,
            "multiplicity": np.ones(len(sub.indices)),
        },
    )
    writer.write_summary(
        {
            "vectors": len(basis),
            "b": b,
            "gram_condition": report.condition,
            "max_offdiag_over_b": relative_offdiag,
            "completeness": score,
        }
    )
    return EXIT_OK


def main() -> None:
    """Main CLI function."""
    parser = create_base_parser(
        description="Gram and completeness diagnostics of a subspectrum system",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    add_arguments(parser)
    sys.exit(run_guarded(run, parser.parse_args()))


if __name__ == "__main__":
    main()
