import argparse
import json
import logging
import sys
from collections.abc import Callable, Mapping
from pathlib import Path
from typing import Any

import numpy as np
import scipy

import diracutils
from diracutils.basis import Subspectrum
from diracutils.config import ExperimentConfig, load_config
from diracutils.errors import DiracError, InvalidArgumentError
from diracutils.forward import KernelPair, Spectrum
from diracutils.gridfn import Grid, GridFunction

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_STAGE = 2
EXIT_FAIL = 3

KERNEL_COLUMNS = ("t", "re_p", "im_p", "re_q", "im_q")


def create_base_parser(**kwargs: Any) -> argparse.ArgumentParser:
    """Create a base argument parser with common options."""
    parser = argparse.ArgumentParser(**kwargs)
    parser.add_argument(
        "--version",
        action="version",
        version="%(prog)s "
        + diracutils.__version__
        + " using numpy "
        + np.__version__
        + " and scipy "
        + scipy.__version__,
    )
    return parser


def positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        err = f"expected a positive integer, got {value}"
        raise argparse.ArgumentTypeError(err)
    return number


def positive_float(value: str) -> float:
    number = float(value)
    if not number > 0:
        err = f"expected a positive number, got {value}"
        raise argparse.ArgumentTypeError(err)
    return number


def add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    """Add the flags shared by every experiment program."""
    parser.add_argument("--config", type=Path, help="Flat TOML experiment configuration")
    parser.add_argument("--out", help="Output directory (default: out)")
    parser.add_argument("--seed", type=int, help="Seed for random kernels (default: 0)")
    parser.add_argument("--grid", type=positive_int, help="Grid points on [0, pi] (default: 513)")
    parser.add_argument("--m", type=int, help="Subspectrum step m >= 2, a = pi - pi/m (default: 2)")
    parser.add_argument("--window", type=positive_int, help="Window |s| <= S (default: 32)")
    parser.add_argument("--tol", type=positive_float, help="Pass/fail tolerance (default: 1e-3)")
    parser.add_argument("--kernel", help="Kernel family: roundtrip, zero, trig, gauss, pwlinear, random")
    parser.add_argument("--im-bound", type=positive_float, help="|Im lambda| search bound (default: 2)")
    parser.add_argument(
        "--extraction-window",
        type=positive_int,
        help="Half-integer lattice size for w-extraction (default: min(128, (n-1)//4))",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Increase logging verbosity (-v info, -vv debug)",
    )


def setup_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (if any) overridden by the command-line flags, validated."""
    config = load_config(args.config) if args.config else ExperimentConfig()
    return config.with_overrides(
        out=args.out,
        seed=args.seed,
        grid=args.grid,
        m=args.m,
        window=args.window,
        tol=args.tol,
        kernel=args.kernel,
        im_bound=args.im_bound,
        extraction_window=args.extraction_window,
    ).validate()


def run_guarded(run: Callable[[argparse.Namespace], int], args: argparse.Namespace) -> int:
    """Map library errors to exit codes: 1 for input problems, 2 for numerical stages."""
    try:
        return run(args)
    except (InvalidArgumentError, OSError) as err:
        print(f"Error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except DiracError as err:
        print(f"Error: {err}", file=sys.stderr)
        return EXIT_STAGE


class OutputWriter:
    """Writes CSV and JSON results tagged with the tool version and config hash."""

    def __init__(self, config: ExperimentConfig) -> None:
        self.directory = Path(config.out)
        self.config = config
        self.tag = f"diracutils {diracutils.__version__} config={config.config_hash()}"

    def path(self, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        return self.directory / name

    def write_csv(self, name: str, columns: Mapping[str, Any]) -> Path:
        target = self.path(name)
        data = np.column_stack([np.real(np.asarray(v)) for v in columns.values()])
        np.savetxt(
            target,
            data,
            delimiter=",",
            fmt="%.17g",
            header=self.tag + "\n" + ",".join(columns),
        )
        return target

    def write_kernel(self, name: str, kernel: KernelPair) -> Path:
        return self.write_csv(name, kernel_columns(kernel))

    def write_spectrum(
        self, name: str, spectrum: Spectrum, extra: Mapping[str, Any] | None = None
    ) -> Path:
        cumulative = spectrum.kappa_sq_cumulative()
        entries = spectrum.entries
        columns: dict[str, Any] = {
            "k": [e.index for e in entries],
            "re_lambda": [e.value.real for e in entries],
            "im_lambda": [e.value.imag for e in entries],
            "multiplicity": [e.multiplicity for e in entries],
            "kappa_sq_cum": [cumulative[e.index] for e in entries],
        }
        columns.update(extra or {})
        return self.write_csv(name, columns)

    def write_summary(self, summary: Mapping[str, Any], name: str = "summary.json") -> Path:
        target = self.path(name)
        payload = {
            "version": diracutils.__version__,
            "config_hash": self.config.config_hash(),
            "config": self.config.to_dict(),
            **summary,
        }
        target.write_text(json.dumps(payload, indent=2, default=str) + "\n")
        return target


def kernel_columns(kernel: KernelPair) -> dict[str, Any]:
    return {
        "t": kernel.grid.nodes,
        "re_p": kernel.p.values.real,
        "im_p": kernel.p.values.imag,
        "re_q": kernel.q.values.real,
        "im_q": kernel.q.values.imag,
    }


def _load_table(path: str | Path, columns: int) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError as err:
        msg = f"Malformed CSV file {path}: {err}"
        raise InvalidArgumentError(msg) from err
    if data.shape[1] < columns:
        err = f"{path} needs at least {columns} columns, got {data.shape[1]}"
        raise InvalidArgumentError(err)
    return data


def read_kernel_csv(path: str | Path) -> KernelPair:
    """Kernel table with columns t, re_p, im_p, re_q, im_q on a uniform grid of [0, pi]."""
    data = _load_table(path, len(KERNEL_COLUMNS))
    grid = Grid.full(data.shape[0])
    if not np.allclose(data[:, 0], grid.nodes, rtol=0, atol=1e-9):
        err = f"{path}: t column is not a uniform grid of [0, pi]"
        raise InvalidArgumentError(err)
    return KernelPair(
        GridFunction(grid, data[:, 1] + 1j * data[:, 2]),
        GridFunction(grid, data[:, 3] + 1j * data[:, 4]),
    )


def read_subspectrum_csv(path: str | Path) -> Subspectrum:
    """Spectrum table (k, re_lambda, im_lambda, multiplicity, ...) as a subspectrum."""
    data = _load_table(path, 4)
    indices: list[int] = []
    values: list[complex] = []
    for k, re, im, mult in data[:, :4]:
        for i in range(int(mult)):
            indices.append(int(k) + i)
            values.append(complex(re, im))
    return Subspectrum.from_values(indices, values)
