"""Experiment configuration: flat TOML files overridden by command-line flags."""

import dataclasses
import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from diracutils.errors import InvalidArgumentError
from diracutils.forward import DEFAULT_IM_BOUND, KernelPair
from diracutils.gridfn import Grid, aligned_grid_size
from diracutils.kernels import default_roundtrip_kernel, make_kernel
from diracutils.wtransform import default_extraction_window

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

LOGGER = logging.getLogger(__name__)

ROUNDTRIP_KERNEL = "roundtrip"


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: str = ROUNDTRIP_KERNEL
    kernel_params: dict[str, Any] = field(default_factory=dict)
    kernel_file: str | None = None
    grid: int = 513
    m: int = 2
    a: float | None = None
    window: int = 32
    tol: float = 1e-3
    seed: int = 0
    out: str = "out"
    im_bound: float = DEFAULT_IM_BOUND
    extraction_window: int | None = None

    @property
    def split_point(self) -> float:
        """``a``; defaults to ``pi - pi/m``."""
        return self.a if self.a is not None else math.pi - math.pi / self.m

    @property
    def full_grid(self) -> Grid:
        return Grid.full(self.grid)

    @property
    def extraction(self) -> int:
        if self.extraction_window is not None:
            return self.extraction_window
        return default_extraction_window(self.full_grid)

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with every non-None override applied."""
        return dataclasses.replace(
            self, **{key: value for key, value in overrides.items() if value is not None}
        )

    def validate(self) -> "ExperimentConfig":
        if self.m < 2:
            err = f"m must be at least 2, got {self.m}"
            raise InvalidArgumentError(err)
        if self.window < 1:
            err = f"The subspectrum window must be at least 1, got {self.window}"
            raise InvalidArgumentError(err)
        if self.tol <= 0 or self.im_bound <= 0:
            err = "tol and im_bound must be positive"
            raise InvalidArgumentError(err)
        a = self.split_point
        if not math.pi / 2 - 1e-12 <= a < math.pi:
            err = f"The split point must satisfy pi/2 <= a < pi, got a = {a}"
            raise InvalidArgumentError(err)
        try:
            self.full_grid.index_of(a)
        except InvalidArgumentError:
            err = (
                f"a = {a:.6g} is not a node of a {self.grid}-point grid; "
                f"use --grid {aligned_grid_size(self.grid, self.m)}"
            )
            raise InvalidArgumentError(err) from None
        if self.a is not None and abs(self.a - (math.pi - math.pi / self.m)) > 1e-12:
            LOGGER.warning(
                "a = %.6g differs from pi - pi/m = %.6g; the subspectrum system "
                "may not be a basis",
                self.a,
                math.pi - math.pi / self.m,
            )
        return self

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form, identifying every output file."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(canonical.encode()).hexdigest()


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a flat TOML file; unknown keys are rejected."""
    try:
        with Path(path).open("rb") as f:
            data = tomllib.load(f)
    except OSError as err:
        msg = f"Cannot read config file {path}: {err}"
        raise InvalidArgumentError(msg) from err
    except tomllib.TOMLDecodeError as err:
        msg = f"Malformed config file {path}: {err}"
        raise InvalidArgumentError(msg) from err
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        err = f"Unknown config keys in {path}: {', '.join(unknown)}"
        raise InvalidArgumentError(err)
    try:
        return ExperimentConfig(**data)
    except TypeError as err:
        msg = f"Invalid config file {path}: {err}"
        raise InvalidArgumentError(msg) from err


def build_kernel(config: ExperimentConfig) -> KernelPair:
    """The configured analytic kernel on the configured grid."""
    grid = config.full_grid
    if config.kernel == ROUNDTRIP_KERNEL:
        try:
            return default_roundtrip_kernel(grid, config.split_point, **config.kernel_params)
        except TypeError as err:
            msg = f"Bad parameters for the round-trip kernel: {err}"
            raise InvalidArgumentError(msg) from err
    return make_kernel(config.kernel, grid, config.kernel_params, seed=config.seed)
