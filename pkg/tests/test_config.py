import math

import numpy as np
import pytest

from diracutils.config import ExperimentConfig, build_kernel, load_config
from diracutils.errors import InvalidArgumentError


def test_defaults_validate():
    config = ExperimentConfig().validate()
    assert config.split_point == pytest.approx(math.pi / 2)
    assert config.full_grid.n_points == 513
    assert config.extraction == 128


def test_misaligned_grid_suggests_size():
    with pytest.raises(InvalidArgumentError, match="--grid 514"):
        ExperimentConfig(m=3).validate()
    assert ExperimentConfig(m=3, grid=514).validate().split_point == pytest.approx(
        2 * math.pi / 3
    )


@pytest.mark.parametrize(
    "overrides",
    [{"m": 1}, {"window": 0}, {"tol": 0.0}, {"im_bound": -1.0}, {"a": 1.0}],
)
def test_validation_errors(overrides):
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(**overrides).validate()


def test_explicit_split_point_warns(caplog):
    a = math.pi * 3 / 4
    ExperimentConfig(a=a).validate()
    assert "differs from pi - pi/m" in caplog.text


def test_with_overrides_skips_none():
    config = ExperimentConfig().with_overrides(grid=257, window=None, out="run")
    assert config.grid == 257
    assert config.window == 32
    assert config.out == "run"


def test_config_hash_tracks_content():
    base = ExperimentConfig()
    assert base.config_hash() == ExperimentConfig().config_hash()
    assert base.config_hash() != base.with_overrides(seed=1).config_hash()
    assert len(base.config_hash()) == 64


def test_load_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        'kernel = "trig"\ngrid = 257\nm = 2\nwindow = 8\n'
        "[kernel_params]\np_coefficients = [0.1, 0.02]\n"
    )
    config = load_config(path)
    assert config.kernel == "trig"
    assert config.window == 8
    kernel = build_kernel(config)
    np.testing.assert_allclose(kernel.p.values[0], 0.12)


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("grid = 257\ncolour = 'blue'\n")
    with pytest.raises(InvalidArgumentError, match="colour"):
        load_config(path)


def test_load_config_rejects_malformed_and_missing(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("grid = = 257\n")
    with pytest.raises(InvalidArgumentError, match="Malformed"):
        load_config(path)
    with pytest.raises(InvalidArgumentError, match="Cannot read"):
        load_config(tmp_path / "missing.toml")


def test_build_roundtrip_kernel():
    config = ExperimentConfig(grid=257, kernel_params={"amplitude": 0.1})
    kernel = build_kernel(config)
    assert np.max(np.abs(kernel.p.values)) == pytest.approx(0.1, rel=1e-3)
    with pytest.raises(InvalidArgumentError):
        build_kernel(ExperimentConfig(kernel_params={"width": 1.0}))
