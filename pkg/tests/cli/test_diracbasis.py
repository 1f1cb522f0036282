import json
import math
import subprocess

import numpy as np
import pytest

from diracutils.cli import basisdiag
from diracutils.cli.main import create_parser
from diracutils.config import ExperimentConfig

path = "./src/diracutils/cli/"


def test_basisdiag_unperturbed(tmp_path):
    result = subprocess.run(
        [f"{path}basisdiag.py", "--m", "3", "--grid", "385", "--window", "8", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
        check=False,
    )
    assert result.returncode == 0, result.stderr
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["vectors"] == 17
    assert summary["b"] == pytest.approx(math.pi / 3)
    assert summary["gram_condition"] == pytest.approx(1.0)
    assert summary["max_offdiag_over_b"] < 1e-10
    assert summary["completeness"] == pytest.approx(math.sqrt(math.pi / 3))
    subspectrum = np.loadtxt(tmp_path / "subspectrum.csv", delimiter=",")
    np.testing.assert_array_equal(subspectrum[:, 0], np.arange(-24, 25, 3))


def test_basisdiag_perturbed(tmp_path):
    result = subprocess.run(
        [f"{path}basisdiag.py", "--grid", "257", "--window", "8", "--perturb", "0.1",
         "--out", str(tmp_path)],
        capture_output=True,
        text=True,
        check=False,
    )
    assert result.returncode == 0, result.stderr
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert 1.0 < summary["gram_condition"] < 100
    assert summary["completeness"] > 0.1


def test_perturbation_decays():
    config = ExperimentConfig(window=10, seed=2)
    kappa = basisdiag.perturbation(config, 0.5)
    rng = np.random.default_rng(2)
    noise = rng.standard_normal(21) + 1j * rng.standard_normal(21)
    s = np.arange(-10, 11)
    np.testing.assert_allclose(kappa * (1 + np.abs(s)), 0.5 * noise)
    assert basisdiag.perturbation(config, None) is None
    np.testing.assert_array_equal(kappa, basisdiag.perturbation(config, 0.5))


def test_main_parser_subcommands():
    parser = create_parser()
    args = parser.parse_args(["basis-diag", "--m", "3", "--perturb", "0.2"])
    assert args.run is basisdiag.run
    assert args.m == 3
    assert args.perturb == 0.2
    args = parser.parse_args(["invert", "known.csv", "sub.csv"])
    assert args.known == "known.csv"
    with pytest.raises(SystemExit):
        parser.parse_args(["forward", "--window", "0"])
