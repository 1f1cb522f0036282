import json
import subprocess

import numpy as np

path = "./src/diracutils/cli/"


def run_forward(*args):
    return subprocess.run(
        [f"{path}forward.py", *args],
        capture_output=True,
        text=True,
        check=False,
    )


def test_forward_free_spectrum(tmp_path):
    result = run_forward("--kernel", "zero", "--grid", "129", "--window", "4", "--out", str(tmp_path))
    assert result.returncode == 0
    assert "Re lambda" in result.stdout

    spectrum = np.loadtxt(tmp_path / "spectrum.csv", delimiter=",", ndmin=2)
    np.testing.assert_array_equal(spectrum[:, 0], np.arange(-4, 5))
    np.testing.assert_allclose(spectrum[:, 1], np.arange(-4, 5), atol=1e-10)
    np.testing.assert_array_equal(spectrum[:, 3], 1)

    delta = np.loadtxt(tmp_path / "delta.csv", delimiter=",")
    np.testing.assert_allclose(delta[:, 1], np.sin(np.pi * delta[:, 0]), atol=1e-12)

    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["eigenvalues"] == 9
    assert summary["extraction_passed"] is True
    assert summary["config"]["grid"] == 129
    assert len(summary["config_hash"]) == 64
    header = (tmp_path / "w.csv").read_text().splitlines()[0]
    assert summary["config_hash"] in header


def test_forward_oracle_distance(tmp_path):
    result = run_forward(
        "--kernel", "random", "--seed", "3", "--grid", "129", "--window", "4",
        "--oracle", "--out", str(tmp_path),
    )
    assert result.returncode == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["oracle_max_dist"] < 1e-2
    spectrum = np.loadtxt(tmp_path / "spectrum.csv", delimiter=",", ndmin=2)
    assert spectrum.shape[1] == 6


def test_forward_kernel_file_round_trip(tmp_path):
    first = tmp_path / "first"
    second = tmp_path / "second"
    result = run_forward("--kernel", "gauss", "--grid", "129", "--window", "3", "--out", str(first))
    assert result.returncode == 0
    result = run_forward(
        "--kernel-file", str(first / "kernel.csv"), "--window", "3", "--out", str(second)
    )
    assert result.returncode == 0
    np.testing.assert_allclose(
        np.loadtxt(first / "spectrum.csv", delimiter=","),
        np.loadtxt(second / "spectrum.csv", delimiter=","),
        atol=1e-12,
    )


def test_forward_misaligned_grid(tmp_path):
    result = run_forward("--m", "3", "--grid", "129", "--out", str(tmp_path))
    assert result.returncode == 1
    assert "--grid 130" in result.stderr


def test_forward_unknown_family(tmp_path):
    result = run_forward("--kernel", "bessel", "--grid", "129", "--out", str(tmp_path))
    assert result.returncode == 1
    assert "Unknown kernel family" in result.stderr


def test_forward_version():
    result = run_forward("--version")
    assert result.returncode == 0
    assert "numpy" in result.stdout
