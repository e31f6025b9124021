"""Command-line runner: outputs, exit codes, determinism."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from maupertuis import __version__
from maupertuis.cli import run


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def read_json(path):
    return json.loads(path.read_text())


def test_ivp_energy(tmp_path, capsys):
    code = run(["ivp", "--potential", "cos1d", "--energy", "1", "--eps", "0.1,0.05,0.025",
                "--out", str(tmp_path)])
    assert code == 0
    header, data = read_csv(tmp_path / "ivp.csv")
    assert header == ["eps", "sup_error", "bound", "ratio"]
    assert np.all(data[:, 1] <= data[:, 2])
    doc = read_json(tmp_path / "ivp.json")
    assert set(doc) == {"config", "version", "results", "assertions"}
    assert doc["version"] == __version__
    assert all(set(a) == {"name", "pass", "detail"} for a in doc["assertions"])
    assert "PASS  rate" in capsys.readouterr().out


def test_ivp_velocity(tmp_path):
    code = run(["ivp", "--potential", "cos1d", "--velocity", "1", "--energies", "0.5,0.25",
                "--kmax", "10", "--out", str(tmp_path)])
    assert code == 0
    header, data = read_csv(tmp_path / "ivp.csv")
    assert header == ["energy", "eps", "sup_error", "bound", "ratio"]
    assert set(data[:, 0]) == {0.5, 0.25}


def test_bvp(tmp_path):
    assert run(["bvp", "--energy", "1", "--eps", "0.1,0.05", "--from", "0", "--to", "1.3",
                "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "bvp.csv")[0][0] == "eps"
    assert run(["bvp", "--time", "0.59", "--eps", "0.1,0.05", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "bvp.csv")
    assert header == ["eps", "energy", "residual", "lower_bound", "upper_bound"]
    assert np.all(np.abs(data[:, 2]) <= 1e-10)


def test_effective_hamiltonian_free(tmp_path):
    assert run(["effective-hamiltonian", "--potential", "zero", "--pmax", "3",
                "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "effective-hamiltonian.csv")
    assert header == ["p", "hbar", "hbar_prime"]
    assert len(data) == 101
    assert np.allclose(data[:, 1], data[:, 0] ** 2 / 2, rtol=1e-12, atol=1e-15)


def test_effective_hamiltonian_flat_piece(tmp_path):
    assert run(["effective-hamiltonian", "--potential", "cos1d", "--pmax", "2",
                "--points", "21", "--out", str(tmp_path)]) == 0
    _, data = read_csv(tmp_path / "effective-hamiltonian.csv")
    flat = data[:, 0] <= 2 * np.sqrt(2) / np.pi
    assert np.all(data[flat, 1] == 0) and np.all(data[~flat, 1] > 0)


def test_geodesic(tmp_path):
    assert run(["geodesic", "--potential", "cos2d", "--energy", "1", "--eps", "0.25",
                "--from", "0,0", "--to", "1,0.5", "--starts", "2", "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "geodesic.csv")[0] == ["s", "x1", "x2"]
    header, data = read_csv(tmp_path / "geodesic_timed.csv")
    assert header == ["s", "x1", "x2", "t"]
    assert np.all(np.diff(data[:, 3]) > 0)


def test_cell_problem_jacobi(tmp_path):
    assert run(["cell-problem", "--potential", "cos2d", "--energy", "1", "--z", "1,0.5",
                "--eps", "0.25", "--starts", "2", "--homogeneity", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "cell-problem.csv")
    assert header == ["eps", "z_norm", "estimate", "lower_bound", "upper_bound"]
    assert len(data) == 2


def test_cell_problem_action(tmp_path):
    assert run(["cell-problem", "--potential", "cos1d", "--time", "0.59", "--z", "1",
                "--eps", "0.2,0.1", "--starts", "2", "--out", str(tmp_path)]) == 0
    names = [a["name"] for a in read_json(tmp_path / "cell-problem.json")["assertions"]]
    assert "cauchy" in names


def test_verify_reports_length_energy_failure(tmp_path, capsys):
    code = run(["verify", "--potential", "cos2d", "--energy", "1", "--eps", "0.25",
                "--from", "0,0", "--to", "1,0", "--N", "200", "--out", str(tmp_path)])
    assert code == 2
    doc = read_json(tmp_path / "verify.json")
    status = {a["name"]: a["pass"] for a in doc["assertions"]}
    assert status == {"action_identity": True, "length_energy": False, "trajectory_endpoint": True}
    assert "FAIL  length_energy" in capsys.readouterr().out
    assert read_csv(tmp_path / "verify_timed.csv")[0] == ["s", "x1", "x2", "t"]


@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["ivp", "--energy", "1", "--eps", "0.05,0.1"],
    ["ivp", "--energy", "-1"],
    ["ivp", "--energy", "1", "--velocity", "1"],
    ["ivp", "--potential", "nope", "--energy", "1"],
    ["effective-hamiltonian", "--potential", "cos2d", "--pmax", "1"],
    ["geodesic", "--potential", "cos2d", "--energy", "1", "--eps", "0.2,0.1", "--from", "0,0", "--to", "1,0"],
    ["geodesic", "--potential", "cos2d", "--energy", "1", "--eps", "0.2", "--from", "0", "--to", "1,0"],
    ["cell-problem", "--potential", "cos2d", "--energy", "1", "--z", "a,b", "--eps", "0.2"],
])
def test_usage_errors(tmp_path, capsys, argv):
    assert run(argv + ["--out", str(tmp_path)] if argv else argv) == 1
    assert "error" in capsys.readouterr().err


def test_same_seed_same_bytes(tmp_path):
    args = ["cell-problem", "--potential", "cos2d", "--energy", "1", "--z", "1,0.5",
            "--eps", "0.25", "--starts", "3", "--seed", "9"]
    for name in ("a", "b"):
        assert run(args + ["--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "cell-problem.csv").read_bytes()
    assert a == (tmp_path / "b" / "cell-problem.csv").read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "maupertuis", "effective-hamiltonian",
                           "--potential", "zero", "--pmax", "1", "--points", "5", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout
