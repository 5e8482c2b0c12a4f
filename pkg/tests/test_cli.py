import csv
import json
import shutil
import subprocess
import sys

import pytest

from ring_noon import __version__
from ring_noon.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_groundstate(tmp_path):
    assert main(["groundstate", "--out", str(tmp_path), "--set", "model.N=6"]) == EXIT_OK
    rows = _read_csv(tmp_path / "groundstate.csv")
    assert len(rows) == 28
    assert abs(sum(float(r["probability"]) for r in rows) - 1) < 1e-9
    side = json.loads((tmp_path / "groundstate.json").read_text())
    assert side["subcommand"] == "groundstate" and side["version"] == __version__
    assert side["config"]["model"]["N"] == 6
    assert side["constants"]["delta_E_constant"] == pytest.approx(2 * 3**0.5)
    assert side["outputs"] == ["groundstate.csv"]


def test_gap_sweep_degenerate_without_asymmetry(tmp_path):
    args = ["gap-sweep", "--out", str(tmp_path), "--set", "model.U=0", "--set", "model.delta_J=0",
            "--set", "grids.omega={start=0, stop='2*pi', num=21}"]
    assert main(args) == EXIT_OK
    rows = _read_csv(tmp_path / "gap-sweep.csv")
    mid = rows[10]
    assert float(mid["delta_E"]) == 0 and mid["degenerate"] == "1"
    side = json.loads((tmp_path / "gap-sweep.json").read_text())
    assert side["derived"]["min_gap"] == 0


def test_energies_levels(tmp_path):
    assert main(["energies", "--out", str(tmp_path), "--set", "grids.levels=3",
                 "--set", "grids.omega=[0.0, 1.0]"]) == EXIT_OK
    rows = _read_csv(tmp_path / "energies.csv")
    assert list(rows[0]) == ["omega", "E0", "E1", "E2"] and len(rows) == 2


def test_coupling_sweep_tables(tmp_path):
    args = ["coupling-sweep", "--out", str(tmp_path), "--set", "grids.N_list=[3, 4, 5]",
            "--set", "grids.omega={start=0, stop='2*pi', num=41}"]
    assert main(args) == EXIT_OK
    scaling = _read_csv(tmp_path / "coupling-sweep_scaling.csv")
    assert [int(r["N"]) for r in scaling] == [3, 4, 5]
    side = json.loads((tmp_path / "coupling-sweep.json").read_text())
    assert side["derived"]["r2"] > 0.99


def test_two_time_and_determinism(tmp_path):
    args = ["two-time", "--set", "model.delta_J=0.001", "--set", "sampling.shots=200",
            "--set", "sampling.seed=4"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    for name in ("two-time.csv", "two-time.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert len(_read_csv(a / "two-time.csv")) == 121


def test_precision_run(tmp_path):
    args = ["precision", "--out", str(tmp_path), "--set", "model.delta_J=0.003",
            "--set", "grids.delta_omega=[0.1]"]
    assert main(args) == EXIT_OK
    summary = _read_csv(tmp_path / "precision_summary.csv")
    fit, analytic = float(summary[0]["delta_E_fit"]), float(summary[0]["delta_E_analytic"])
    assert abs(fit / analytic - 1) < 0.01
    assert float(summary[0]["delta_E_quoted_constant"]) == pytest.approx(analytic / 2, rel=1e-9)


def test_numerical_failure_names_stage(tmp_path, capsys):
    # at delta_J = 0.01 no readout point reaches fidelity 0.99
    assert main(["precision", "--out", str(tmp_path)]) == EXIT_NUMERICAL
    err = capsys.readouterr().err
    assert "stage 'readout point'" in err
    assert not (tmp_path / "precision.csv").exists()


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[model]\nN = 3\nbogus = 1\n")
    assert main(["groundstate", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "line 3" in capsys.readouterr().err
    assert main(["resonance-scan", "--set", "drive.amplitude=0.5", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["two-time", "--set", "model.omega_phase=3.0", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_validate_subcommand(tmp_path):
    assert main(["validate", "--out", str(tmp_path)]) == EXIT_OK
    rows = _read_csv(tmp_path / "validate.csv")
    assert all(r["passed"] == "1" for r in rows)
    names = {r["check"] for r in rows}
    for required in ("hermiticity", "periodicity", "reflection", "z2_commutator",
                     "ladder_algebra", "time_reversal"):
        assert required in names


@pytest.mark.skipif(shutil.which("ring-noon") is None, reason="console script not installed")
def test_console_script(tmp_path):
    out = subprocess.run(["ring-noon", "groundstate", "--out", str(tmp_path)],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0
    assert (tmp_path / "groundstate.csv").exists()


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ring_noon.cli", "--version"],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0 and __version__ in out.stdout
