import numpy as np
import pytest

from phasemix import cli
from phasemix import verify as V
from phasemix.fileio import read_series


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_stationary_config(tmp_path, capsys):
    cfg = write(tmp_path, "grid.nx = 8\ngrid.ny = 8\nic.amplitude = 0\nic.mean = 0.3\ntime.t_end = 0.01\noutput.snapshot_every = 5\noutput.render = true\n")
    out = tmp_path / "out"
    assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
    data = read_series(out / "series.csv")
    assert len(data) == 11
    assert np.ptp(data.mass) < 1e-15 and np.ptp(data.energy) < 1e-15
    assert (out / "phi_000010.bin").exists() and (out / "phi_000005.pgm").exists()
    assert (out / "state_000010.json").exists()
    assert "mass" in capsys.readouterr().out


def test_run_is_deterministic(tmp_path):
    cfg = write(tmp_path, "grid.nx = 16\ngrid.ny = 16\nic.seed = 9\nic.amplitude = 0.1\ntime.t_end = 0.01\noutput.snapshot_every = 10\n")
    for d in ("a", "b"):
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for name in ("series.csv", "phi_000010.bin", "v_x_000010.bin", "mu_000010.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_validation_exit_code(tmp_path):
    assert cli.main(["run", "--config", write(tmp_path, "phys.beta = 0\n")]) == 2
    assert cli.main(["run", "--config", write(tmp_path, "grid.nx 4\n")]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_solver_failure_exit_code_flushes_snapshot(tmp_path):
    cfg = write(tmp_path, "grid.nx = 16\ngrid.ny = 16\ngrid.bc = periodic\nic.v_kind = shear\nic.v_amplitude = 10\ntime.dt = 0.01\ntime.t_end = 0.1\n")
    out = tmp_path / "out"
    assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 3
    assert (out / "phi_000000.bin").exists()


def test_check_thermo(capsys):
    assert cli.main(["check-thermo", "--samples", "2000", "--seed", "4"]) == 0
    assert "max |cancel_residual|" in capsys.readouterr().out


def test_sweep_eps_reports_offending_pair(tmp_path, monkeypatch, capsys):
    bad = V.EpsilonResult([0.1, 0.05], [1.0, 2.0], [0.0, 0.0], -1.0, False, (0.1, 0.05))
    monkeypatch.setattr(V, "epsilon_study", lambda cfg: bad)
    cfg = write(tmp_path, "grid.nx = 8\ngrid.ny = 8\n")
    assert cli.main(["sweep-eps", "--config", cfg, "--eps", "0.1,0.05", "--out", str(tmp_path)]) == 4
    assert "eps=0.1 to eps=0.05" in capsys.readouterr().err


def test_sweep_eps_small(tmp_path):
    cfg = write(tmp_path, "grid.nx = 8\ngrid.ny = 8\nic.amplitude = 0.1\ntime.t_end = 0.02\n")
    assert cli.main(["sweep-eps", "--config", cfg, "--eps", "0.1,0.05,0.025", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "eps_sweep.csv").read_text().startswith("eps,phi_diff")


def test_verify_mms_rejects_walls(tmp_path):
    cfg = write(tmp_path, "grid.nx = 8\ngrid.ny = 8\n")
    assert cli.main(["verify-mms", "--config", cfg, "--levels", "3", "--out", str(tmp_path)]) == 2
