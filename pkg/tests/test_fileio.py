import io
import json

import numpy as np
import pytest

from phasemix import fileio as F
from phasemix import grid as G
from phasemix import initial as IC
from phasemix import model as M
from phasemix import stepper as S
from phasemix.diagnostics import SERIES_COLUMNS
from phasemix.errors import FormatError, IoError


@pytest.fixture
def state():
    g = G.Grid(12, 10, 1.0, 0.8, "periodic")
    p = M.SimParams(lam=0.5)
    st = S.new_state(g, IC.noise_phi(g, 0.0, 0.1, 3), IC.taylor_green(g, 0.3), p)
    st, _ = S.run(st, p, 3)
    return st, p


def test_snapshot_roundtrip_bit_exact(tmp_path, state):
    st, _ = state
    F.write_state(st, tmp_path)
    for name, arr in (("phi", st.phi), ("mu", st.mu), ("p", st.p), ("v_x", st.vel.u), ("v_y", st.vel.v)):
        back, meta = F.read_snapshot(tmp_path / f"{name}_{st.step:06d}.bin", st.grid)
        assert back.tobytes() == arr.tobytes()
        assert set(meta) == set(F.SIDECAR_KEYS) and meta["field"] == name and meta["time"] == st.t


def test_payload_is_raw_little_endian(tmp_path):
    g = G.Grid(4, 4)
    arr = np.arange(16, dtype=float).reshape(4, 4)
    F.write_snapshot(tmp_path / "phi_000000", "phi", arr, g, 0.0, "cell_center")
    raw = (tmp_path / "phi_000000.bin").read_bytes()
    assert raw == arr.astype("<f8").tobytes() and len(raw) == 128
    meta = json.loads((tmp_path / "phi_000000.json").read_text())
    assert meta == {"field": "phi", "nx": 4, "ny": 4, "lx": 1.0, "ly": 1.0, "time": 0.0, "bc": "paper", "layout": "cell_center"}


def test_truncated_payload(tmp_path):
    g = G.Grid(4, 4)
    F.write_snapshot(tmp_path / "phi_000000", "phi", g.scalar(1.0), g, 0.0, "cell_center")
    path = tmp_path / "phi_000000.bin"
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(FormatError, match="expected 128 bytes, found 120"):
        F.read_snapshot(path)


def test_sidecar_grid_mismatch(tmp_path):
    g = G.Grid(4, 4)
    F.write_snapshot(tmp_path / "phi_000000", "phi", g.scalar(1.0), g, 0.0, "cell_center")
    with pytest.raises(FormatError, match="nx"):
        F.read_snapshot(tmp_path / "phi_000000", G.Grid(5, 4))
    side = tmp_path / "phi_000000.json"
    meta = json.loads(side.read_text())
    meta["nx"] = 8
    side.write_text(json.dumps(meta))
    with pytest.raises(FormatError):
        F.read_snapshot(tmp_path / "phi_000000")


def test_missing_snapshot(tmp_path):
    with pytest.raises(IoError):
        F.read_snapshot(tmp_path / "nothing_000000")


def test_series_header_once_and_precision(state):
    st, p = state
    _, recs = S.run(st, p, 3)
    buf = io.StringIO()
    for r in recs:
        F.write_series(r, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(SERIES_COLUMNS)
    assert lines[0] == "t,mass,energy,dissipation,budget_residual,div_max,l2_v,h1_phi,h2_phi,l2_grad_mu,acc62,acc63,acc64"
    assert len(lines) == 4 and sum(l.startswith("t,") for l in lines) == 1
    assert [float(x) for x in lines[1].split(",")] == recs[0].row()


def test_stationary_series_constant(tmp_path):
    g = G.Grid(8, 8)
    p = M.SimParams()
    st = S.new_state(g, g.scalar(0.2), None, p)
    _, recs = S.run(st, p, 5)
    with open(tmp_path / "s.csv", "w") as fh:
        w = F.SeriesWriter(fh)
        for r in recs:
            w.write(r)
    data = F.read_series(tmp_path / "s.csv")
    assert np.ptp(data.mass) < 1e-15 and np.ptp(data.energy) < 1e-15


def test_budget_column_recomputed_from_snapshots(tmp_path, state):
    st, p = state
    new, rec = S.advance(st, p)
    F.write_state(st, tmp_path)
    F.write_state(new, tmp_path)
    buf = io.StringIO()
    F.write_series(rec, buf)
    stored = float(buf.getvalue().splitlines()[1].split(",")[SERIES_COLUMNS.index("budget_residual")])
    g = st.grid

    def load(step):
        a = {n: F.read_snapshot(tmp_path / f"{n}_{step:06d}", g)[0] for n in ("phi", "mu", "v_x", "v_y")}
        return a["phi"], a["mu"], G.VectorField(a["v_x"], a["v_y"])

    phi0, mu0, v0 = load(st.step)
    phi1, mu1, v1 = load(new.step)
    pdm = (phi1 - phi0) / p.dt + G.advect(g, v0, phi0)
    again = (
        M.total_energy(g, phi1, v1, mu1, p)
        - M.total_energy(g, phi0, v0, mu0, p)
        + p.dt * M.dissipation_rate(g, v1, mu1, pdm, p)
    )
    assert stored == pytest.approx(again, rel=1e-12, abs=1e-18)


def test_checkpoint_restart_reproduces_rows(tmp_path, state):
    st, p = state
    rec0 = None
    st, recs = S.run(st, p, 2)
    F.write_checkpoint(st, recs[-1], tmp_path)
    _, cont = S.run(st, p, 3, recs[-1])
    back, rec = F.read_checkpoint(tmp_path, st.step, st.grid)
    assert rec == recs[-1]
    _, again = S.run(back, p, 3, rec)
    for a, b in zip(cont, again):
        np.testing.assert_allclose(a.row(), b.row(), rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("value,level", [(0.0, 128), (1.2, 255), (5.0, 255), (-1.2, 0), (-2.0, 0), (0.6, 191)])
def test_pgm_levels(value, level):
    assert F.pgm_levels(np.array([[value]]))[0, 0] == level


def test_pgm_file_orientation(tmp_path):
    g = G.Grid(5, 4)
    phi = g.scalar(-1.2)
    phi[-1, :] = 1.2  # largest y
    F.render_pgm(phi, tmp_path / "a.pgm")
    raw = (tmp_path / "a.pgm").read_bytes()
    assert raw.startswith(b"P5\n5 4\n255\n")
    img = F.read_pgm(tmp_path / "a.pgm")
    assert np.all(img[0] == 255) and np.all(img[1:] == 0)
