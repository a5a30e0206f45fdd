import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from phasemix import grid as G
from phasemix import linsolve as LS
from phasemix import model as M
from phasemix import initial as IC
from phasemix.errors import ValidationError

from conftest import random_vector

seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize(
    "kw",
    [
        {"beta": 0.0},
        {"gamma": -1.0},
        {"kappa": 0.0},
        {"nu": 0.0},
        {"lam": -0.1},
        {"u": -1.5},
        {"epsilon": 1.0},
        {"dt": 0.0},
        {"stab": -1.0},
        {"kappa": float("nan")},
    ],
)
def test_params_validation(kw):
    with pytest.raises(ValidationError) as exc:
        M.SimParams(**kw)
    assert exc.value.key.startswith(("phys.", "time."))


def test_auto_stabilization():
    p = M.SimParams(u=-1.0)
    assert p.stabilization(np.array([0.0])) == 2.0
    assert p.stabilization(np.array([1.0, -2.0])) == pytest.approx(2 * 11.0)
    assert M.SimParams(stab=0.5).stabilization(np.array([5.0])) == 0.5


def test_free_energy_derivative_is_local_potential():
    phi, u, lam, v2 = sp.symbols("phi u lam v2")
    psi = u * phi**2 / 2 + phi**4 / 4 + lam * v2 * phi**2 / 2
    dpsi = sp.diff(psi, phi)
    p = M.SimParams(u=-0.7, lam=0.3)
    for ph, s in [(0.4, 1.2), (-1.1, 0.0), (0.0, 3.0)]:
        expected = float(dpsi.subs({phi: ph, u: p.u, lam: p.lam, v2: s}))
        assert M.local_potential(ph, s, p) == pytest.approx(expected, rel=1e-14)
    assert M.potential_density(0.5, p) == pytest.approx(-0.7 * 0.125 + 0.0625 / 4)


def test_chemical_potential_pointwise_oracle():
    g = G.Grid(16, 16)
    p = M.SimParams(kappa=0.01, u=-1.0, lam=0.0, beta=0.2)
    phi = IC.tanh_stripe(g, 1.0, 0.05)
    # independent stencil: explicit neighbour sums with reflected ghosts
    ext = np.pad(phi, 1, mode="symmetric")
    lap = (ext[1:-1, 2:] + ext[1:-1, :-2] - 2 * phi) / g.dx**2 + (ext[2:, 1:-1] + ext[:-2, 1:-1] - 2 * phi) / g.dy**2
    mu = M.chemical_potential(g, phi, np.zeros_like(phi), g.vector(), p)
    np.testing.assert_allclose(mu, -p.kappa * lap + phi**3 + p.u * phi, atol=1e-12)


def test_energy_offset_identity(bc):
    g = G.Grid(10, 8, 1.0, 0.8, bc)
    rng = np.random.default_rng(0)
    p = M.SimParams(u=-0.6, epsilon=0.2)
    phi, mu = rng.standard_normal((2, *g.shape))
    w = random_vector(g, rng)
    diff = M.total_energy(g, phi, w, mu, p) - M.free_energy(g, phi, w, mu, p)
    assert diff == pytest.approx(p.u**2 * g.area / 4, rel=1e-12)


def test_uniform_state_energy():
    g = G.Grid(8, 8)
    p = M.SimParams(u=-1.0)
    assert M.total_energy(g, g.scalar(1.0), g.vector(), g.scalar(), p) == 0.0
    assert M.total_energy(g, g.scalar(0.0), g.vector(), g.scalar(), p) == pytest.approx(0.25)


@given(seeds)
def test_capillary_work_identity(seed):
    # <F, w> = -kappa <Lap phi, w.grad phi> for the face force F
    rng = np.random.default_rng(seed)
    p = M.SimParams(kappa=0.3)
    for bc in ("paper", "periodic"):
        g = G.Grid(9, 7, 1.0, 0.8, bc)
        phi = rng.standard_normal(g.shape)
        w, _ = LS.project(g, random_vector(g, rng))
        lhs = G.inner_faces(g, M.capillary_force(g, phi, p), w)
        rhs = -p.kappa * G.inner(g, G.laplacian(g, phi), G.advect(g, w, phi))
        assert lhs == pytest.approx(rhs, abs=1e-10)


@given(seeds)
def test_constitutive_work_matches_potential_term(seed):
    # <lam phi phidot v, v> = <phidot, lam |v|^2 phi>
    rng = np.random.default_rng(seed)
    p = M.SimParams(lam=0.7)
    for bc in ("paper", "periodic"):
        g = G.Grid(6, 6, bc=bc)
        phi, phidot = rng.standard_normal((2, *g.shape))
        w = random_vector(g, rng)
        lhs = G.inner_faces(g, M.constitutive_force(g, phi, phidot, w, p), w)
        rhs = G.inner(g, phidot, p.lam * G.speed_squared(w) * phi)
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_capillary_force_vanishes_for_uniform_phase():
    g = G.Grid(8, 8)
    assert M.capillary_force(g, g.scalar(0.4), M.SimParams()).max_abs() == 0.0


def test_dissipation_nonnegative_and_zero_at_rest():
    g = G.Grid(8, 8)
    p = M.SimParams()
    assert M.dissipation_rate(g, g.vector(), g.scalar(1.0), g.scalar(), p) == 0.0
    rng = np.random.default_rng(1)
    d = M.dissipation_rate(g, random_vector(g, rng), rng.standard_normal(g.shape), rng.standard_normal(g.shape), p)
    assert d > 0


def test_thermo_residual_sympy():
    # the velocity part of the local potential times phidot is cancelled by d.v
    phi, phidot, v1, v2, lam, u = sp.symbols("phi phidot v1 v2 lam u")
    psi = u * phi**2 / 2 + phi**4 / 4
    mu_loc = phi**3 + u * phi + lam * (v1**2 + v2**2) * phi
    d = [lam * phi * phidot * v1, lam * phi * phidot * v2]
    expr = (sp.diff(psi, phi) - mu_loc) * phidot + d[0] * v1 + d[1] * v2
    assert sp.simplify(expr) == 0


def test_thermo_residual_samples():
    rng = np.random.default_rng(0)
    p = M.SimParams(lam=0.5, beta=0.05)
    for _ in range(500):
        s = M.ProcessSample.random(rng)
        res, prod, scale = M.thermo_consistency_residual(s, p)
        assert abs(res) <= 1e-13 * scale
        assert prod >= 0


def test_process_sample_validation():
    with pytest.raises(ValueError):
        M.ProcessSample(0.0, 0.0, np.zeros(2), np.zeros(2), np.array([[1.0, 0.0], [0.0, 1.0]]), np.zeros(2))
    with pytest.raises(ValueError):
        M.ProcessSample(0.0, 0.0, np.zeros(2), np.zeros(2), np.array([[0.0, 1.0], [0.0, 0.0]]), np.zeros(2))


def test_body_forces():
    g = G.Grid(8, 8)
    c = M.ConstantForce(1.0, -2.0)(g, 0.0)
    assert np.all(c.u == 1.0) and np.all(c.v == -2.0)
    t = M.TrigForce(1.0, 0.5, 1, np.pi)(g, 1.0)
    _, y = g.x_faces()
    np.testing.assert_allclose(t.u, -np.sin(2 * np.pi * y))
    assert M.zero_force(g, 0.0).max_abs() == 0.0
