from dataclasses import replace

import numpy as np
import pytest
import sympy as sp

from phasemix import grid as G
from phasemix import initial as IC
from phasemix import model as M
from phasemix import verify as V
from phasemix.config import RunConfig
from phasemix.errors import ConfigError

PERIODIC16 = "grid.nx = 16\ngrid.ny = 16\ngrid.bc = periodic\n"


def sympy_sources(p):
    """Residuals of the model equations for the trig family, derived symbolically."""
    x, y, t = sp.symbols("x y t")
    k = 2 * sp.pi
    phi = sp.Rational(1, 2) * sp.sin(k * x) * sp.sin(k * y) * sp.cos(t)
    mu = sp.Rational(3, 10) * sp.cos(k * x) * sp.sin(k * y) * sp.exp(-t)
    w = sp.Rational(1, 5) * sp.cos(t)
    u = w * sp.sin(k * x) * sp.cos(k * y)
    v = -w * sp.cos(k * x) * sp.sin(k * y)

    def lap(f):
        return sp.diff(f, x, 2) + sp.diff(f, y, 2)

    mat = sp.diff(phi, t) + u * sp.diff(phi, x) + v * sp.diff(phi, y)
    s_pot = p.beta * mat - p.kappa * lap(phi) + phi**3 + p.u * phi + p.lam * (u**2 + v**2) * phi - mu
    s_tr = mat - p.gamma * lap(mu) + p.epsilon * sp.diff(mu, t)
    fx = sp.diff(u, t) - p.nu * lap(u) + u * sp.diff(u, x) + v * sp.diff(u, y) + p.kappa * lap(phi) * sp.diff(phi, x) - p.lam * phi * mat * u
    fy = sp.diff(v, t) - p.nu * lap(v) + u * sp.diff(v, x) + v * sp.diff(v, y) + p.kappa * lap(phi) * sp.diff(phi, y) - p.lam * phi * mat * v
    div = sp.simplify(sp.diff(u, x) + sp.diff(v, y))
    return [sp.lambdify((x, y, t), e, "numpy") for e in (s_pot, s_tr, fx, fy)], div


def test_trig_sources_match_symbolic_derivation():
    p = M.SimParams(kappa=0.01, beta=0.3, gamma=0.7, nu=0.2, lam=0.4, u=-0.5, epsilon=0.1)
    (s_pot, s_tr, fx, fy), div = sympy_sources(p)
    assert div == 0
    prob = V.ManufacturedProblem(V.TrigFamily(), p)
    g = G.Grid(12, 12, bc="periodic")
    t = 0.37
    x, y = g.centers()
    np.testing.assert_allclose(prob.potential_source(g, t), s_pot(x, y, t), atol=1e-12)
    np.testing.assert_allclose(prob.transport_source(g, t), s_tr(x, y, t), atol=1e-12)
    f = prob.force(g, t)
    np.testing.assert_allclose(f.u, fx(*g.x_faces(), t), atol=1e-12)
    np.testing.assert_allclose(f.v, fy(*g.y_faces(), t), atol=1e-12)


def test_constant_family_is_exact_on_every_level():
    cfg = V.StudyConfig(run=RunConfig.from_text("grid.nx = 8\ngrid.ny = 8\ngrid.bc = periodic\n"))
    fam = V.ConstantFamily(0.3, cfg.run["phys.u"])
    table = V.mms_spatial(cfg, fam, t_end=0.01)
    for errs in table.errors.values():
        assert max(errs) < 1e-13


class Diverging(V.TrigFamily):
    def divergence(self, x, y, t):
        return np.cos(self.kx * x)


def test_non_solenoidal_velocity_rejected():
    prob = V.ManufacturedProblem(Diverging(), M.SimParams())
    with pytest.raises(ConfigError):
        prob.initial_state(G.Grid(8, 8, bc="periodic"))


def test_mms_requires_periodic():
    with pytest.raises(ConfigError):
        V.mms_spatial(V.StudyConfig(run=RunConfig.from_text("grid.nx = 8\ngrid.ny = 8\n")))


@pytest.mark.parametrize(
    "kw", [{"levels": 2}, {"eps_list": (0.1, 0.05)}, {"eps_list": (0.05, 0.1, 0.0)}, {"delta": 0.0}, {"refinement": 1}]
)
def test_study_config_invariants(kw):
    with pytest.raises(ConfigError):
        V.StudyConfig(**kw)


def test_observed_orders_and_trapezoid():
    assert V.observed_orders([0.4, 0.2, 0.1], [16.0, 4.0, 1.0]) == pytest.approx([2.0, 2.0])
    t = np.linspace(0.0, 1.0, 11)
    assert V.trapezoid_l2(t, np.ones_like(t) * 4.0) == pytest.approx(2.0)


def test_mms_tables_deterministic():
    cfg = V.StudyConfig(run=RunConfig.from_text(PERIODIC16))
    a = V.mms_temporal(cfg, t_end=0.02, dt0=0.01)
    b = V.mms_temporal(cfg, t_end=0.02, dt0=0.01)
    assert a.to_csv() == b.to_csv()
    assert len(a.rows()) == 3 and a.header()[0] == "dt"


def test_epsilon_study_uniform_data_is_zero():
    run = RunConfig.from_text("grid.nx = 8\ngrid.ny = 8\nic.amplitude = 0\nic.mean = 0.4\ntime.t_end = 0.02\n")
    res = V.epsilon_study(V.StudyConfig(run=run, sample_every=5))
    assert max(res.phi_diff) < 1e-12 and max(res.v_diff) < 1e-14


def test_epsilon_study_monotone_small():
    run = RunConfig.from_text("grid.nx = 16\ngrid.ny = 16\nic.amplitude = 0.1\ntime.t_end = 0.05\n")
    res = V.epsilon_study(V.StudyConfig(run=run))
    assert res.monotone and res.offending is None
    assert res.phi_diff[0] > res.phi_diff[1] > res.phi_diff[2] > 0
    assert "monotone" in res.summary() and res.to_csv().startswith("eps,")


def _pair(run_text, delta, steps, seed=3):
    run = RunConfig.from_text(run_text)
    g, p = run.grid(), run.params()
    phi0 = run.initial_phi(g)
    base = V.new_state(g, phi0, None, p)
    return V._difference_series(g, p, base, phi0, None, IC.unit_noise(g, seed), delta, steps)


def test_zero_perturbation_gives_zero_difference():
    _, r = _pair("grid.nx = 16\ngrid.ny = 16\n", 0.0, 10)
    assert np.all(r == 0.0)


def test_perturbation_decays_in_convex_well():
    # u >= 0: convex bulk potential, every mode damped
    _, r = _pair("grid.nx = 16\ngrid.ny = 16\nphys.u = 0.5\nic.amplitude = 0.3\n", 1e-3, 40)
    assert np.all(np.diff(r) <= 1e-15 * r[0])


def test_growth_fit_envelope():
    t = np.linspace(0, 1, 21)
    fit = V._growth_fit(1e-3, t, np.exp(-2 * t) * 1e-6)
    assert fit.rate_fit == pytest.approx(-2.0) and fit.envelope_rate == 0.0 and fit.within_envelope
    bumped = np.exp(-2 * t) * 1e-6
    bumped[-1] *= 10
    assert not V._growth_fit(1e-3, t, bumped).within_envelope
