"""First-order semi-implicit time stepping for the coupled system.

One step:

1. Phase/potential solve.  With the transport ``a = advect(v^n, phi^n)``
   and the stabilisation constant ``S``::

       (beta/dt + S) phi' - kappa Lap phi' - mu'
           = (beta/dt + S) phi^n - beta a - mu_loc(phi^n, v^n)
       (eps/dt) mu' - gamma Lap mu' + phi'/dt
           = (eps/dt) mu^n + phi^n/dt - a

   Both operators are polynomials in the same Laplacian, so the block
   system decouples mode by mode in its eigenbasis (``spectral``); the
   ``cg`` path instead runs CG on the Schur complement in ``phi'``.
   The system stays nonsingular at ``eps = 0``: the constant mode fixes
   ``mean(phi')`` from the second row and ``mean(mu')`` from the first.

2. Momentum predictor/projection.  Explicit forces (convection, capillary,
   constitutive, body force) are projected first, then the viscous
   Helmholtz problem is solved and the result projected again.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

from . import grid as G
from . import linsolve as LS
from . import model as M
from .diagnostics import initial_record, make_record
from .errors import BlowUp, CFLViolation, NonConvergence

BLOWUP_LIMIT = 1e8
CFL_NUMBER = 0.4


@dataclass
class State:
    grid: G.Grid
    phi: np.ndarray
    vel: G.VectorField
    p: np.ndarray
    mu: np.ndarray
    t: float = 0.0
    step: int = 0

    def copy(self) -> "State":
        return State(self.grid, self.phi.copy(), self.vel.copy(), self.p.copy(), self.mu.copy(), self.t, self.step)

    def check_finite(self) -> None:
        for name, arr in self.fields():
            m = float(np.max(np.abs(arr)))
            if not np.isfinite(m) or m > BLOWUP_LIMIT:
                raise BlowUp(name, m, self.t)

    def fields(self):
        return [("phi", self.phi), ("mu", self.mu), ("p", self.p), ("v_x", self.vel.u), ("v_y", self.vel.v)]


@dataclass
class StepReport:
    phi_dot_material: np.ndarray
    iterations: int = 0
    stab: float = 0.0
    residual: float = 0.0


class Sources(NamedTuple):
    """Extra right-hand sides ``(grid, t) -> array`` added at the new time
    level (used by manufactured-solution studies).

    ``potential`` enters the row defining ``mu``; ``transport`` the
    conservation law for ``phi``.
    """

    potential: Callable | None = None
    transport: Callable | None = None


def new_state(grid: G.Grid, phi0: np.ndarray, vel0: G.VectorField | None, params: M.SimParams) -> State:
    """Assemble the initial state; ``mu`` comes from :func:`init_mu0`."""
    vel0 = grid.vector() if vel0 is None else G.enforce_bc(grid, vel0.copy())
    G.check_vector(grid, vel0)
    mu0 = init_mu0(grid, phi0, vel0, params)
    return State(grid, np.array(phi0, dtype=float), vel0, grid.scalar(), mu0, 0.0, 0)


def init_mu0(grid: G.Grid, phi0: np.ndarray, vel0: G.VectorField, params: M.SimParams) -> np.ndarray:
    """Initial potential: ``(I - beta gamma Lap) mu0 = -kappa Lap phi0 + mu_loc(phi0, v0)``."""
    rhs = -params.kappa * G.laplacian(grid, phi0) + M.local_potential(phi0, G.speed_squared(vel0), params)
    return LS.solve_helmholtz(grid, 1.0, params.beta * params.gamma, rhs, params.solver)


def check_cfl(state: State, params: M.SimParams) -> None:
    vmax = max(state.vel.max_abs(), 1e-12)
    limit = CFL_NUMBER * min(state.grid.dx, state.grid.dy) / vmax
    if params.dt > limit:
        raise CFLViolation(params.dt, limit)


def _coupled_residual(grid, c1, params, phi, mu, r1, r2):
    dt, eps = params.dt, params.epsilon
    e1 = c1 * phi - params.kappa * G.laplacian(grid, phi) - mu - r1
    e2 = phi / dt + (eps / dt) * mu - params.gamma * G.laplacian(grid, mu) - r2
    num = np.sqrt(np.sum(e1 * e1) + np.sum(e2 * e2))
    den = np.sqrt(np.sum(r1 * r1) + np.sum(r2 * r2))
    return num / den if den > 0 else num


def _solve_spectral(grid, c1, params, r1, r2):
    dt, eps = params.dt, params.epsilon
    basis = LS.scalar_basis(grid)
    lam = basis.eigen
    h1 = basis.forward(r1)
    h2 = basis.forward(r2)
    a11 = c1 + params.kappa * lam
    a22 = eps / dt + params.gamma * lam
    det = a11 * a22 + 1.0 / dt
    phi = basis.backward((a22 * h1 + h2) / det)
    mu = basis.backward((a11 * h2 - h1 / dt) / det)
    return phi, mu, 1


def _solve_schur_cg(grid, c1, params, r1, r2):
    dt, eps, cfg = params.dt, params.epsilon, params.solver
    inner_cfg = replace(cfg, method="cg", rel_tol=max(cfg.rel_tol * 1e-2, 1e-15))
    count = LS.CGInfo()

    def a_op(x):
        return c1 * x - params.kappa * G.laplacian(grid, x)

    if eps > 0:
        def binv(x):
            return LS.solve_helmholtz(grid, eps / dt, params.gamma, x, inner_cfg, count)

        rhs = r1 + binv(r2)
        phi, info = LS.cg(lambda x: a_op(x) + binv(x) / dt, rhs, cfg.rel_tol * 1e-1, cfg.iteration_cap(rhs.size))
        mu = binv(r2 - phi / dt)
        return phi, mu, info.iterations + count.iterations

    def binv0(x):
        return LS.solve_helmholtz(grid, 0.0, params.gamma, x - x.mean(), inner_cfg, count)

    phi_mean = dt * float(r2.mean())
    rhs = (r1 - r1.mean()) + binv0(r2)
    tilde, info = LS.cg(
        lambda x: a_op(x) + binv0(x) / dt,
        rhs,
        cfg.rel_tol * 1e-1,
        cfg.iteration_cap(rhs.size),
        project_mean=True,
    )
    phi = tilde + phi_mean
    mu = binv0(r2 - phi / dt) + (c1 * phi_mean - float(r1.mean()))
    return phi, mu, info.iterations + count.iterations


def step_phi_mu(state: State, params: M.SimParams, sources: Sources | None = None):
    """Advance ``(phi, mu)`` one step; returns ``(phi_new, mu_new, report)``."""
    grid, dt = state.grid, params.dt
    phi, mu, vel = state.phi, state.mu, state.vel
    adv = G.advect(grid, vel, phi)
    stab = params.stabilization(phi)
    c1 = params.beta / dt + stab
    r1 = c1 * phi - params.beta * adv - M.local_potential(phi, G.speed_squared(vel), params)
    r2 = (params.epsilon / dt) * mu + phi / dt - adv
    t_new = state.t + dt
    if sources is not None and sources.potential is not None:
        r1 = r1 + sources.potential(grid, t_new)
    if sources is not None and sources.transport is not None:
        r2 = r2 + sources.transport(grid, t_new)
    if params.solver.method == "spectral":
        phi_new, mu_new, iters = _solve_spectral(grid, c1, params, r1, r2)
    else:
        phi_new, mu_new, iters = _solve_schur_cg(grid, c1, params, r1, r2)
    res = _coupled_residual(grid, c1, params, phi_new, mu_new, r1, r2)
    if res > params.solver.rel_tol:
        raise NonConvergence(iters, res)
    for name, arr in (("phi", phi_new), ("mu", mu_new)):
        m = float(np.max(np.abs(arr)))
        if not np.isfinite(m) or m > BLOWUP_LIMIT:
            raise BlowUp(name, m, t_new)
    report = StepReport((phi_new - phi) / dt + adv, iters, stab, res)
    return phi_new, mu_new, report


def step_momentum(
    state: State, phi_new: np.ndarray, mu_new: np.ndarray, report: StepReport, params: M.SimParams
) -> tuple[G.VectorField, np.ndarray]:
    """Projection step for the velocity; returns ``(v_new, p_new)``.

    ``mu_new`` is accepted for interface symmetry; the capillary force in
    gradient-equivalent form does not need it.
    """
    grid, dt, cfg = state.grid, params.dt, params.solver
    vel = state.vel
    force = (
        M.capillary_force(grid, phi_new, params)
        + M.constitutive_force(grid, phi_new, report.phi_dot_material, vel, params)
        + params.force(grid, state.t + dt)
        - G.advect_vector(grid, vel)
    )
    G.enforce_bc(grid, force)
    force, q_force = LS.project(grid, force, cfg)
    info = LS.CGInfo()
    vstar = LS.solve_velocity_helmholtz(grid, 1.0 / dt, params.nu, vel * (1.0 / dt) + force, cfg, info)
    q = LS.solve_pressure_poisson(
        grid, G.divergence(grid, vstar) / dt, cfg, info, LS.divergence_scale(grid, vstar) / dt
    )
    vel_new = G.enforce_bc(grid, vstar - G.gradient(grid, q) * dt)
    report.iterations += info.iterations
    p_new = q_force + q
    p_new -= p_new.mean()
    return vel_new, p_new


def advance(
    state: State,
    params: M.SimParams,
    prev_record=None,
    sources: Sources | None = None,
):
    """One full step.  Returns ``(new_state, DiagnosticsRecord)``.

    ``prev_record`` carries the running a-priori accumulators; ``None``
    starts them from zero.
    """
    check_cfl(state, params)
    phi_new, mu_new, report = step_phi_mu(state, params, sources)
    vel_new, p_new = step_momentum(state, phi_new, mu_new, report, params)
    new = State(state.grid, phi_new, vel_new, p_new, mu_new, state.t + params.dt, state.step + 1)
    new.check_finite()
    record = make_record(state, new, report, params, prev_record)
    return new, record


def run(
    state: State,
    params: M.SimParams,
    n_steps: int,
    prev_record=None,
    sources: Sources | None = None,
    callback: Callable | None = None,
):
    """Advance ``n_steps`` times; returns the final state and all records.

    ``callback(state, record)`` is invoked after every step.
    """
    records = []
    rec = prev_record if prev_record is not None else initial_record(state, params)
    for _ in range(n_steps):
        state, rec = advance(state, params, rec, sources)
        records.append(rec)
        if callback is not None:
            callback(state, rec)
    return state, records
