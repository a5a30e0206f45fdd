"""Per-step scalar functionals: conserved mass, energy budget, incompressibility,
and running a-priori accumulators with a boundedness monitor.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable

import numpy as np

from . import grid as G
from . import linsolve as LS
from . import model as M

SERIES_COLUMNS = (
    "t",
    "mass",
    "energy",
    "dissipation",
    "budget_residual",
    "div_max",
    "l2_v",
    "h1_phi",
    "h2_phi",
    "l2_grad_mu",
    "acc62",
    "acc63",
    "acc64",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    dissipation: float
    budget_residual: float
    div_max: float
    l2_v: float
    h1_phi: float
    h2_phi: float
    l2_grad_mu: float
    # time integrals of the squared-norm groups bounded by the a-priori estimates
    acc62: float
    acc63: float
    acc64: float
    # instantaneous groups of the same estimates
    inst62: float = 0.0
    inst63: float = 0.0
    inst64: float = 0.0
    step: int = 0

    def row(self) -> list[float]:
        return [getattr(self, c) for c in SERIES_COLUMNS]

    def values(self) -> dict:
        return asdict(self)


def mass(grid: G.Grid, phi: np.ndarray) -> float:
    return float(np.sum(phi)) * grid.cell_area


def divergence_max(grid: G.Grid, vel: G.VectorField) -> float:
    return float(np.max(np.abs(G.divergence(grid, vel))))


def energy(state, params: M.SimParams) -> float:
    return M.total_energy(state.grid, state.phi, state.vel, state.mu, params)


def energy_budget_residual(prev, nxt, report, params: M.SimParams) -> float:
    """Signed defect of the discrete energy identity over one step.

    ``E(next) - E(prev) + dt * dissipation - dt * <f, v_next>``.
    """
    grid, dt = nxt.grid, params.dt
    diss = M.dissipation_rate(grid, nxt.vel, nxt.mu, report.phi_dot_material, params)
    work = G.inner_faces(grid, G.enforce_bc(grid, params.force(grid, nxt.t)), nxt.vel)
    return energy(nxt, params) - energy(prev, params) + dt * diss - dt * work


def _a_norm_sq(grid, vel, cfg):
    lap = G.vector_laplacian(grid, vel)
    G.enforce_bc(grid, lap)
    pl, _ = LS.project(grid, lap, cfg)
    return G.inner_faces(grid, pl, pl)


def _instantaneous(state, params):
    grid = state.grid
    phi, vel, mu = state.phi, state.vel, state.mu
    nphi = G.norms(grid, phi)
    nv = G.norms(grid, vel)
    lap_phi = G.laplacian(grid, phi)
    inst62 = nv.l2**2 + nphi.h1**2 + params.epsilon * G.inner(grid, mu, mu)
    inst63 = params.epsilon * G.norms(grid, mu).h1 ** 2
    inst64 = G.inner(grid, lap_phi, lap_phi) + G.vector_grad_norm_sq(grid, vel)
    return nphi, nv, inst62, inst63, inst64


def initial_record(state, params: M.SimParams) -> DiagnosticsRecord:
    """Record at the start of a run: accumulators zero, no dissipation yet."""
    grid = state.grid
    nphi, nv, i62, i63, i64 = _instantaneous(state, params)
    return DiagnosticsRecord(
        t=state.t,
        mass=mass(grid, state.phi),
        energy=energy(state, params),
        dissipation=0.0,
        budget_residual=0.0,
        div_max=divergence_max(grid, state.vel),
        l2_v=nv.l2,
        h1_phi=nphi.h1,
        h2_phi=nphi.h2,
        l2_grad_mu=math.sqrt(G.grad_norm_sq(grid, state.mu)),
        acc62=0.0,
        acc63=0.0,
        acc64=0.0,
        inst62=i62,
        inst63=i63,
        inst64=i64,
        step=state.step,
    )


def make_record(prev, nxt, report, params: M.SimParams, prev_record: DiagnosticsRecord | None = None):
    """Diagnostics after the step ``prev -> nxt``.

    Time derivatives are backward differences of the two states; the
    accumulators add ``dt`` times the integrands at the new time level.
    """
    grid, dt = nxt.grid, params.dt
    nphi, nv, i62, i63, i64 = _instantaneous(nxt, params)
    grad_mu_sq = G.grad_norm_sq(grid, nxt.mu)
    phi_t = (nxt.phi - prev.phi) / dt
    vel_t = (nxt.vel - prev.vel) * (1.0 / dt)
    mu_t = (nxt.mu - prev.mu) / dt
    lap_phi = G.laplacian(grid, nxt.phi)
    h3_sq = G.inner(grid, nxt.phi, nxt.phi) + G.grad_norm_sq(grid, lap_phi)

    int62 = grad_mu_sq + nv.h1**2 + G.inner(grid, phi_t, phi_t) + nphi.h2**2
    int63 = G.norms(grid, nxt.mu).h2 ** 2 + params.epsilon * G.inner(grid, mu_t, mu_t)
    int64 = (
        G.grad_norm_sq(grid, phi_t)
        + h3_sq
        + _a_norm_sq(grid, nxt.vel, params.solver)
        + G.inner_faces(grid, vel_t, vel_t)
    )
    base = prev_record if prev_record is not None else initial_record(prev, params)
    diss = M.dissipation_rate(grid, nxt.vel, nxt.mu, report.phi_dot_material, params)
    return DiagnosticsRecord(
        t=nxt.t,
        mass=mass(grid, nxt.phi),
        energy=energy(nxt, params),
        dissipation=diss,
        budget_residual=energy_budget_residual(prev, nxt, report, params),
        div_max=divergence_max(grid, nxt.vel),
        l2_v=nv.l2,
        h1_phi=nphi.h1,
        h2_phi=nphi.h2,
        l2_grad_mu=math.sqrt(grad_mu_sq),
        acc62=base.acc62 + dt * int62,
        acc63=base.acc63 + dt * int63,
        acc64=base.acc64 + dt * int64,
        inst62=i62,
        inst63=i63,
        inst64=i64,
        step=nxt.step,
    )


@dataclass
class MonitorVerdict:
    bounded: bool
    sup: dict
    final: dict
    first_failure_t: float | None = None
    failed_quantity: str | None = None

    def summary(self) -> str:
        if self.bounded:
            return "bounded: " + ", ".join(f"{k}={v:.4g}" for k, v in self.final.items())
        return f"unbounded: {self.failed_quantity} exceeds the ceiling at t={self.first_failure_t:.4g}"


_MONITORED = [f.name for f in fields(DiagnosticsRecord) if f.name not in ("t", "step")]


def apriori_monitor(records: Iterable[DiagnosticsRecord], ceiling: float = 1e6) -> MonitorVerdict:
    """Check that every recorded quantity stays finite and below ``ceiling``.

    Reports the sup over time of the instantaneous groups and the last
    values of the accumulators.
    """
    sup = {"inst62": 0.0, "inst63": 0.0, "inst64": 0.0}
    final = {"acc62": 0.0, "acc63": 0.0, "acc64": 0.0}
    for rec in records:
        for name in _MONITORED:
            val = getattr(rec, name)
            if not math.isfinite(val) or abs(val) > ceiling:
                return MonitorVerdict(False, sup, final, rec.t, name)
        for k in sup:
            sup[k] = max(sup[k], getattr(rec, k))
        for k in final:
            final[k] = getattr(rec, k)
    return MonitorVerdict(True, sup, final)
