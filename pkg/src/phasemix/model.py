"""Constitutive relations of the mixture: potentials, forces, energy and
dissipation, plus the pointwise thermodynamic-consistency check.

Free energy density: ``kappa/2 |grad phi|^2 + u phi^2/2 + phi^4/4``.
The velocity enters the local chemical potential through ``lam |v|^2 phi``,
balanced in the momentum equation by the body force ``lam phi phidot v``.
Density is fixed to one throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import grid as G
from .errors import ValidationError
from .linsolve import SolverConfig

# ``force(grid, t) -> VectorField``
BodyForce = Callable[[G.Grid, float], G.VectorField]


def zero_force(grid: G.Grid, t: float) -> G.VectorField:
    return grid.vector()


@dataclass(frozen=True)
class ConstantForce:
    fx: float = 0.0
    fy: float = 0.0

    def __call__(self, grid: G.Grid, t: float) -> G.VectorField:
        w = grid.vector()
        w.u[:] = self.fx
        w.v[:] = self.fy
        return w


@dataclass(frozen=True)
class TrigForce:
    """``(ax sin(2 pi m y/ly), ay sin(2 pi m x/lx)) cos(omega t)`` on faces."""

    amp_x: float = 0.0
    amp_y: float = 0.0
    mode: int = 1
    omega: float = 0.0

    def __call__(self, grid: G.Grid, t: float) -> G.VectorField:
        w = grid.vector()
        c = np.cos(self.omega * t)
        _, y = grid.x_faces()
        x, _ = grid.y_faces()
        w.u[:] = self.amp_x * np.sin(2 * np.pi * self.mode * y / grid.ly) * c
        w.v[:] = self.amp_y * np.sin(2 * np.pi * self.mode * x / grid.lx) * c
        return w


@dataclass(frozen=True)
class SimParams:
    """Physical and numerical constants of one simulation.

    ``stab`` is the stabilisation constant S; ``None`` selects the automatic
    rule ``2 max(1, max |3 phi^2 + u|)`` evaluated every step.
    """

    kappa: float = 1e-3
    beta: float = 1.0
    gamma: float = 1.0
    nu: float = 0.1
    lam: float = 0.0
    u: float = -1.0
    epsilon: float = 0.0
    dt: float = 1e-3
    stab: float | None = None
    force: BodyForce = zero_force
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        checks = [
            ("phys.kappa", self.kappa, self.kappa > 0, "must be > 0"),
            ("phys.beta", self.beta, self.beta > 0, "must be > 0 for the dissipation inequality"),
            ("phys.gamma", self.gamma, self.gamma > 0, "must be > 0 for the dissipation inequality"),
            ("phys.nu", self.nu, self.nu > 0, "must be > 0"),
            ("phys.lambda", self.lam, self.lam >= 0, "must be >= 0"),
            ("phys.u", self.u, self.u >= -1, "must be >= -1"),
            ("phys.epsilon", self.epsilon, 0 <= self.epsilon < 1, "must lie in [0, 1)"),
            ("time.dt", self.dt, self.dt > 0, "must be > 0"),
            ("phys.stab_S", self.stab, self.stab is None or self.stab >= 0, "must be >= 0"),
        ]
        for key, value, ok, msg in checks:
            if not ok:
                raise ValidationError(key, msg)
            if value is not None and not np.isfinite(value):
                raise ValidationError(key, "must be finite")

    @property
    def rho(self) -> float:
        return 1.0

    def stabilization(self, phi: np.ndarray) -> float:
        if self.stab is not None:
            return self.stab
        return 2.0 * max(1.0, float(np.max(np.abs(3.0 * phi**2 + self.u))))


def local_potential(phi, speed_sq, p: SimParams):
    """``phi^3 + u phi + lam |v|^2 phi``; works on scalars or arrays.

    ``speed_sq`` is ``|v|^2`` (pass ``np.dot(v, v)`` for a point sample).
    """
    return phi**3 + p.u * phi + p.lam * speed_sq * phi


def potential_density(phi, p: SimParams):
    """Bulk energy density ``u G(phi) + H(phi)`` with G = phi^2/2, H = phi^4/4."""
    return 0.5 * p.u * phi**2 + 0.25 * phi**4


def chemical_potential(
    grid: G.Grid, phi: np.ndarray, phi_dot: np.ndarray, vel: G.VectorField, p: SimParams
) -> np.ndarray:
    return (
        -p.kappa * G.laplacian(grid, phi)
        + local_potential(phi, G.speed_squared(vel), p)
        + p.beta * phi_dot
    )


def capillary_force(grid: G.Grid, phi: np.ndarray, p: SimParams) -> G.VectorField:
    """Face force ``-kappa Lap(phi) grad(phi)``.

    Differs from ``-kappa div(grad phi (x) grad phi)`` by the gradient
    ``kappa/2 grad |grad phi|^2``, which the projection removes.
    """
    lap = G.face_average(grid, G.laplacian(grid, phi))
    g = G.gradient(grid, phi)
    return G.VectorField(-p.kappa * lap.u * g.u, -p.kappa * lap.v * g.v)


def constitutive_force(
    grid: G.Grid, phi: np.ndarray, phi_dot: np.ndarray, vel: G.VectorField, p: SimParams
) -> G.VectorField:
    """``lam phi phidot v`` on faces; ``phi_dot`` is the material derivative."""
    if p.lam == 0.0:
        return grid.vector()
    s = G.face_average(grid, phi * phi_dot)
    return G.VectorField(p.lam * s.u * vel.u, p.lam * s.v * vel.v)


def total_energy(grid: G.Grid, phi, vel, mu, p: SimParams) -> float:
    """``1/2 [kappa ||grad phi||^2 + ||v||^2 + eps ||mu||^2 + 1/2 ||phi^2 + u||^2]``."""
    e = p.kappa * G.grad_norm_sq(grid, phi) + G.inner_faces(grid, vel, vel)
    if p.epsilon > 0:
        e += p.epsilon * G.inner(grid, mu, mu)
    q = phi**2 + p.u
    e += 0.5 * G.inner(grid, q, q)
    return 0.5 * e


def free_energy(grid: G.Grid, phi, vel, mu, p: SimParams) -> float:
    """Ginzburg-Landau form; equals ``total_energy - u^2 |Omega| / 4``."""
    e = 0.5 * p.kappa * G.grad_norm_sq(grid, phi) + float(np.sum(potential_density(phi, p))) * grid.cell_area
    e += 0.5 * G.inner_faces(grid, vel, vel)
    if p.epsilon > 0:
        e += 0.5 * p.epsilon * G.inner(grid, mu, mu)
    return e


def dissipation_rate(grid: G.Grid, vel, mu, phi_dot_material, p: SimParams) -> float:
    """``beta ||phidot||^2 + nu ||grad v||^2 + gamma ||grad mu||^2``."""
    return (
        p.beta * G.inner(grid, phi_dot_material, phi_dot_material)
        + p.nu * G.vector_grad_norm_sq(grid, vel)
        + p.gamma * G.grad_norm_sq(grid, mu)
    )


# --------------------------------------------------------------------------
# Pointwise thermodynamics


@dataclass(frozen=True)
class ProcessSample:
    """One point of a constitutive process (values of the state variables)."""

    phi: float
    phi_dot: float
    v: np.ndarray
    h: np.ndarray
    d_tilde: np.ndarray
    grad_mu: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d_tilde)
        if d.shape != (2, 2) or not np.allclose(d, d.T, rtol=0, atol=0):
            raise ValueError("d_tilde must be a symmetric 2x2 matrix")
        if d[0, 0] + d[1, 1] != 0.0:
            raise ValueError("d_tilde must be traceless")

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 2.0) -> "ProcessSample":
        a, b = rng.uniform(-scale, scale, 2)
        return cls(
            phi=float(rng.uniform(-1.5, 1.5)),
            phi_dot=float(rng.uniform(-scale, scale)),
            v=rng.uniform(-scale, scale, 2),
            h=rng.uniform(-scale, scale, 2),
            d_tilde=np.array([[a, b], [b, -a]]),
            grad_mu=rng.uniform(-scale, scale, 2),
        )


def thermo_consistency_residual(s: ProcessSample, p: SimParams) -> tuple[float, float, float]:
    """Reduced dissipation inequality evaluated at one sample.

    Returns ``(cancel_residual, entropy_production, scale)``.  The residual is
    ``[psi_phi - mu_loc] phidot + d . v`` and vanishes identically because
    the velocity part of ``mu_loc`` is exactly the work of ``d``; ``scale`` is
    the magnitude of the terms being cancelled, for relative comparisons.
    """
    v = np.asarray(s.v, dtype=float)
    vsq = float(v @ v)
    psi_phi = s.phi**3 + p.u * s.phi
    mu_loc = local_potential(s.phi, vsq, p)
    d = p.lam * v * s.phi * s.phi_dot
    d_dot_v = float(d @ v)
    residual = (psi_phi - mu_loc) * s.phi_dot + d_dot_v
    scale = abs(psi_phi * s.phi_dot) + abs(mu_loc * s.phi_dot) + abs(d_dot_v)
    dt = np.asarray(s.d_tilde, dtype=float)
    gm = np.asarray(s.grad_mu, dtype=float)
    production = p.beta * s.phi_dot**2 + 2.0 * p.nu * float(np.sum(dt * dt)) + p.gamma * float(gm @ gm)
    return residual, production, scale
