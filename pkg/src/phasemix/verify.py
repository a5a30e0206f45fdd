"""Verification studies.

* :func:`mms_run` -- manufactured solutions: spatial order against the exact
  fields, temporal order by self-convergence.
* :func:`epsilon_study` -- trajectories of the relaxed problem (``eps > 0``)
  against ``eps = 0``.
* :func:`perturbation_stability` -- growth of the difference of two runs
  whose initial phase fields differ by ``delta * eta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import grid as G
from . import initial as IC
from . import linsolve as LS
from . import model as M
from .config import RunConfig
from .errors import ConfigError
from .stepper import Sources, State, advance, new_state


@dataclass(frozen=True)
class StudyConfig:
    """Shared setup of the studies; ``run`` supplies grid, physics and data."""

    run: RunConfig = field(default_factory=lambda: RunConfig.from_text(""))
    levels: int = 3
    refinement: int = 2
    eps_list: tuple[float, ...] = (0.1, 0.05, 0.025, 0.0)
    delta: float = 1e-4
    sample_every: int = 10
    t_end: float | None = None  # None -> time.t_end of ``run``
    norms: tuple[str, ...] = ("phi", "v")

    def __post_init__(self):
        if self.levels < 3:
            raise ConfigError("at least 3 levels are needed to estimate an order")
        if self.refinement < 2:
            raise ConfigError("refinement factor must be >= 2")
        eps = list(self.eps_list)
        if len(eps) < 2 or eps[-1] != 0.0:
            raise ConfigError("eps list must end with 0")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ConfigError("eps list must be strictly decreasing")
        if self.sample_every < 1:
            raise ConfigError("sample_every must be >= 1")
        if not self.delta > 0:
            raise ConfigError("delta must be positive")

    @property
    def horizon(self) -> float:
        return self.run["time.t_end"] if self.t_end is None else self.t_end


def n_steps(t_end: float, dt: float) -> int:
    n = int(round(t_end / dt))
    if n < 1 or abs(n * dt - t_end) > 1e-9 * t_end:
        raise ConfigError(f"t_end={t_end} is not a multiple of dt={dt}")
    return n


def observed_orders(hs: Sequence[float], errors: Sequence[float]) -> list[float]:
    """Slopes ``log(e_i / e_{i+1}) / log(h_i / h_{i+1})`` between consecutive levels."""
    out = []
    for (h0, e0), (h1, e1) in zip(zip(hs, errors), zip(hs[1:], errors[1:])):
        if e0 <= 0 or e1 <= 0:
            out.append(float("nan"))
        else:
            out.append(math.log(e0 / e1) / math.log(h0 / h1))
    return out


# --------------------------------------------------------------------------
# Manufactured families


class TrigFamily:
    """Smooth periodic fields; velocity is a Taylor-Green vortex.

    phi = A sin(kx x) sin(ky y) cos t
    mu  = B cos(kx x) sin(ky y) exp(-t)
    v   = W cos t (sin(kx x) cos(ky y), -(kx/ky) cos(kx x) sin(ky y))
    """

    def __init__(self, lx: float = 1.0, ly: float = 1.0, amp_phi=0.5, amp_mu=0.3, amp_v=0.2):
        self.kx = 2 * np.pi / lx
        self.ky = 2 * np.pi / ly
        self.a, self.b, self.w = amp_phi, amp_mu, amp_v

    # closed forms -----------------------------------------------------
    def phi(self, x, y, t):
        return self.a * np.sin(self.kx * x) * np.sin(self.ky * y) * np.cos(t)

    def phi_t(self, x, y, t):
        return -self.a * np.sin(self.kx * x) * np.sin(self.ky * y) * np.sin(t)

    def grad_phi(self, x, y, t):
        c = self.a * np.cos(t)
        return (
            c * self.kx * np.cos(self.kx * x) * np.sin(self.ky * y),
            c * self.ky * np.sin(self.kx * x) * np.cos(self.ky * y),
        )

    def lap_phi(self, x, y, t):
        return -(self.kx**2 + self.ky**2) * self.phi(x, y, t)

    def mu(self, x, y, t):
        return self.b * np.cos(self.kx * x) * np.sin(self.ky * y) * np.exp(-t)

    def mu_t(self, x, y, t):
        return -self.mu(x, y, t)

    def lap_mu(self, x, y, t):
        return -(self.kx**2 + self.ky**2) * self.mu(x, y, t)

    def vel(self, x, y, t):
        w = self.w * np.cos(t)
        r = self.kx / self.ky
        return (
            w * np.sin(self.kx * x) * np.cos(self.ky * y),
            -w * r * np.cos(self.kx * x) * np.sin(self.ky * y),
        )

    def vel_t(self, x, y, t):
        w = -self.w * np.sin(t)
        r = self.kx / self.ky
        return (
            w * np.sin(self.kx * x) * np.cos(self.ky * y),
            -w * r * np.cos(self.kx * x) * np.sin(self.ky * y),
        )

    def vel_grad(self, x, y, t):
        """``((u_x, u_y), (v_x, v_y))``."""
        w = self.w * np.cos(t)
        kx, ky = self.kx, self.ky
        sx, cx = np.sin(kx * x), np.cos(kx * x)
        sy, cy = np.sin(ky * y), np.cos(ky * y)
        return (
            (w * kx * cx * cy, -w * ky * sx * sy),
            (w * kx**2 / ky * sx * sy, -w * kx * cx * cy),
        )

    def lap_vel(self, x, y, t):
        u, v = self.vel(x, y, t)
        k2 = self.kx**2 + self.ky**2
        return -k2 * u, -k2 * v

    def divergence(self, x, y, t):
        (ux, _), (_, vy) = self.vel_grad(x, y, t)
        return ux + vy


class ConstantFamily:
    """Uniform phase, matching uniform potential, fluid at rest."""

    def __init__(self, value: float = 0.3, u: float = -1.0):
        self.c, self.u = value, u

    def phi(self, x, y, t):
        return np.full(np.broadcast(x, y).shape, self.c)

    def phi_t(self, x, y, t):
        return np.zeros(np.broadcast(x, y).shape)

    def grad_phi(self, x, y, t):
        z = np.zeros(np.broadcast(x, y).shape)
        return z, z.copy()

    def lap_phi(self, x, y, t):
        return self.phi_t(x, y, t)

    def mu(self, x, y, t):
        return np.full(np.broadcast(x, y).shape, self.c**3 + self.u * self.c)

    def mu_t(self, x, y, t):
        return self.phi_t(x, y, t)

    lap_mu = mu_t

    def vel(self, x, y, t):
        return self.grad_phi(x, y, t)

    vel_t = vel
    lap_vel = vel

    def vel_grad(self, x, y, t):
        z = self.phi_t(x, y, t)
        return (z, z), (z, z)

    def divergence(self, x, y, t):
        return self.phi_t(x, y, t)


class ManufacturedProblem:
    """Source terms making ``family`` an exact solution of the model."""

    def __init__(self, family, params: M.SimParams):
        self.fam, self.p = family, params

    def _material(self, x, y, t):
        gx, gy = self.fam.grad_phi(x, y, t)
        u, v = self.fam.vel(x, y, t)
        return self.fam.phi_t(x, y, t) + u * gx + v * gy

    def potential_source(self, grid: G.Grid, t: float) -> np.ndarray:
        """``beta phidot - kappa Lap phi + mu_loc(phi, v) - mu``."""
        f, p = self.fam, self.p
        x, y = grid.centers()
        phi = f.phi(x, y, t)
        u, v = f.vel(x, y, t)
        return (
            p.beta * self._material(x, y, t)
            - p.kappa * f.lap_phi(x, y, t)
            + M.local_potential(phi, u * u + v * v, p)
            - f.mu(x, y, t)
        )

    def transport_source(self, grid: G.Grid, t: float) -> np.ndarray:
        """``phidot - gamma Lap mu + eps mu_t``."""
        f, p = self.fam, self.p
        x, y = grid.centers()
        return self._material(x, y, t) - p.gamma * f.lap_mu(x, y, t) + p.epsilon * f.mu_t(x, y, t)

    def _force_at(self, x, y, t, comp: int):
        f, p = self.fam, self.p
        vel = f.vel(x, y, t)
        grads = f.vel_grad(x, y, t)[comp]
        conv = vel[0] * grads[0] + vel[1] * grads[1]
        phi = f.phi(x, y, t)
        return (
            f.vel_t(x, y, t)[comp]
            - p.nu * f.lap_vel(x, y, t)[comp]
            + conv
            + p.kappa * f.lap_phi(x, y, t) * f.grad_phi(x, y, t)[comp]
            - p.lam * phi * self._material(x, y, t) * vel[comp]
        )

    def force(self, grid: G.Grid, t: float) -> G.VectorField:
        """``v_t - nu Lap v + (v.grad) v + kappa Lap(phi) grad(phi) - lam phi phidot v``."""
        w = grid.vector()
        w.u[:] = self._force_at(*grid.x_faces(), t, 0)
        w.v[:] = self._force_at(*grid.y_faces(), t, 1)
        return w

    def sources(self) -> Sources:
        return Sources(potential=self.potential_source, transport=self.transport_source)

    def params(self) -> M.SimParams:
        return replace(self.p, force=self.force)

    def exact_velocity(self, grid: G.Grid, t: float) -> G.VectorField:
        w = grid.vector()
        w.u[:] = self.fam.vel(*grid.x_faces(), t)[0]
        w.v[:] = self.fam.vel(*grid.y_faces(), t)[1]
        return w

    def check_divergence_free(self, grid: G.Grid) -> None:
        x, y = grid.centers()
        u, v = self.fam.vel(x, y, 0.0)
        scale = max(float(np.max(np.abs(u))), float(np.max(np.abs(v))), 1.0)
        div = float(np.max(np.abs(self.fam.divergence(x, y, 0.0))))
        if div > 1e-12 * scale * max(1.0, self.fam_wavenumber()):
            raise ConfigError(f"manufactured velocity is not divergence-free (max |div| = {div:.3e})")

    def fam_wavenumber(self) -> float:
        return float(max(getattr(self.fam, "kx", 1.0), getattr(self.fam, "ky", 1.0)))

    def initial_state(self, grid: G.Grid) -> State:
        self.check_divergence_free(grid)
        x, y = grid.centers()
        # the sampled field is divergence-free to O(h^2); project so the
        # discrete constraint holds from the first step
        vel, _ = LS.project(grid, G.enforce_bc(grid, self.exact_velocity(grid, 0.0)), self.p.solver)
        return State(grid, self.fam.phi(x, y, 0.0), vel, grid.scalar(), self.fam.mu(x, y, 0.0), 0.0, 0)

    def simulate(self, grid: G.Grid, dt: float, t_end: float) -> State:
        params = replace(self.params(), dt=dt)
        state = self.initial_state(grid)
        src = self.sources()
        rec = None
        for _ in range(n_steps(t_end, dt)):
            state, rec = advance(state, params, rec, src)
        return state

    def errors(self, state: State) -> dict:
        grid = state.grid
        x, y = grid.centers()
        dphi = state.phi - self.fam.phi(x, y, state.t)
        dmu = state.mu - self.fam.mu(x, y, state.t)
        dv = state.vel - self.exact_velocity(grid, state.t)
        return {
            "phi": math.sqrt(G.inner(grid, dphi, dphi)),
            "mu": math.sqrt(G.inner(grid, dmu, dmu)),
            "v": math.sqrt(G.inner_faces(grid, dv, dv)),
        }


@dataclass
class ConvergenceTable:
    kind: str  # "space" or "time"
    sizes: list  # h (space) or dt (time)
    errors: dict  # name -> list of errors per level (or per level pair)
    orders: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.orders:
            hs = self.sizes if self.kind == "space" else self.sizes[: len(next(iter(self.errors.values())))]
            self.orders = {k: observed_orders(hs, v) for k, v in self.errors.items()}

    def min_order(self, name: str) -> float:
        return min(self.orders[name])

    def rows(self) -> list[list[float]]:
        names = list(self.errors)
        out = []
        for i, e in enumerate(next(iter(self.errors.values()))):
            row = [self.sizes[i]] + [self.errors[n][i] for n in names]
            row += [self.orders[n][i - 1] if i > 0 else float("nan") for n in names]
            out.append(row)
        return out

    def header(self) -> list[str]:
        names = list(self.errors)
        size = "h" if self.kind == "space" else "dt"
        return [size] + [f"err_{n}" for n in names] + [f"order_{n}" for n in names]

    def to_csv(self) -> str:
        lines = [",".join(self.header())]
        lines += [",".join("%.17g" % v for v in row) for row in self.rows()]
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        lines = [f"{self.kind} convergence"]
        for row in self.rows():
            lines.append("  " + "  ".join(f"{v:11.4e}" for v in row))
        lines.append("  orders: " + ", ".join(f"{k}={[round(o, 3) for o in v]}" for k, v in self.orders.items()))
        return "\n".join(lines)


def _mms_problem(cfg: StudyConfig, family=None) -> ManufacturedProblem:
    if cfg.run["grid.bc"] != "periodic":
        raise ConfigError("manufactured solutions require grid.bc = periodic")
    params = replace(cfg.run.params(), force=M.zero_force)
    if family is None:
        family = TrigFamily(cfg.run["grid.lx"], cfg.run["grid.ly"])
    return ManufacturedProblem(family, params)


def mms_spatial(cfg: StudyConfig, family=None, t_end: float = 0.02, dt_coeff: float = 0.5) -> ConvergenceTable:
    """Errors against the exact fields at ``t_end`` with ``dt = dt_coeff * h^2``,
    so the first-order time error shrinks like the second-order space error."""
    prob = _mms_problem(cfg, family)
    base = cfg.run.grid()
    hs, errs = [], {k: [] for k in cfg.norms}
    for level in range(cfg.levels):
        f = cfg.refinement**level
        grid = G.Grid(base.nx * f, base.ny * f, base.lx, base.ly, base.bc)
        h = max(grid.dx, grid.dy)
        steps = max(1, math.ceil(t_end / (dt_coeff * h * h)))
        state = prob.simulate(grid, t_end / steps, t_end)
        e = prob.errors(state)
        hs.append(h)
        for k in cfg.norms:
            errs[k].append(e[k])
    return ConvergenceTable("space", hs, errs)


def mms_temporal(cfg: StudyConfig, family=None, t_end: float = 0.2, dt0: float = 1e-3) -> ConvergenceTable:
    """Self-convergence in time on the base grid: differences between
    solutions at ``dt`` and ``dt / r`` for ``levels + 1`` step sizes."""
    prob = _mms_problem(cfg, family)
    grid = cfg.run.grid()
    r = cfg.refinement
    dts = [dt0 / r**i for i in range(cfg.levels + 1)]
    states = [prob.simulate(grid, dt, t_end) for dt in dts]
    errs = {k: [] for k in cfg.norms}
    for a, b in zip(states, states[1:]):
        dphi = a.phi - b.phi
        dv = a.vel - b.vel
        diffs = {
            "phi": math.sqrt(G.inner(grid, dphi, dphi)),
            "mu": math.sqrt(G.inner(grid, a.mu - b.mu, a.mu - b.mu)),
            "v": math.sqrt(G.inner_faces(grid, dv, dv)),
        }
        for k in cfg.norms:
            errs[k].append(diffs[k])
    return ConvergenceTable("time", dts, errs)


def mms_run(cfg: StudyConfig, family=None, **kw) -> tuple[ConvergenceTable, ConvergenceTable]:
    space_kw = {k[6:]: v for k, v in kw.items() if k.startswith("space_")}
    time_kw = {k[5:]: v for k, v in kw.items() if k.startswith("time_")}
    return mms_spatial(cfg, family, **space_kw), mms_temporal(cfg, family, **time_kw)


# --------------------------------------------------------------------------
# eps -> 0


def trapezoid_l2(times: Sequence[float], sq_norms: Sequence[float]) -> float:
    """``sqrt(int ||w||^2 dt)`` by the trapezoid rule on the sample times."""
    return math.sqrt(max(0.0, float(np.trapezoid(sq_norms, times))))


def _trajectory(state: State, params: M.SimParams, steps: int, every: int):
    times, phis, vels = [state.t], [state.phi.copy()], [state.vel.copy()]
    rec = None
    for i in range(1, steps + 1):
        state, rec = advance(state, params, rec)
        if i % every == 0 or i == steps:
            times.append(state.t)
            phis.append(state.phi.copy())
            vels.append(state.vel.copy())
    return times, phis, vels


@dataclass
class EpsilonResult:
    eps: list
    phi_diff: list
    v_diff: list
    slope: float
    monotone: bool
    offending: tuple | None = None

    def summary(self) -> str:
        lines = ["eps        ||phi^eps-phi^0||  ||v^eps-v^0||"]
        lines += [f"{e:<10.4g} {a:17.6e}  {b:13.6e}" for e, a, b in zip(self.eps, self.phi_diff, self.v_diff)]
        lines.append(f"empirical slope d log(diff) / d log(eps) = {self.slope:.3f}")
        lines.append("monotone" if self.monotone else f"NOT monotone between eps={self.offending}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        rows = ["eps,phi_diff,v_diff"]
        rows += ["%.17g,%.17g,%.17g" % r for r in zip(self.eps, self.phi_diff, self.v_diff)]
        return "\n".join(rows) + "\n"


def epsilon_study(cfg: StudyConfig) -> EpsilonResult:
    """Time-integrated L2 distances of the eps-runs from the eps = 0 run.

    All members share grid, dt, initial data and ``mu0`` (from the eps-free
    initialisation).  Distances must decrease strictly along the list.
    """
    run = cfg.run
    grid = run.grid()
    base = run.params()
    steps = n_steps(cfg.horizon, base.dt)
    phi0 = run.initial_phi(grid)
    vel0 = run.initial_velocity(grid)
    init = new_state(grid, phi0, vel0, replace(base, epsilon=0.0))
    trajs = {}
    for eps in cfg.eps_list:
        trajs[eps] = _trajectory(init.copy(), replace(base, epsilon=eps), steps, cfg.sample_every)
    times, ref_phi, ref_v = trajs[0.0]
    eps_vals = [e for e in cfg.eps_list if e != 0.0]
    dphi, dv = [], []
    for eps in eps_vals:
        _, phis, vels = trajs[eps]
        sq_phi = [G.inner(grid, a - b, a - b) for a, b in zip(phis, ref_phi)]
        sq_v = [G.inner_faces(grid, a - b, a - b) for a, b in zip(vels, ref_v)]
        dphi.append(trapezoid_l2(times, sq_phi))
        dv.append(trapezoid_l2(times, sq_v))
    offending = None
    for i in range(len(dphi) - 1):
        if not dphi[i + 1] < dphi[i]:
            offending = (eps_vals[i], eps_vals[i + 1])
            break
    logs = [(math.log(e), math.log(d)) for e, d in zip(eps_vals, dphi) if d > 0]
    slope = float(np.polyfit(*zip(*logs), 1)[0]) if len(logs) >= 2 else float("nan")
    return EpsilonResult(eps_vals, dphi, dv, slope, offending is None, offending)


# --------------------------------------------------------------------------
# Continuous dependence


@dataclass
class PerturbationRun:
    delta: float
    times: np.ndarray
    r: np.ndarray  # ||dphi||^2 + ||dv||^2
    rate_fit: float  # least-squares slope of log r over the first half
    envelope_rate: float  # max(0, largest first-half instantaneous rate)
    within_envelope: bool
    worst_excess: float  # max over the second half of log r - log envelope


@dataclass
class StabilityReport:
    runs: list
    final_ratio: float
    rate_change: float
    passed: bool
    reasons: list = field(default_factory=list)

    def summary(self) -> str:
        lines = []
        for run in self.runs:
            lines.append(
                f"delta={run.delta:.3e}  r(0)={run.r[0]:.4e}  r(T)={run.r[-1]:.4e}  "
                f"h_fit={run.rate_fit:.4f}  h_env={run.envelope_rate:.4f}  "
                f"within_envelope={run.within_envelope}"
            )
        lines.append(f"r_delta(T) / r_delta/2(T) = {self.final_ratio:.4f}")
        lines.append(f"relative change of fitted rate = {self.rate_change:.3f}")
        lines.append("PASS" if self.passed else "FAIL: " + "; ".join(self.reasons))
        return "\n".join(lines)


def _difference_series(grid, params, base_state, phi0, vel0, eta, delta, steps):
    pert = new_state(grid, phi0 + delta * eta, vel0, params)
    a, b = base_state, pert
    ra = rb = None

    def r_of(x, y):
        dphi = x.phi - y.phi
        dv = x.vel - y.vel
        return G.inner(grid, dphi, dphi) + G.inner_faces(grid, dv, dv)

    times, rs = [0.0], [r_of(a, b)]
    for _ in range(steps):
        a, ra = advance(a, params, ra)
        b, rb = advance(b, params, rb)
        times.append(a.t)
        rs.append(r_of(a, b))
    return np.array(times), np.array(rs)


def _growth_fit(delta, times, r) -> PerturbationRun:
    logr = np.log(r)
    half = len(times) // 2
    t1, l1 = times[: half + 1], logr[: half + 1]
    rate_fit = float(np.polyfit(t1, l1, 1)[0])
    inst = np.diff(l1) / np.diff(t1)
    env = max(0.0, float(inst.max()))
    t2, l2 = times[half:], logr[half:]
    bound = l2[0] + env * (t2 - t2[0])
    excess = float(np.max(l2 - bound))
    # allow round-off in the logarithm
    return PerturbationRun(delta, times, r, rate_fit, env, excess <= 1e-9, excess)


def perturbation_stability(cfg: StudyConfig, seed: int = 12345) -> StabilityReport:
    """Runs with ``phi0`` and ``phi0 + d eta`` for ``d = delta`` and ``delta/2``.

    ``eta`` is fixed mean-zero noise of unit L2 norm, so both pairs share
    their direction and differ only by amplitude.
    """
    run = cfg.run
    grid = run.grid()
    params = run.params()
    steps = n_steps(cfg.horizon, params.dt)
    phi0 = run.initial_phi(grid)
    vel0 = run.initial_velocity(grid)
    eta = IC.unit_noise(grid, seed)
    results = []
    for delta in (cfg.delta, cfg.delta / 2):
        base = new_state(grid, phi0, vel0, params)
        t, r = _difference_series(grid, params, base, phi0, vel0, eta, delta, steps)
        results.append(_growth_fit(delta, t, r))
    ratio = float(results[0].r[-1] / results[1].r[-1])
    h0, h1 = results[0].rate_fit, results[1].rate_fit
    rate_change = abs(h0 - h1) / max(abs(h0), abs(h1), 1e-12)
    reasons = []
    if not 3.0 <= ratio <= 5.0:
        reasons.append(f"final ratio {ratio:.4f} outside [3, 5]")
    if rate_change > 0.5:
        reasons.append(f"fitted rate changed by {rate_change:.2%} under delta -> delta/2")
    for res in results:
        if not res.within_envelope:
            reasons.append(f"delta={res.delta:.3e} exceeds the growth envelope by {res.worst_excess:.3e} (log)")
    return StabilityReport(results, ratio, rate_change, not reasons, reasons)
