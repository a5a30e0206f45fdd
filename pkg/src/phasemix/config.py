"""Flat ``key = value`` run configuration.

Keys are dotted (``grid.nx``, ``phys.kappa`` ...).  Blank lines and lines
starting with ``#`` are ignored.  Unknown or repeated keys are errors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from . import grid as G
from . import initial as IC
from . import model as M
from .errors import ParseError, ValidationError
from .linsolve import SolverConfig
from .stepper import State, new_state


def _bool(text):
    t = text.lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _stab(text):
    return None if text.lower() == "auto" else float(text)


def _uint64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return v


def _opt_int(text):
    return None if text.lower() == "auto" else int(text)


# key -> (parser, default)
SCHEMA = {
    "grid.nx": (int, 64),
    "grid.ny": (int, 64),
    "grid.lx": (float, 1.0),
    "grid.ly": (float, 1.0),
    "grid.bc": (str, "paper"),
    "phys.kappa": (float, 1e-3),
    "phys.beta": (float, 0.05),
    "phys.gamma": (float, 1.0),
    "phys.nu": (float, 0.1),
    "phys.lambda": (float, 0.5),
    "phys.u": (float, -1.0),
    "phys.epsilon": (float, 0.0),
    "phys.stab_S": (_stab, None),
    "time.dt": (float, 1e-3),
    "time.t_end": (float, 1.0),
    "ic.kind": (str, "uniform_noise"),
    "ic.amplitude": (float, 0.01),
    "ic.mean": (float, 0.0),
    "ic.seed": (_uint64, 0),
    "ic.width": (float, 0.02),
    "ic.radius": (float, 0.25),
    "ic.v_kind": (str, "zero"),
    "ic.v_amplitude": (float, 1.0),
    "force.kind": (str, "zero"),
    "force.fx": (float, 0.0),
    "force.fy": (float, 0.0),
    "force.amp_x": (float, 0.0),
    "force.amp_y": (float, 0.0),
    "force.mode": (int, 1),
    "force.omega": (float, 0.0),
    "output.dir": (str, "out"),
    "output.snapshot_every": (int, 100),
    "output.series_every": (int, 1),
    "output.render": (_bool, False),
    "solver.rel_tol": (float, 1e-10),
    "solver.max_iter": (_opt_int, None),
    "solver.method": (str, "spectral"),
    "solver.preconditioner": (str, "none"),
    "solver.nullspace_fix": (str, "project_mean_zero"),
}

IC_KINDS = ("uniform_noise", "tanh_stripe", "tanh_disk")
V_KINDS = ("zero", "shear", "taylor_green")
FORCE_KINDS = ("zero", "constant", "trig")


def parse_text(text: str) -> dict:
    """Parse config text into ``{key: typed value}`` (explicit keys only)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected 'key = value', got {line!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.split("#", 1)[0].strip()
        if key not in SCHEMA:
            raise ParseError(lineno, f"unknown key {key!r}")
        if key in values:
            raise ParseError(lineno, f"duplicate key {key!r}")
        if not val:
            raise ParseError(lineno, f"missing value for {key!r}")
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ParseError(lineno, f"bad value for {key!r}: {exc}") from None
    return values


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cfg = cls({k: default for k, (_, default) in SCHEMA.items()})
        cfg.values.update(parse_text(text))
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text())

    def __getitem__(self, key):
        return self.values[key]

    def with_overrides(self, **kv) -> "RunConfig":
        """Copy with dotted keys given as ``grid__nx=...``."""
        vals = dict(self.values)
        for k, v in kv.items():
            key = k.replace("__", ".")
            if key not in SCHEMA:
                raise ValidationError(key, "unknown key")
            vals[key] = v
        out = RunConfig(vals)
        out.validate()
        return out

    def validate(self) -> None:
        v = self.values
        for key, allowed in (
            ("ic.kind", IC_KINDS),
            ("ic.v_kind", V_KINDS),
            ("force.kind", FORCE_KINDS),
        ):
            if v[key] not in allowed:
                raise ValidationError(key, f"must be one of {', '.join(allowed)}")
        if v["ic.v_kind"] == "taylor_green" and v["grid.bc"] != "periodic":
            raise ValidationError("ic.v_kind", "taylor_green requires grid.bc = periodic")
        if v["time.t_end"] <= 0 or not math.isfinite(v["time.t_end"]):
            raise ValidationError("time.t_end", "must be positive")
        for key in ("output.snapshot_every", "output.series_every"):
            if v[key] < 1:
                raise ValidationError(key, "must be >= 1")
        if v["ic.width"] <= 0:
            raise ValidationError("ic.width", "must be positive")
        # re-validates the grid and physical constraints
        self.grid()
        self.params()

    def grid(self) -> G.Grid:
        v = self.values
        return G.Grid(v["grid.nx"], v["grid.ny"], v["grid.lx"], v["grid.ly"], v["grid.bc"])

    def solver(self) -> SolverConfig:
        v = self.values
        return SolverConfig(
            rel_tol=v["solver.rel_tol"],
            max_iter=v["solver.max_iter"],
            nullspace_fix=v["solver.nullspace_fix"],
            method=v["solver.method"],
            preconditioner=v["solver.preconditioner"],
        )

    def force(self):
        v = self.values
        kind = v["force.kind"]
        if kind == "constant":
            return M.ConstantForce(v["force.fx"], v["force.fy"])
        if kind == "trig":
            return M.TrigForce(v["force.amp_x"], v["force.amp_y"], v["force.mode"], v["force.omega"])
        return M.zero_force

    def params(self) -> M.SimParams:
        v = self.values
        return M.SimParams(
            kappa=v["phys.kappa"],
            beta=v["phys.beta"],
            gamma=v["phys.gamma"],
            nu=v["phys.nu"],
            lam=v["phys.lambda"],
            u=v["phys.u"],
            epsilon=v["phys.epsilon"],
            dt=v["time.dt"],
            stab=v["phys.stab_S"],
            force=self.force(),
            solver=self.solver(),
        )

    def initial_phi(self, grid: G.Grid):
        v = self.values
        kind = v["ic.kind"]
        if kind == "uniform_noise":
            return IC.noise_phi(grid, v["ic.mean"], v["ic.amplitude"], v["ic.seed"])
        if kind == "tanh_stripe":
            return IC.tanh_stripe(grid, v["ic.amplitude"], v["ic.width"])
        return IC.tanh_disk(grid, v["ic.amplitude"], v["ic.width"], v["ic.radius"])

    def initial_velocity(self, grid: G.Grid):
        v = self.values
        kind = v["ic.v_kind"]
        if kind == "shear":
            return IC.shear_velocity(grid, v["ic.v_amplitude"])
        if kind == "taylor_green":
            return IC.taylor_green(grid, v["ic.v_amplitude"])
        return grid.vector()

    def n_steps(self) -> int:
        return int(round(self.values["time.t_end"] / self.values["time.dt"]))

    def build(self) -> tuple[M.SimParams, G.Grid, State]:
        grid = self.grid()
        params = self.params()
        state = new_state(grid, self.initial_phi(grid), self.initial_velocity(grid), params)
        return params, grid, state


def load_config(path) -> tuple[M.SimParams, G.Grid, State]:
    return RunConfig.from_file(path).build()
