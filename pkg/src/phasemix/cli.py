"""Command line entry point.

Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 solver failure
(non-convergence, blow-up, CFL), 4 a verification assertion failed.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fileio as F
from . import model as M
from . import verify as V
from .config import RunConfig
from .diagnostics import apriori_monitor, initial_record
from .errors import ConfigError, IoError, ParseError, SolverError, ValidationError
from .stepper import advance

EXIT_OK, EXIT_IO, EXIT_INPUT, EXIT_SOLVER, EXIT_ASSERT = 0, 1, 2, 3, 4

SPACE_ORDER, SPACE_TOL = 2.0, 0.3
TIME_ORDER, TIME_TOL = 1.0, 0.2
THERMO_TOL = 1e-13


class AssertionFailed(Exception):
    pass


def _out_dir(args, cfg: RunConfig) -> Path:
    return F.ensure_dir(args.out if args.out else cfg["output.dir"])


def cmd_run(args) -> int:
    cfg = RunConfig.from_file(args.config)
    params, grid, state = cfg.build()
    out = _out_dir(args, cfg)
    steps = cfg.n_steps()
    snap_every, series_every = cfg["output.snapshot_every"], cfg["output.series_every"]
    render = cfg["output.render"]

    def snapshot(st, rec):
        F.write_checkpoint(st, rec, out)
        if render:
            F.render_pgm(st.phi, out / f"phi_{st.step:06d}.pgm")

    rec = initial_record(state, params)
    records = [rec]
    with open(out / "series.csv", "w") as fh:
        writer = F.SeriesWriter(fh)
        writer.write(rec)
        snapshot(state, rec)
        try:
            for _ in range(steps):
                state, rec = advance(state, params, rec)
                records.append(rec)
                if state.step % series_every == 0 or state.step == steps:
                    writer.write(rec)
                if state.step % snap_every == 0 or state.step == steps:
                    snapshot(state, rec)
        except SolverError:
            # keep the last state that was still valid
            fh.flush()
            snapshot(state, rec)
            raise
    verdict = apriori_monitor(records)
    first, last = records[0], records[-1]
    print(f"steps={steps} t={state.t:.6g} grid={grid.nx}x{grid.ny} bc={grid.bc}")
    print(f"mass: {first.mass:.12e} -> {last.mass:.12e} (drift {last.mass - first.mass:.3e})")
    print(f"energy: {first.energy:.12e} -> {last.energy:.12e}")
    print(f"max div: {max(r.div_max for r in records):.3e}")
    print(f"max |budget residual|: {max(abs(r.budget_residual) for r in records):.3e}")
    print(f"a-priori monitor: {verdict.summary()}")
    print(f"artifacts in {out}")
    return EXIT_OK


def _check_orders(table: V.ConvergenceTable, target: float, tol: float) -> list[str]:
    bad = []
    for name, orders in table.orders.items():
        for i, o in enumerate(orders):
            if not abs(o - target) <= tol:
                bad.append(f"{table.kind} order of {name} between levels {i} and {i + 1} is {o:.3f}")
    return bad


def cmd_verify_mms(args) -> int:
    cfg = RunConfig.from_file(args.config)
    study = V.StudyConfig(run=cfg, levels=args.levels)
    space, time = V.mms_run(study)
    out = _out_dir(args, cfg)
    (out / "mms_space.csv").write_text(space.to_csv())
    (out / "mms_time.csv").write_text(time.to_csv())
    print(space.summary())
    print(time.summary())
    bad = _check_orders(space, SPACE_ORDER, SPACE_TOL) + _check_orders(time, TIME_ORDER, TIME_TOL)
    if bad:
        raise AssertionFailed("; ".join(bad))
    return EXIT_OK


def _parse_list(text: str) -> tuple[float, ...]:
    try:
        vals = [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise ValidationError("--eps", f"not a comma-separated list of numbers: {text!r}") from None
    if not vals or vals[-1] != 0.0:
        vals.append(0.0)
    return tuple(vals)


def cmd_sweep_eps(args) -> int:
    cfg = RunConfig.from_file(args.config)
    study = V.StudyConfig(run=cfg, eps_list=_parse_list(args.eps), sample_every=args.sample_every)
    res = V.epsilon_study(study)
    out = _out_dir(args, cfg)
    (out / "eps_sweep.csv").write_text(res.to_csv())
    print(res.summary())
    if not res.monotone:
        a, b = res.offending
        raise AssertionFailed(f"difference does not decrease from eps={a:g} to eps={b:g}")
    return EXIT_OK


def cmd_stability(args) -> int:
    cfg = RunConfig.from_file(args.config)
    study = V.StudyConfig(run=cfg, delta=args.delta)
    rep = V.perturbation_stability(study)
    out = _out_dir(args, cfg)
    rows = ["t,r_delta,r_half_delta"]
    a, b = rep.runs
    rows += ["%.17g,%.17g,%.17g" % r for r in zip(a.times, a.r, b.r)]
    (out / "stability.csv").write_text("\n".join(rows) + "\n")
    print(rep.summary())
    if not rep.passed:
        raise AssertionFailed("; ".join(rep.reasons))
    return EXIT_OK


def thermo_check(samples: int, seed: int, params: M.SimParams | None = None) -> tuple[float, float]:
    """Largest relative cancellation residual and smallest production."""
    params = params if params is not None else M.SimParams(lam=0.5, beta=0.05)
    rng = np.random.default_rng(seed)
    worst, least = 0.0, np.inf
    for _ in range(samples):
        res, prod, scale = M.thermo_consistency_residual(M.ProcessSample.random(rng), params)
        worst = max(worst, abs(res) / scale if scale > 0 else abs(res))
        least = min(least, prod)
    return worst, float(least)


def cmd_check_thermo(args) -> int:
    if args.samples < 1:
        raise ValidationError("--samples", "must be >= 1")
    params = RunConfig.from_file(args.config).params() if args.config else None
    worst, least = thermo_check(args.samples, args.seed, params)
    print(f"samples={args.samples} seed={args.seed}")
    print(f"max |cancel_residual| (relative) = {worst:.3e}")
    print(f"min entropy_production = {least:.6e}")
    if worst > THERMO_TOL or least < 0:
        raise AssertionFailed(f"residual {worst:.3e} (limit {THERMO_TOL:g}) or production {least:.3e} < 0")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phasemix", description="Phase-field mixture solver")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="time-step a configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify-mms", help="manufactured-solution convergence orders")
    p.add_argument("--config", required=True)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_mms)

    p = sub.add_parser("sweep-eps", help="relaxed runs against eps = 0")
    p.add_argument("--config", required=True)
    p.add_argument("--eps", default="0.1,0.05,0.025")
    p.add_argument("--sample-every", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep_eps)

    p = sub.add_parser("stability", help="growth of initial perturbations")
    p.add_argument("--config", required=True)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("check-thermo", help="pointwise dissipation inequality")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config")
    p.set_defaults(func=cmd_check_thermo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except AssertionFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (IoError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
