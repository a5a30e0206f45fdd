"""Symmetric linear solves: Helmholtz operators ``(a I - b Lap)`` and the
pressure Poisson problem.

Two backends share one contract:

* ``cg`` -- matrix-free conjugate gradients, optionally Jacobi
  preconditioned, with mean projection for the singular Neumann/periodic case.
* ``spectral`` -- exact diagonalisation.  The mirror-ghost Neumann stencil is
  diagonalised by the type-II cosine transform, the no-slip stencils by sine
  transforms and the periodic one by the FFT, so every constant-coefficient
  solve the stepper needs is a transform, a division and an inverse transform.

Both backends verify the residual before returning, so the accuracy contract
``||A x - rhs|| <= rel_tol ||rhs||`` holds regardless of the path taken.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft as sfft

from . import grid as G
from .errors import IncompatibleRHS, NonConvergence, ValidationError

METHODS = ("spectral", "cg")
NULLSPACE_FIXES = ("project_mean_zero", "pin_one_cell")
PRECONDITIONERS = ("none", "jacobi")


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-10
    max_iter: int | None = None  # None -> 10 * nx * ny
    nullspace_fix: str = "project_mean_zero"
    method: str = "spectral"
    preconditioner: str = "none"

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValidationError("solver.rel_tol", "must lie in (0, 1)")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValidationError("solver.max_iter", "must be >= 1")
        if self.nullspace_fix not in NULLSPACE_FIXES:
            raise ValidationError("solver.nullspace_fix", f"unknown option {self.nullspace_fix!r}")
        if self.method not in METHODS:
            raise ValidationError("solver.method", f"unknown option {self.method!r}")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValidationError("solver.preconditioner", f"unknown option {self.preconditioner!r}")

    def iteration_cap(self, n: int) -> int:
        return self.max_iter if self.max_iter is not None else 10 * n


@dataclass
class CGInfo:
    iterations: int = 0
    residual: float = 0.0
    history: list = field(default_factory=list)


def _l2(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(a * a)))


def cg(
    apply: Callable[[np.ndarray], np.ndarray],
    rhs: np.ndarray,
    rel_tol: float,
    max_iter: int,
    x0: np.ndarray | None = None,
    diag: np.ndarray | None = None,
    project_mean: bool = False,
    callback: Callable[[np.ndarray], None] | None = None,
) -> tuple[np.ndarray, CGInfo]:
    """Preconditioned conjugate gradients for an SPD (or SPSD) operator.

    With ``project_mean`` the iterates and residuals are kept orthogonal to
    constants, which handles the one-dimensional nullspace of the pure
    Neumann/periodic Laplacian.  ``callback`` receives every iterate.
    """

    def proj(a):
        return a - a.mean() if project_mean else a

    b = proj(rhs)
    bnorm = _l2(b)
    info = CGInfo()
    x = np.zeros_like(rhs) if x0 is None else proj(x0.copy())
    if bnorm == 0.0:
        return x, info
    r = b - proj(apply(x))
    z = proj(r / diag) if diag is not None else r
    p = z.copy()
    rz = float(np.sum(r * z))
    res = _l2(r) / bnorm
    info.history.append(res)
    while res > rel_tol:
        if info.iterations >= max_iter:
            raise NonConvergence(info.iterations, res)
        ap = proj(apply(p))
        alpha = rz / float(np.sum(p * ap))
        x += alpha * p
        r -= alpha * ap
        info.iterations += 1
        if callback is not None:
            callback(x)
        res = _l2(r) / bnorm
        info.history.append(res)
        z = proj(r / diag) if diag is not None else r
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    # Recompute the true residual; the recursive one drifts.
    info.residual = _l2(b - proj(apply(x))) / bnorm
    return x, info


# --------------------------------------------------------------------------
# Spectral diagonalisation


def _eig(kind: str, n: int, h: float) -> np.ndarray:
    """Eigenvalues of minus the 1-D second-difference operator."""
    if kind == "neumann":
        k = np.arange(n)
        return (2.0 / h**2) * (1.0 - np.cos(np.pi * k / n))
    if kind == "periodic":
        k = np.arange(n)
        return (2.0 / h**2) * (1.0 - np.cos(2.0 * np.pi * k / n))
    if kind == "dirichlet_face":  # n - 1 interior nodes between fixed-zero faces
        k = np.arange(1, n)
        return (2.0 / h**2) * (1.0 - np.cos(np.pi * k / n))
    if kind == "dirichlet_center":  # n cells with antisymmetric ghosts
        k = np.arange(1, n + 1)
        return (2.0 / h**2) * (1.0 - np.cos(np.pi * k / n))
    raise ValueError(kind)


def _forward(kind, a, axis):
    if kind == "neumann":
        return sfft.dct(a, type=2, norm="ortho", axis=axis)
    if kind == "periodic":
        return sfft.fft(a, axis=axis)
    if kind == "dirichlet_face":
        return sfft.dst(a, type=1, norm="ortho", axis=axis)
    return sfft.dst(a, type=2, norm="ortho", axis=axis)


def _backward(kind, a, axis):
    if kind == "neumann":
        return sfft.idct(a, type=2, norm="ortho", axis=axis)
    if kind == "periodic":
        return sfft.ifft(a, axis=axis)
    if kind == "dirichlet_face":
        return sfft.idst(a, type=1, norm="ortho", axis=axis)
    return sfft.idst(a, type=2, norm="ortho", axis=axis)


class SpectralBasis:
    """Joint eigenbasis of the 5-point Laplacian for one array layout.

    ``kinds`` gives the closure along (y, x).  ``eigen`` holds the
    nonnegative eigenvalues of ``-Lap`` broadcast to the array shape.
    """

    def __init__(self, kinds: tuple[str, str], n: tuple[int, int], h: tuple[float, float]):
        self.kinds = kinds
        ey = _eig(kinds[0], n[0], h[0])
        ex = _eig(kinds[1], n[1], h[1])
        self.eigen = ey[:, None] + ex[None, :]
        self.complex = "periodic" in kinds

    def forward(self, a: np.ndarray) -> np.ndarray:
        a = _forward(self.kinds[1], a, 1)
        return _forward(self.kinds[0], a, 0)

    def backward(self, a: np.ndarray) -> np.ndarray:
        a = _backward(self.kinds[0], a, 0)
        a = _backward(self.kinds[1], a, 1)
        return a.real if self.complex else a

    def apply_inverse(self, symbol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Solve ``symbol(-Lap) x = rhs``; zero entries of ``symbol`` map to 0."""
        hat = self.forward(rhs)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(symbol != 0.0, hat / np.where(symbol != 0.0, symbol, 1.0), 0.0)
        return self.backward(out)


_BASIS_CACHE: dict = {}


def scalar_basis(grid: G.Grid) -> SpectralBasis:
    key = ("scalar", grid)
    if key not in _BASIS_CACHE:
        kind = "periodic" if grid.periodic else "neumann"
        _BASIS_CACHE[key] = SpectralBasis((kind, kind), (grid.ny, grid.nx), (grid.dy, grid.dx))
    return _BASIS_CACHE[key]


def velocity_bases(grid: G.Grid) -> tuple[SpectralBasis, SpectralBasis]:
    """Bases for the unknown parts of the u and v components.

    Paper mode: u unknowns are the interior x-faces (ny, nx-1), v unknowns
    the interior y-faces (ny-1, nx).  Periodic mode: the unique faces.
    """
    key = ("velocity", grid)
    if key not in _BASIS_CACHE:
        if grid.periodic:
            b = SpectralBasis(("periodic", "periodic"), (grid.ny, grid.nx), (grid.dy, grid.dx))
            _BASIS_CACHE[key] = (b, b)
        else:
            bu = SpectralBasis(("dirichlet_center", "dirichlet_face"), (grid.ny, grid.nx), (grid.dy, grid.dx))
            bv = SpectralBasis(("dirichlet_face", "dirichlet_center"), (grid.ny, grid.nx), (grid.dy, grid.dx))
            _BASIS_CACHE[key] = (bu, bv)
    return _BASIS_CACHE[key]


# --------------------------------------------------------------------------
# Public solves


def helmholtz_apply(grid: G.Grid, a: float, b: float, x: np.ndarray) -> np.ndarray:
    return a * x - b * G.laplacian(grid, x)


def _check_compatible(grid, a, rhs, cfg, scale):
    if a != 0.0:
        return rhs
    mean = float(rhs.mean())
    tol = cfg.rel_tol * max(_l2(rhs) / np.sqrt(rhs.size), scale)
    if abs(mean) > tol:
        raise IncompatibleRHS(mean, tol)
    return rhs - mean


def _normalise(x, a, cfg):
    if a != 0.0:
        return x
    if cfg.nullspace_fix == "pin_one_cell":
        return x - x[0, 0]
    return x - x.mean()


def solve_helmholtz(
    grid: G.Grid,
    a: float,
    b: float,
    rhs: np.ndarray,
    cfg: SolverConfig = SolverConfig(),
    info: CGInfo | None = None,
    compat_scale: float = 0.0,
) -> np.ndarray:
    """Solve ``(a I - b Lap) x = rhs`` for a cell-centred scalar.

    Uses the grid's scalar closure (Neumann in paper mode).  With ``a == 0``
    the operator is singular; the right-hand side must have (numerically)
    zero mean and the solution is normalised per ``cfg.nullspace_fix``.
    The mean is compared against ``rel_tol`` times the larger of the RMS of
    ``rhs`` and ``compat_scale``; callers whose ``rhs`` is a cancelling sum
    (a discrete divergence) pass the size of the summands there.
    """
    if a < 0 or b <= 0:
        raise ValueError("need a >= 0 and b > 0")
    rhs = _check_compatible(grid, a, rhs, cfg, compat_scale)
    bnorm = _l2(rhs)
    if cfg.method == "spectral":
        basis = scalar_basis(grid)
        x = basis.apply_inverse(a + b * basis.eigen, rhs)
        iters = 1
    else:
        diag = None
        if cfg.preconditioner == "jacobi":
            d = a + b * (2.0 / grid.dx**2 + 2.0 / grid.dy**2)
            diag = np.full(rhs.shape, d)
        x, cinfo = cg(
            lambda z: helmholtz_apply(grid, a, b, z),
            rhs,
            cfg.rel_tol,
            cfg.iteration_cap(rhs.size),
            diag=diag,
            project_mean=(a == 0.0),
        )
        iters = cinfo.iterations
    x = _normalise(x, a, cfg)
    resid = _l2(helmholtz_apply(grid, a, b, x) - rhs)
    if bnorm > 0 and resid > cfg.rel_tol * bnorm:
        raise NonConvergence(iters, resid / bnorm)
    if info is not None:
        info.iterations += iters
        info.residual = resid / bnorm if bnorm > 0 else 0.0
    return x


def solve_pressure_poisson(
    grid: G.Grid,
    rhs: np.ndarray,
    cfg: SolverConfig = SolverConfig(),
    info: CGInfo | None = None,
    compat_scale: float = 0.0,
) -> np.ndarray:
    """Mean-zero solution of ``Lap p = rhs`` with the grid's scalar closure."""
    return -solve_helmholtz(grid, 0.0, 1.0, rhs, cfg, info, compat_scale)


def divergence_scale(grid: G.Grid, w: G.VectorField) -> float:
    """Magnitude of the individual terms summed by ``divergence(w)``."""
    return w.max_abs() * (1.0 / grid.dx + 1.0 / grid.dy)


def project(grid: G.Grid, w: G.VectorField, cfg: SolverConfig = SolverConfig()) -> tuple[G.VectorField, np.ndarray]:
    """Discrete Leray projection: ``w - grad q`` with ``Lap q = div w``.

    Returns the divergence-free part and the potential ``q``.
    """
    q = solve_pressure_poisson(grid, G.divergence(grid, w), cfg, compat_scale=divergence_scale(grid, w))
    return G.enforce_bc(grid, w - G.gradient(grid, q)), q


def _vel_unknowns(grid, w):
    if grid.periodic:
        return w.u[:, :-1], w.v[:-1, :]
    return w.u[:, 1:-1], w.v[1:-1, :]


def _vel_assemble(grid, uu, vv):
    out = grid.vector()
    if grid.periodic:
        out.u[:, :-1] = uu
        out.v[:-1, :] = vv
    else:
        out.u[:, 1:-1] = uu
        out.v[1:-1, :] = vv
    return G.enforce_bc(grid, out)


def solve_velocity_helmholtz(
    grid: G.Grid,
    a: float,
    b: float,
    rhs: G.VectorField,
    cfg: SolverConfig = SolverConfig(),
    info: CGInfo | None = None,
) -> G.VectorField:
    """Componentwise ``(a I - b Lap) w = rhs`` with no-slip or periodic closure.

    Requires ``a > 0``.  Wall-normal boundary faces of the result are zero in
    paper mode.
    """
    if a <= 0 or b <= 0:
        raise ValueError("need a > 0 and b > 0")
    ru, rv = _vel_unknowns(grid, rhs)
    if cfg.method == "spectral":
        bu, bv = velocity_bases(grid)
        xu = bu.apply_inverse(a + b * bu.eigen, ru)
        xv = bv.apply_inverse(a + b * bv.eigen, rv)
        x = _vel_assemble(grid, xu, xv)
        iters = 1
    else:
        def apply(z):
            w = _vel_assemble(grid, *_unflat(z, ru.shape, rv.shape))
            lap = G.vector_laplacian(grid, w)
            lu, lv = _vel_unknowns(grid, lap)
            return a * z - b * np.concatenate([lu.ravel(), lv.ravel()])

        flat = np.concatenate([ru.ravel(), rv.ravel()])
        diag = None
        if cfg.preconditioner == "jacobi":
            diag = np.full(flat.shape, a + b * (2.0 / grid.dx**2 + 2.0 / grid.dy**2))
        z, cinfo = cg(apply, flat, cfg.rel_tol, cfg.iteration_cap(flat.size), diag=diag)
        x = _vel_assemble(grid, *_unflat(z, ru.shape, rv.shape))
        iters = cinfo.iterations
    target = rhs.copy()
    G.enforce_bc(grid, target)
    resid_vec = x * a - G.vector_laplacian(grid, x) * b - target
    ru_res, rv_res = _vel_unknowns(grid, resid_vec)
    resid = np.sqrt(_l2(ru_res) ** 2 + _l2(rv_res) ** 2)
    bnorm = np.sqrt(_l2(ru) ** 2 + _l2(rv) ** 2)
    if bnorm > 0 and resid > cfg.rel_tol * bnorm:
        raise NonConvergence(iters, resid / bnorm)
    if info is not None:
        info.iterations += iters
    return x


def _unflat(z, su, sv):
    nu = su[0] * su[1]
    return z[:nu].reshape(su), z[nu:].reshape(sv)
