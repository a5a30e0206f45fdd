"""Uniform MAC grid and second-order finite-difference operators.

Scalars (phase field, chemical potential, pressure) live at cell centres and
are stored as ``(ny, nx)`` arrays, row index = y.  Velocities are staggered:
``VectorField.u`` holds the x-component on x-faces, shape ``(ny, nx + 1)``, and
``VectorField.v`` the y-component on y-faces, shape ``(ny + 1, nx)``.

Two boundary modes exist:

``paper``
    Homogeneous Neumann data for scalars (mirror ghost cells) and no-slip
    for the velocity (normal face values pinned to zero, tangential ghost
    values antisymmetric).
``periodic``
    Wrap-around in both directions.  The last x-face column and the last
    y-face row duplicate the first ones and are kept in sync.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError

BC_MODES = ("paper", "periodic")


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0
    bc: str = "paper"

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValidationError("grid", "nx and ny must be integers")
        if self.nx < 4 or self.ny < 4:
            raise ValidationError("grid", f"need nx, ny >= 4, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValidationError("grid", "lx and ly must be positive")
        if self.bc not in BC_MODES:
            raise ValidationError("grid.bc", f"unknown boundary mode {self.bc!r}")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def periodic(self) -> bool:
        return self.bc == "periodic"

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid ``(X, Y)`` of cell-centre coordinates."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y)

    def x_faces(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.nx + 1) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y)

    def y_faces(self) -> tuple[np.ndarray, np.ndarray]:
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = np.arange(self.ny + 1) * self.dy
        return np.meshgrid(x, y)

    def corners(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.nx + 1) * self.dx
        y = np.arange(self.ny + 1) * self.dy
        return np.meshgrid(x, y)

    def scalar(self, value: float = 0.0) -> np.ndarray:
        return np.full(self.shape, float(value))

    def vector(self) -> "VectorField":
        return VectorField(np.zeros((self.ny, self.nx + 1)), np.zeros((self.ny + 1, self.nx)))


@dataclass
class VectorField:
    """Face-centred velocity-like field on the MAC layout."""

    u: np.ndarray
    v: np.ndarray

    def copy(self) -> "VectorField":
        return VectorField(self.u.copy(), self.v.copy())

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.u - other.u, self.v - other.v)

    def __mul__(self, c: float) -> "VectorField":
        return VectorField(self.u * c, self.v * c)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(-self.u, -self.v)

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(self.u))), float(np.max(np.abs(self.v))))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))


def check_vector(grid: Grid, w: VectorField) -> None:
    if w.u.shape != (grid.ny, grid.nx + 1) or w.v.shape != (grid.ny + 1, grid.nx):
        raise ValueError(
            f"vector field shapes {w.u.shape}, {w.v.shape} do not match a "
            f"{grid.nx}x{grid.ny} MAC grid"
        )


def enforce_bc(grid: Grid, w: VectorField) -> VectorField:
    """Pin wall-normal faces to zero (paper) or re-sync duplicate faces (periodic).

    Mutates and returns ``w``.
    """
    if grid.periodic:
        w.u[:, -1] = w.u[:, 0]
        w.v[-1, :] = w.v[0, :]
    else:
        w.u[:, 0] = w.u[:, -1] = 0.0
        w.v[0, :] = w.v[-1, :] = 0.0
    return w


def _pad(grid: Grid, f: np.ndarray) -> np.ndarray:
    return np.pad(f, 1, mode="wrap" if grid.periodic else "edge")


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Five-point Laplacian at cell centres (mirror ghosts or wrap)."""
    g = _pad(grid, f)
    c = g[1:-1, 1:-1]
    return (g[1:-1, 2:] - 2.0 * c + g[1:-1, :-2]) / grid.dx**2 + (
        g[2:, 1:-1] - 2.0 * c + g[:-2, 1:-1]
    ) / grid.dy**2


def gradient(grid: Grid, f: np.ndarray) -> VectorField:
    """Cell-to-cell differences across every face.

    Boundary faces get zero normal gradient in paper mode.
    """
    w = grid.vector()
    w.u[:, 1:-1] = (f[:, 1:] - f[:, :-1]) / grid.dx
    w.v[1:-1, :] = (f[1:, :] - f[:-1, :]) / grid.dy
    if grid.periodic:
        w.u[:, 0] = w.u[:, -1] = (f[:, 0] - f[:, -1]) / grid.dx
        w.v[0, :] = w.v[-1, :] = (f[0, :] - f[-1, :]) / grid.dy
    return w


def divergence(grid: Grid, w: VectorField) -> np.ndarray:
    return (w.u[:, 1:] - w.u[:, :-1]) / grid.dx + (w.v[1:, :] - w.v[:-1, :]) / grid.dy


def center_average(w: VectorField) -> np.ndarray:
    """Sum of the face-pair averages of both components, per cell."""
    return 0.5 * (w.u[:, 1:] + w.u[:, :-1]) + 0.5 * (w.v[1:, :] + w.v[:-1, :])


def face_average(grid: Grid, f: np.ndarray) -> VectorField:
    """Two-point arithmetic average of a cell field onto faces.

    Paper-mode boundary faces copy the adjacent cell value.
    """
    w = grid.vector()
    w.u[:, 1:-1] = 0.5 * (f[:, 1:] + f[:, :-1])
    w.v[1:-1, :] = 0.5 * (f[1:, :] + f[:-1, :])
    if grid.periodic:
        w.u[:, 0] = w.u[:, -1] = 0.5 * (f[:, 0] + f[:, -1])
        w.v[0, :] = w.v[-1, :] = 0.5 * (f[0, :] + f[-1, :])
    else:
        w.u[:, 0], w.u[:, -1] = f[:, 0], f[:, -1]
        w.v[0, :], w.v[-1, :] = f[0, :], f[-1, :]
    return w


def speed_squared(w: VectorField) -> np.ndarray:
    """|w|^2 at cell centres as the average of the squared face values.

    Averaging squares (rather than squaring averages) makes the cell-weighted
    sum of ``s * |w|^2`` equal the face-weighted sum of ``face(s) * w^2``.
    """
    return 0.5 * (w.u[:, 1:] ** 2 + w.u[:, :-1] ** 2) + 0.5 * (w.v[1:, :] ** 2 + w.v[:-1, :] ** 2)


def advect(grid: Grid, w: VectorField, f: np.ndarray) -> np.ndarray:
    """Centred transport term ``w . grad f`` at cell centres.

    Each face contributes the product of its normal velocity and the face
    difference of ``f``; the cell value is the average over its two faces in
    each direction.  This annihilates constants for any ``w``, and
    ``<s, advect(w, f)>`` equals the face sum of ``face_average(s) * w *
    grad f``, which is what lets the capillary work in the momentum equation
    cancel the transport work in the phase equation.
    """
    g = gradient(grid, f)
    return center_average(VectorField(w.u * g.u, w.v * g.v))


def _advect_x_component(u, v, hx, hy, periodic):
    """Skew-symmetric convection of ``u`` (x-faces) by the MAC velocity.

    Transport velocities on the dual cell around each x-face are two-point
    averages, so their dual divergence is the mean of the adjacent cell
    divergences.  Returns an array shaped like ``u``.
    """
    out = np.zeros_like(u)
    if periodic:
        nx = u.shape[1] - 1
        ny = v.shape[0] - 1
        p = u[:, :nx]
        e = np.roll(p, -1, axis=1)
        w_ = np.roll(p, 1, axis=1)
        n = np.roll(p, -1, axis=0)
        s = np.roll(p, 1, axis=0)
        vv = v[:ny, :]
        vs = 0.5 * (vv + np.roll(vv, 1, axis=1))
        vn = np.roll(vs, -1, axis=0)
        ue = 0.5 * (p + e)
        uw = 0.5 * (p + w_)
        res = 0.5 * (ue * (e - p) + uw * (p - w_)) / hx + 0.5 * (vn * (n - p) + vs * (p - s)) / hy
        out[:, :nx] = res
        out[:, nx] = res[:, 0]
        return out
    p = u[:, 1:-1]
    e = u[:, 2:]
    w_ = u[:, :-2]
    ghost = np.concatenate([-u[:1], u, -u[-1:]], axis=0)
    n = ghost[2:, 1:-1]
    s = ghost[:-2, 1:-1]
    vc = 0.5 * (v[:, :-1] + v[:, 1:])
    vn = vc[1:]
    vs = vc[:-1]
    ue = 0.5 * (p + e)
    uw = 0.5 * (p + w_)
    out[:, 1:-1] = 0.5 * (ue * (e - p) + uw * (p - w_)) / hx + 0.5 * (
        vn * (n - p) + vs * (p - s)
    ) / hy
    return out


def advect_vector(grid: Grid, w: VectorField) -> VectorField:
    """Convective term ``(w . grad) w`` on the faces."""
    au = _advect_x_component(w.u, w.v, grid.dx, grid.dy, grid.periodic)
    av = _advect_x_component(w.v.T, w.u.T, grid.dy, grid.dx, grid.periodic).T
    return VectorField(au, av)


def _laplacian_x_component(u, hx, hy, periodic):
    out = np.zeros_like(u)
    if periodic:
        nx = u.shape[1] - 1
        p = np.pad(u[:, :nx], 1, mode="wrap")
        c = p[1:-1, 1:-1]
        res = (p[1:-1, 2:] - 2 * c + p[1:-1, :-2]) / hx**2 + (p[2:, 1:-1] - 2 * c + p[:-2, 1:-1]) / hy**2
        out[:, :nx] = res
        out[:, nx] = res[:, 0]
        return out
    g = np.concatenate([-u[:1], u, -u[-1:]], axis=0)
    c = g[1:-1, 1:-1]
    out[:, 1:-1] = (g[1:-1, 2:] - 2 * c + g[1:-1, :-2]) / hx**2 + (
        g[2:, 1:-1] - 2 * c + g[:-2, 1:-1]
    ) / hy**2
    return out


def vector_laplacian(grid: Grid, w: VectorField) -> VectorField:
    """Componentwise five-point Laplacian with no-slip or periodic closure.

    Wall-normal boundary faces are not unknowns in paper mode and get zero.
    """
    lu = _laplacian_x_component(w.u, grid.dx, grid.dy, grid.periodic)
    lv = _laplacian_x_component(w.v.T, grid.dy, grid.dx, grid.periodic).T
    return VectorField(lu, lv)


def inner(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    """Cell-centred L2 inner product."""
    return float(np.sum(a * b)) * grid.cell_area


def inner_faces(grid: Grid, a: VectorField, b: VectorField) -> float:
    """Face L2 inner product; periodic duplicates are counted once."""
    if grid.periodic:
        s = np.sum(a.u[:, :-1] * b.u[:, :-1]) + np.sum(a.v[:-1, :] * b.v[:-1, :])
    else:
        s = np.sum(a.u * b.u) + np.sum(a.v * b.v)
    return float(s) * grid.cell_area


def grad_norm_sq(grid: Grid, f: np.ndarray) -> float:
    """||grad f||^2 from face differences (equals -<f, laplacian f>)."""
    g = gradient(grid, f)
    return inner_faces(grid, g, g)


def vector_grad_norm_sq(grid: Grid, w: VectorField) -> float:
    """||grad w||^2 defined as -<w, vector_laplacian w> (nonnegative)."""
    return -inner_faces(grid, w, vector_laplacian(grid, w))


class Norms(NamedTuple):
    l2: float
    h1: float
    h2: float


def norms(grid: Grid, f) -> Norms:
    """Discrete L2, H1 and Laplacian-based H2 norms of a scalar or vector field."""
    if isinstance(f, VectorField):
        l2sq = inner_faces(grid, f, f)
        h1sq = l2sq + vector_grad_norm_sq(grid, f)
        lap = vector_laplacian(grid, f)
        h2sq = h1sq + inner_faces(grid, lap, lap)
    else:
        l2sq = inner(grid, f, f)
        h1sq = l2sq + grad_norm_sq(grid, f)
        lap = laplacian(grid, f)
        h2sq = h1sq + inner(grid, lap, lap)
    return Norms(np.sqrt(l2sq), np.sqrt(h1sq), np.sqrt(h2sq))
