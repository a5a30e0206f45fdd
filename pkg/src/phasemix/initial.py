"""Initial data builders and the deterministic noise generator."""
from __future__ import annotations

import numpy as np

from . import grid as G
from . import linsolve as LS

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First ``n`` outputs of SplitMix64 started from ``seed``.

    Output ``i`` mixes the state ``seed + (i + 1) * golden`` (mod 2^64),
    which is what the sequential generator produces.
    """
    with np.errstate(over="ignore"):
        z = np.uint64(seed % 2**64) + (np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def uniform_noise(seed: int, shape: tuple[int, int]) -> np.ndarray:
    """Uniform values in [-1, 1) drawn row-major (y outer, x inner)."""
    n = shape[0] * shape[1]
    bits = splitmix64(seed, n) >> np.uint64(11)
    unit = bits.astype(np.float64) * 2.0**-53
    return (2.0 * unit - 1.0).reshape(shape)


def noise_phi(grid: G.Grid, mean: float, amplitude: float, seed: int) -> np.ndarray:
    """``mean + amplitude * xi`` with ``xi`` re-centred to zero mean."""
    xi = uniform_noise(seed, grid.shape)
    return mean + amplitude * (xi - xi.mean())


def unit_noise(grid: G.Grid, seed: int) -> np.ndarray:
    """Zero-mean noise normalised to unit discrete L2 norm."""
    xi = uniform_noise(seed, grid.shape)
    xi -= xi.mean()
    return xi / np.sqrt(np.sum(xi * xi) * grid.cell_area)


def tanh_stripe(grid: G.Grid, amplitude: float, width: float) -> np.ndarray:
    """Horizontal band of the +1 phase occupying the middle half in y."""
    _, y = grid.centers()
    d = grid.ly / 4.0 - np.abs(y - grid.ly / 2.0)
    return amplitude * np.tanh(d / (np.sqrt(2.0) * width))


def tanh_disk(grid: G.Grid, amplitude: float, width: float, radius: float) -> np.ndarray:
    x, y = grid.centers()
    r = np.hypot(x - grid.lx / 2.0, y - grid.ly / 2.0)
    return amplitude * np.tanh((radius - r) / (np.sqrt(2.0) * width))


def shear_velocity(grid: G.Grid, amplitude: float) -> G.VectorField:
    """``(A sin(2 pi y / ly), 0)`` sampled on x-faces.

    Exactly divergence-free when periodic.  With walls the side faces are
    pinned to zero, so the sample is projected onto discretely
    divergence-free fields.
    """
    w = grid.vector()
    _, y = grid.x_faces()
    w.u[:] = amplitude * np.sin(2.0 * np.pi * y / grid.ly)
    G.enforce_bc(grid, w)
    if not grid.periodic:
        w, _ = LS.project(grid, w)
    return w


def streamfunction_velocity(grid: G.Grid, psi: np.ndarray) -> G.VectorField:
    """MAC velocity ``(d psi/dy, -d psi/dx)`` from corner values of ``psi``.

    Discretely divergence-free on any grid.
    """
    w = grid.vector()
    w.u[:] = (psi[1:, :] - psi[:-1, :]) / grid.dy
    w.v[:] = -(psi[:, 1:] - psi[:, :-1]) / grid.dx
    return w


def taylor_green(grid: G.Grid, amplitude: float) -> G.VectorField:
    x, y = grid.corners()
    psi = amplitude * grid.ly / (2 * np.pi) * np.sin(2 * np.pi * x / grid.lx) * np.sin(2 * np.pi * y / grid.ly)
    return G.enforce_bc(grid, streamfunction_velocity(grid, psi))
