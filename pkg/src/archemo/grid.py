"""Cell-centered uniform grid with zero-flux boundaries and the spatial operators.

The unknowns live at cell centers; homogeneous Neumann conditions are realized
by mirror reflection across each boundary face, which for a cell-centered grid
simply copies the first interior value into the ghost layer.  Both operators
are in conservative form with zero flux through boundary faces, so their
midpoint-rule integral telescopes to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit

__all__ = [
    "Grid",
    "ImaginaryStateError",
    "laplacian",
    "chemo_divergence",
    "integrate",
]


class ImaginaryStateError(RuntimeError):
    """Raised when a fractional power of a negative value is requested."""


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered rectangular grid.

    Cell (i, j) is centered at (x_min + (i + 1/2) dx, y_min + (j + 1/2) dy)
    with dx = (x_max - x_min) / nx.  Defaults give the unit square centered
    at the origin.
    """

    nx: int
    ny: int
    x_min: float = -0.5
    x_max: float = 0.5
    y_min: float = -0.5
    y_max: float = 0.5

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell per direction")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("domain bounds must be strictly ordered")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @cached_property
    def xc(self) -> np.ndarray:
        # centered form: mirror-image cells get bitwise-equal |coordinates|
        mid = 0.5 * (self.x_min + self.x_max)
        return mid + (np.arange(self.nx) - 0.5 * (self.nx - 1)) * self.dx

    @cached_property
    def yc(self) -> np.ndarray:
        mid = 0.5 * (self.y_min + self.y_max)
        return mid + (np.arange(self.ny) - 0.5 * (self.ny - 1)) * self.dy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinate arrays of shape (nx, ny)."""
        return np.meshgrid(self.xc, self.yc, indexing="ij")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def sample(self, fn) -> np.ndarray:
        """Evaluate ``fn(X, Y)`` at the cell centers."""
        X, Y = self.mesh()
        return np.asarray(fn(X, Y), dtype=float)


@njit(cache=True)
def _laplacian_kernel(f, inv_dx2, inv_dy2, out):
    nx, ny = f.shape
    for i in range(nx):
        im = i - 1 if i > 0 else 0
        ip = i + 1 if i < nx - 1 else nx - 1
        for j in range(ny):
            jm = j - 1 if j > 0 else 0
            jp = j + 1 if j < ny - 1 else ny - 1
            out[i, j] = (f[ip, j] + f[im, j] - 2.0 * f[i, j]) * inv_dx2 + (
                f[i, jp] + f[i, jm] - 2.0 * f[i, j]
            ) * inv_dy2


@njit(cache=True)
def _chemo_kernel(u, s, k, inv_dx, inv_dy, out):
    # face flux = ((u_L + u_R)/2)^k * (s_R - s_L)/h, zero on boundary faces
    nx, ny = u.shape
    for i in range(nx):
        for j in range(ny):
            fe = 0.0
            fw = 0.0
            fn = 0.0
            fs = 0.0
            if i < nx - 1:
                um = 0.5 * (u[i, j] + u[i + 1, j])
                uk = um if k == 1.0 else um**k
                fe = uk * (s[i + 1, j] - s[i, j]) * inv_dx
            if i > 0:
                um = 0.5 * (u[i - 1, j] + u[i, j])
                uk = um if k == 1.0 else um**k
                fw = uk * (s[i, j] - s[i - 1, j]) * inv_dx
            if j < ny - 1:
                um = 0.5 * (u[i, j] + u[i, j + 1])
                uk = um if k == 1.0 else um**k
                fn = uk * (s[i, j + 1] - s[i, j]) * inv_dy
            if j > 0:
                um = 0.5 * (u[i, j - 1] + u[i, j])
                uk = um if k == 1.0 else um**k
                fs = uk * (s[i, j] - s[i, j - 1]) * inv_dy
            out[i, j] = (fe - fw) * inv_dx + (fn - fs) * inv_dy


def _as_field(grid: Grid, f) -> np.ndarray:
    f = np.ascontiguousarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")
    return f


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Five-point Laplacian with mirror-reflected ghost cells (zero flux)."""
    f = _as_field(grid, f)
    out = np.empty_like(f)
    _laplacian_kernel(f, 1.0 / grid.dx**2, 1.0 / grid.dy**2, out)
    return out


def chemo_divergence(grid: Grid, u: np.ndarray, s: np.ndarray, k: float) -> np.ndarray:
    """Divergence of the taxis flux u^k grad(s) in conservative face form.

    Face values of u^k are the arithmetic mean of the adjacent cells raised
    to the k-th power; boundary faces carry zero flux.  Raises
    ImaginaryStateError if a fractional k meets a negative face mean.
    """
    u = _as_field(grid, u)
    s = _as_field(grid, s)
    k = float(k)
    if not k.is_integer():
        bad = _first_negative_face(u)
        if bad is not None:
            raise ImaginaryStateError(
                f"fractional exponent k={k} applied to negative face value "
                f"at face {bad}"
            )
    out = np.empty_like(u)
    _chemo_kernel(u, s, k, 1.0 / grid.dx, 1.0 / grid.dy, out)
    return out


def _first_negative_face(u: np.ndarray):
    """Index of the first interior face whose mean value is negative, if any."""
    fx = u[1:, :] + u[:-1, :]
    if np.any(fx < 0.0):
        i, j = np.unravel_index(int(np.argmax(fx < 0.0)), fx.shape)
        return ("x", int(i), int(j))
    fy = u[:, 1:] + u[:, :-1]
    if np.any(fy < 0.0):
        i, j = np.unravel_index(int(np.argmax(fy < 0.0)), fy.shape)
        return ("y", int(i), int(j))
    return None


def integrate(grid: Grid, f: np.ndarray) -> float:
    """Midpoint-rule quadrature dx*dy*sum(f) with a fixed reduction order."""
    f = _as_field(grid, f)
    return float(grid.cell_area * np.sum(f))
