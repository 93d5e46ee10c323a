"""Uniform cell-centered meshes (1D interval / 2D rectangle) and discrete calculus.

Conventions:
  * fields live at cell centers, one value per cell;
  * fluxes and gradients live on interior faces, one array per axis;
  * boundary faces carry zero flux (no-flux boundary for the cell equations),
    the nutrient equation uses Dirichlet ghost cells instead.

All operators are pure functions of their inputs.  ``integrate`` accumulates
in a fixed order so repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform structured mesh on an interval or axis-aligned rectangle."""

    dim: int
    extents: tuple[float, ...]
    cells: tuple[int, ...]
    h: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"grid dim must be 1 or 2, got {self.dim}")
        if len(self.extents) != self.dim or len(self.cells) != self.dim:
            raise ValueError("extents/cells length must match dim")
        for n in self.cells:
            if n < 3:
                raise ValueError(f"need at least 3 cells per axis, got {n}")
        for e in self.extents:
            if not (e > 0.0):
                raise ValueError(f"extents must be positive, got {e}")
        object.__setattr__(
            self, "h", tuple(e / n for e, n in zip(self.extents, self.cells))
        )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.cells))

    @property
    def cell_volume(self) -> float:
        vol = 1.0
        for hi in self.h:
            vol *= hi
        return vol

    def centers(self, axis: int = 0) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        n = self.cells[axis]
        h = self.h[axis]
        return (np.arange(n) + 0.5) * h

    def coordinate_fields(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinates, broadcast to the full cell shape."""
        if self.dim == 1:
            return (self.centers(0),)
        x = self.centers(0)[:, None] + np.zeros(self.cells)
        y = self.centers(1)[None, :] + np.zeros(self.cells)
        return x, y


@dataclass(frozen=True)
class Field:
    """A scalar cell field bound to its grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(
                f"field shape {v.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def full(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls.full(grid, 0.0)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


def face_gradient(f: Field) -> tuple[np.ndarray, ...]:
    """Two-point gradient on interior faces, one array per axis.

    1D: shape (nx-1,).  2D: x-faces (nx-1, ny) and y-faces (nx, ny-1).
    Boundary faces are excluded (no-flux).
    """
    g = f.grid
    v = f.values
    if g.dim == 1:
        return ((v[1:] - v[:-1]) / g.h[0],)
    gx = (v[1:, :] - v[:-1, :]) / g.h[0]
    gy = (v[:, 1:] - v[:, :-1]) / g.h[1]
    return gx, gy


def divergence(grid: Grid, fluxes: tuple[np.ndarray, ...]) -> np.ndarray:
    """Per-cell divergence of interior-face fluxes; boundary flux is zero.

    The cell-volume-weighted sum of the result telescopes to zero, which is
    what makes the implicit density update conservative.
    """
    out = np.zeros(grid.shape)
    if grid.dim == 1:
        q = fluxes[0]
        out[:-1] += q / grid.h[0]
        out[1:] -= q / grid.h[0]
        return out
    qx, qy = fluxes
    out[:-1, :] += qx / grid.h[0]
    out[1:, :] -= qx / grid.h[0]
    out[:, :-1] += qy / grid.h[1]
    out[:, 1:] -= qy / grid.h[1]
    return out


def laplacian_neumann(f: Field) -> np.ndarray:
    """No-flux Laplacian: divergence of the interior face gradients.

    Composing the two operators (rather than writing out stencils) keeps the
    discrete conservation identity exact by construction.
    """
    return divergence(f.grid, face_gradient(f))


def laplacian_dirichlet(f: Field, boundary_value: float) -> np.ndarray:
    """Laplacian with Dirichlet data via linearly extrapolated ghost cells.

    The ghost value 2*boundary_value - interior puts the boundary value on
    the face, giving second-order accuracy at the wall.
    """
    g = f.grid
    v = f.values
    out = laplacian_neumann(f)
    # Neumann part has zero boundary-face flux; add the Dirichlet correction
    # (ghost - interior)/h = 2*(boundary_value - interior)/h per boundary face.
    if g.dim == 1:
        h = g.h[0]
        out = out.copy()
        out[0] += 2.0 * (boundary_value - v[0]) / h**2
        out[-1] += 2.0 * (boundary_value - v[-1]) / h**2
        return out
    hx, hy = g.h
    out = out.copy()
    out[0, :] += 2.0 * (boundary_value - v[0, :]) / hx**2
    out[-1, :] += 2.0 * (boundary_value - v[-1, :]) / hx**2
    out[:, 0] += 2.0 * (boundary_value - v[:, 0]) / hy**2
    out[:, -1] += 2.0 * (boundary_value - v[:, -1]) / hy**2
    return out


def integrate(f: Field) -> float:
    """Midpoint-rule integral: sum of cell values times cell volume."""
    return float(np.sum(f.values)) * f.grid.cell_volume


def upwind_face_values(
    left: np.ndarray, right: np.ndarray, velocity: np.ndarray
) -> np.ndarray:
    """Upwind value per face; a zero-velocity tie takes the arithmetic mean."""
    return np.where(velocity > 0.0, left, np.where(velocity < 0.0, right, 0.5 * (left + right)))


def upwind_face_value(c: Field, velocity_at_face: float, face, axis: int = 0) -> float:
    """Upwind value of ``c`` at a single interior face.

    In 1D ``face`` is an int: face ``i`` separates cells ``i`` and ``i+1``.
    In 2D ``face`` is an ``(i, j)`` index into the face array along ``axis``.
    """
    if c.grid.dim == 1:
        left = c.values[face]
        right = c.values[face + 1]
    else:
        i, j = face
        if axis == 0:
            left, right = c.values[i, j], c.values[i + 1, j]
        else:
            left, right = c.values[i, j], c.values[i, j + 1]
    if velocity_at_face > 0.0:
        return float(left)
    if velocity_at_face < 0.0:
        return float(right)
    return float(0.5 * (left + right))
