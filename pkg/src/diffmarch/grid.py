"""Grid geometry, scalar fields and seed sets.

Conventions used everywhere in the library:

* linear indices are row major, ``p = j * nx + i`` with column ``i`` in
  ``[0, nx)`` and row ``j`` in ``[0, ny)``;
* physical coordinates are ``(x, y) = (i * h, j * h)``;
* axis 0 is the x axis (``p +- 1``), axis 1 the y axis (``p +- nx``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

AXIS_X = 0
AXIS_Y = 1


@dataclass(frozen=True)
class Grid2D:
    """Rectangular 2D grid: nx columns, ny rows, uniform spacing h."""

    nx: int
    ny: int
    h: float

    def __post_init__(self):
        if not isinstance(self.nx, (int, np.integer)) or isinstance(self.nx, bool) or self.nx < 2:
            raise ValidationError(f"nx out of range: {self.nx!r} (need an integer >= 2)")
        if not isinstance(self.ny, (int, np.integer)) or isinstance(self.ny, bool) or self.ny < 2:
            raise ValidationError(f"ny out of range: {self.ny!r} (need an integer >= 2)")
        h = float(self.h)
        if not np.isfinite(h) or h <= 0.0:
            raise ValidationError(f"h out of range: {self.h!r} (need a finite positive spacing)")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        """Total number of nodes."""
        return self.nx * self.ny

    def index(self, i: int, j: int) -> int:
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise IndexError(f"node ({i}, {j}) outside {self.nx}x{self.ny} grid")
        return j * self.nx + i

    def coords(self, p: int) -> tuple[int, int]:
        if not (0 <= p < self.n):
            raise IndexError(f"linear index {p} outside grid with {self.n} nodes")
        return p % self.nx, p // self.nx

    def xy(self, p: int) -> tuple[float, float]:
        i, j = self.coords(p)
        return i * self.h, j * self.h


def make_grid(nx: int, ny: int, h: float) -> Grid2D:
    """Build a validated grid; errors name the offending field."""
    return Grid2D(nx, ny, h)


def neighbors(grid: Grid2D, p: int) -> list[tuple[int, int]]:
    """In-bounds axis neighbors of node p as (index, axis) pairs.

    Order is fixed: x-minus, x-plus, y-minus, y-plus; out-of-bounds
    candidates are omitted (equivalent to a +inf value in the upwind
    minimization).
    """
    i, j = grid.coords(p)
    out = []
    if i > 0:
        out.append((p - 1, AXIS_X))
    if i < grid.nx - 1:
        out.append((p + 1, AXIS_X))
    if j > 0:
        out.append((p - grid.nx, AXIS_Y))
    if j < grid.ny - 1:
        out.append((p + grid.nx, AXIS_Y))
    return out


@dataclass(frozen=True)
class ScalarField:
    """A real scalar field over a grid, stored as a flat float64 array."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        if values.size != self.grid.n:
            raise ValidationError(
                f"field has {values.size} values, grid has {self.grid.n} nodes"
            )
        if not np.isfinite(values).all():
            raise ValidationError("field values must be finite")
        object.__setattr__(self, "values", values)

    def to_matrix(self) -> np.ndarray:
        """View of the values as an (ny, nx) matrix."""
        return self.values.reshape(self.grid.ny, self.grid.nx)


@dataclass(frozen=True)
class PotentialField(ScalarField):
    """Strictly positive scalar field (an isotropic metric potential)."""

    def __post_init__(self):
        super().__post_init__()
        if not (self.values > 0.0).all():
            raise ValidationError("potential must be strictly positive everywhere")


def square_potential(raw: ScalarField, epsilon: float = 1e-6) -> PotentialField:
    """Map a raw field to the strictly positive potential raw**2 + epsilon."""
    epsilon = float(epsilon)
    if not np.isfinite(epsilon) or epsilon <= 0.0:
        raise ValidationError(f"epsilon out of range: {epsilon!r} (need > 0)")
    return PotentialField(raw.grid, raw.values * raw.values + epsilon)


@dataclass(frozen=True)
class SeedSet:
    """Nonempty set of seed nodes, stored as linear indices."""

    points: tuple[int, ...]

    def __post_init__(self):
        points = tuple(int(p) for p in self.points)
        if not points:
            raise ValidationError("seed set must be nonempty")
        if any(p < 0 for p in points):
            raise ValidationError("seed indices must be nonnegative")
        if len(set(points)) != len(points):
            raise ValidationError("seed set contains duplicate indices")
        object.__setattr__(self, "points", points)

    @classmethod
    def from_coords(cls, grid: Grid2D, coords) -> "SeedSet":
        """Build a seed set from (i, j) pairs, validating against the grid."""
        return cls(tuple(grid.index(i, j) for i, j in coords))

    def validate_on(self, grid: Grid2D) -> None:
        for p in self.points:
            if p >= grid.n:
                raise ValidationError(f"seed index {p} outside grid with {grid.n} nodes")
