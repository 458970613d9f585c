"""Fast Marching solver for the discrete Eikonal equation on a 2D grid.

Computes the viscosity solution u of ``||grad u|| = phi`` with ``u = 0`` on a
seed set, by accepting nodes in non-decreasing order of distance and solving
the upwind two-case update at each front node.  The per-node update case and
parent indices are recorded so the solution can be differentiated with
respect to the potential afterwards (see ``diffmarch.gradient``).

A single solve is inherently sequential (the acceptance order is the
algorithm); distinct solves never share state and may run in parallel.
Fields are immutable after construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import inf, sqrt

import numpy as np

from ._backend import solve_kernel
from .errors import ValidationError
from .grid import AXIS_X, AXIS_Y, Grid2D, PotentialField, ScalarField, SeedSet


class UpdateCase(enum.IntEnum):
    """How a node's distance value was produced."""

    SEED = 0
    ONE_PARENT = 1
    TWO_PARENT = 2


@dataclass(frozen=True)
class UpdateRecord:
    """Causal record of one accepted node: case, parents and acceptance rank."""

    case: UpdateCase
    parents: tuple[tuple[int, int], ...]  # (node index, axis) pairs
    accepted_rank: int


def upwind_update(u_a: float, u_b: float, phi_p: float, h: float) -> tuple[float, UpdateCase]:
    """Solve the local upwind update for one node.

    ``u_a`` and ``u_b`` are the axis-wise neighbor minima on the x and y axis
    (either may be +inf when the axis has no usable neighbor).  Returns the
    larger root of ``(u - u_a)**2 + (u - u_b)**2 = (h * phi_p)**2`` when both
    minima are finite and ``(h*phi_p)**2 > (u_a - u_b)**2`` (two parents),
    otherwise the affine value ``min(u_a, u_b) + h * phi_p`` (one parent).
    The coincident case boundary resolves to the one-parent branch; both
    branches agree in value there.
    """
    phi_p = float(phi_p)
    h = float(h)
    u_a = float(u_a)
    u_b = float(u_b)
    if not np.isfinite(phi_p) or phi_p <= 0.0:
        raise ValidationError(f"phi_p out of range: {phi_p!r} (need > 0)")
    if not np.isfinite(h) or h <= 0.0:
        raise ValidationError(f"h out of range: {h!r} (need > 0)")
    if u_a == inf and u_b == inf:
        raise RuntimeError("upwind_update called with both axis minima infinite (caller bug)")

    # Arithmetic mirrors the solver kernels so records stay consistent.
    if u_a < inf and u_b < inf:
        diff = u_a - u_b
        hphi = h * phi_p
        if hphi * hphi > diff * diff:
            value = 0.5 * (u_a + u_b + sqrt(2.0 * hphi * hphi - diff * diff))
            return value, UpdateCase.TWO_PARENT
    if u_a <= u_b:
        return u_a + h * phi_p, UpdateCase.ONE_PARENT
    return u_b + h * phi_p, UpdateCase.ONE_PARENT


@dataclass(frozen=True)
class DistanceField:
    """Geodesic distance map plus the causal record of its computation.

    ``u`` is the solved distance (0 exactly on the seed set), ``case_codes``
    the per-node :class:`UpdateCase` value, ``parent_a``/``parent_b`` the
    parent node indices (x-axis / y-axis parent for two-parent nodes, the
    single parent in ``parent_a`` otherwise, -1 when absent), ``order`` the
    acceptance sequence and ``rank`` its inverse permutation.
    """

    grid: Grid2D
    u: np.ndarray
    case_codes: np.ndarray
    parent_a: np.ndarray
    parent_b: np.ndarray
    order: np.ndarray
    rank: np.ndarray

    def record(self, p: int) -> UpdateRecord:
        """Per-node causal record as a structured object."""
        case = UpdateCase(int(self.case_codes[p]))
        parents: list[tuple[int, int]] = []
        if case is UpdateCase.TWO_PARENT:
            parents = [(int(self.parent_a[p]), AXIS_X), (int(self.parent_b[p]), AXIS_Y)]
        elif case is UpdateCase.ONE_PARENT:
            q = int(self.parent_a[p])
            axis = AXIS_X if abs(p - q) == 1 else AXIS_Y
            parents = [(q, axis)]
        return UpdateRecord(case, tuple(parents), int(self.rank[p]))

    @property
    def seeds(self) -> np.ndarray:
        return np.flatnonzero(self.case_codes == int(UpdateCase.SEED))


def fast_march(grid: Grid2D, phi: PotentialField, seeds: SeedSet) -> DistanceField:
    """Solve the discrete Eikonal equation from a seed set.

    All nx*ny nodes are accepted exactly once, in non-decreasing distance
    order; heap ties break toward the lower linear index so records (and
    therefore gradients) are reproducible.
    """
    if phi.grid != grid:
        raise ValidationError("potential is defined on a different grid")
    seeds.validate_on(grid)

    seed_arr = np.array(seeds.points, dtype=np.int64)
    u, case_codes, parent_a, parent_b, order = solve_kernel(
        grid.nx, grid.ny, grid.h, phi.values, seed_arr
    )
    rank = np.empty(grid.n, dtype=np.int64)
    rank[order] = np.arange(grid.n, dtype=np.int64)
    return DistanceField(grid, u, case_codes, parent_a, parent_b, order, rank)


def geodesic_distance_to_set(field: DistanceField, threshold: float) -> ScalarField:
    """Hard geodesic ball: binary field, 1 where u <= threshold, else 0."""
    threshold = float(threshold)
    if not threshold >= 0.0:
        raise ValidationError(f"threshold out of range: {threshold!r} (need >= 0)")
    return ScalarField(field.grid, (field.u <= threshold).astype(np.float64))
