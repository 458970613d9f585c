"""Differentiation of the geodesic distance with respect to the potential.

Two routes are provided and cross-checked in the tests:

* :func:`subgradient_march` propagates full derivative rows forward in
  acceptance order (faithful to the marching recurrence, O(n^2) memory in
  the worst case; meant for analysis and verification);
* :func:`vjp` accumulates the same Jacobian transposed, in reverse
  acceptance order, in O(n) per sweep (the route an optimization loop uses).

Both differentiate the piecewise-smooth regime obtained by freezing the
update cases and parents recorded during the forward solve.  For a node
accepted with two parents a and b the recurrence is

    D u_p = w_a D u_a + w_b D u_b + (h^2 phi_p / S) e_p,
    w_a = (u_p - u_a) / S,  w_b = (u_p - u_b) / S,
    S = (u_p - u_a) + (u_p - u_b),

and for a one-parent node ``D u_p = D u_parent + h e_p``; seed rows vanish.
S equals sqrt(2 h^2 phi_p^2 - (u_a - u_b)^2) > 0, so no guard is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from ._backend import vjp_kernel
from .errors import ValidationError
from .grid import Grid2D, PotentialField, ScalarField, SeedSet
from .solver import DistanceField, UpdateCase, fast_march


@dataclass(frozen=True)
class SparseRow:
    """One derivative row D u_p, stored as (node index, coefficient) pairs."""

    entries: tuple[tuple[int, float], ...]

    def to_dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for idx, coeff in self.entries:
            out[idx] = coeff
        return out


@dataclass(frozen=True)
class GradientField:
    """Dense gradient with respect to the potential, d(loss)/d(phi)."""

    grid: Grid2D
    g: np.ndarray

    def __post_init__(self):
        g = np.ascontiguousarray(self.g, dtype=np.float64).reshape(-1)
        if g.size != self.grid.n:
            raise ValidationError(f"gradient has {g.size} values, grid has {self.grid.n} nodes")
        if not np.isfinite(g).all():
            raise ValidationError("gradient values must be finite")
        object.__setattr__(self, "g", g)


def subgradient_march(
    grid: Grid2D, phi: PotentialField, seeds: SeedSet, targets: Sequence[int]
) -> list[SparseRow]:
    """Forward-mode derivative rows D u_p for each target node p.

    Rows are propagated densely in acceptance order up to the latest target,
    so memory is O(n * max_rank).  A target that is a seed yields an empty
    row (the distance there is identically zero).
    """
    targets = [int(t) for t in targets]
    for t in targets:
        if not (0 <= t < grid.n):
            raise ValidationError(f"target index {t} outside grid with {grid.n} nodes")

    field = fast_march(grid, phi, seeds)
    u = field.u
    h = grid.h
    max_rank = max(int(field.rank[t]) for t in targets)

    rows = np.zeros((grid.n, grid.n))
    for p in field.order[: max_rank + 1]:
        code = field.case_codes[p]
        if code == int(UpdateCase.SEED):
            continue
        if code == int(UpdateCase.ONE_PARENT):
            np.copyto(rows[p], rows[field.parent_a[p]])
            rows[p, p] += h
        else:
            a = field.parent_a[p]
            b = field.parent_b[p]
            sa = u[p] - u[a]
            sb = u[p] - u[b]
            s = sa + sb
            np.multiply(rows[a], sa / s, out=rows[p])
            rows[p] += (sb / s) * rows[b]
            rows[p, p] += h * h * phi.values[p] / s

    out = []
    for t in targets:
        nz = np.flatnonzero(rows[t])
        out.append(SparseRow(tuple((int(i), float(rows[t, i])) for i in nz)))
    return out


def vjp(field: DistanceField, phi: PotentialField, u_bar: ScalarField) -> GradientField:
    """Adjoint (vector-Jacobian product): g = J^T u_bar without forming J.

    ``u_bar`` holds d(loss)/d(u_p); the result holds d(loss)/d(phi_p), for
    the Jacobian realized by the forward solve whose records live in
    ``field``.  The sweep runs in reverse acceptance order, O(n).
    """
    if phi.grid != field.grid:
        raise ValidationError("potential is defined on a different grid")
    if u_bar.grid != field.grid:
        raise ValidationError("u_bar is defined on a different grid")
    g = vjp_kernel(
        field.grid.nx,
        field.grid.ny,
        field.grid.h,
        phi.values,
        field.u,
        field.case_codes,
        field.parent_a,
        field.parent_b,
        field.order,
        u_bar.values,
    )
    return GradientField(field.grid, g)


def fd_gradient(
    grid: Grid2D,
    phi: PotentialField,
    seeds: SeedSet,
    loss: Callable[[DistanceField], float],
    step: float | None = None,
    pixels: Sequence[int] | None = None,
) -> GradientField:
    """Central finite differences of ``loss(fast_march(phi))`` in phi.

    The verification oracle for the analytic routes.  ``step=None`` uses the
    per-pixel default ``1e-5 * (1 + |phi_p|)``.  ``pixels`` restricts probing
    to a subset (other entries stay zero).  The caller must keep
    ``phi_p - step > 0``; the probe raises otherwise.
    """
    if step is not None:
        step = float(step)
        if not step > 0.0:
            raise ValidationError(f"step out of range: {step!r} (need > 0)")
    probe = range(grid.n) if pixels is None else [int(p) for p in pixels]

    g = np.zeros(grid.n)
    base = phi.values
    for p in probe:
        t = step if step is not None else 1e-5 * (1.0 + abs(base[p]))
        plus = base.copy()
        plus[p] += t
        minus = base.copy()
        minus[p] -= t
        f_plus = loss(fast_march(grid, PotentialField(grid, plus), seeds))
        f_minus = loss(fast_march(grid, PotentialField(grid, minus), seeds))
        g[p] = (f_plus - f_minus) / (2.0 * t)
    return GradientField(grid, g)


def random_smooth_potential(
    grid: Grid2D,
    rng: np.random.Generator,
    low: float = 0.5,
    high: float = 1.5,
    smoothing_passes: int = 2,
) -> PotentialField:
    """Random positive potential, box-smoothed so FD probes rarely cross an
    update-case switch.  Used by gradient checks and the gradcheck CLI."""
    if not low > 0.0 or not high > low:
        raise ValidationError("need 0 < low < high for a positive potential")
    values = rng.uniform(low, high, size=(grid.ny, grid.nx))
    for _ in range(smoothing_passes):
        values = ndimage.uniform_filter(values, size=3, mode="nearest")
    return PotentialField(grid, values.reshape(-1))
