"""Thin adapter: numpy (ny, nx) arrays in, numpy arrays out.

The core library speaks in grid/field objects; this module translates to
and from contiguous float64 arrays and manages the forward/backward token
lifecycle, with nothing numerical of its own.
"""

from __future__ import annotations

import threading

import numpy as np

import diffmarch as dm


def _as_plane(values, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2D (ny, nx) array, got shape {arr.shape}")
    return arr


def _grid_for(arr: np.ndarray, h: float) -> dm.Grid2D:
    ny, nx = arr.shape
    return dm.make_grid(nx, ny, h)


def _seed_set(grid: dm.Grid2D, seeds) -> dm.SeedSet:
    return dm.SeedSet.from_coords(grid, [(int(i), int(j)) for i, j in seeds])


class SolveToken:
    """Single-use record of one forward solve, consumed by :func:`py_vjp`.

    Holds the distance field and the potential until the backward call (or
    garbage collection) releases them.  Tokens are single-owner: a second
    backward call raises.
    """

    _live = 0
    _live_lock = threading.Lock()

    def __init__(self, field: dm.DistanceField, phi: dm.PotentialField):
        self._field = field
        self._phi = phi
        self._consumed = False
        self._lock = threading.Lock()
        with SolveToken._live_lock:
            SolveToken._live += 1
        self._counted = True

    @classmethod
    def live_count(cls) -> int:
        with cls._live_lock:
            return cls._live

    def _take(self) -> tuple[dm.DistanceField, dm.PotentialField]:
        with self._lock:
            if self._consumed:
                raise RuntimeError("solve token already consumed")
            self._consumed = True
            field, phi = self._field, self._phi
            self._field = None
            self._phi = None
        self._uncount()
        return field, phi

    def _uncount(self) -> None:
        if self._counted:
            self._counted = False
            with SolveToken._live_lock:
                SolveToken._live -= 1

    def __del__(self):
        self._uncount()


def py_solve(phi, seeds, h: float):
    """Forward solve: returns (u, token).

    ``phi`` is a strictly positive (ny, nx) array, ``seeds`` an iterable of
    (i, j) pairs, ``h`` the grid spacing.  ``u`` is the (ny, nx) distance
    array, bitwise-equal to the core solver's output; ``token`` retains the
    causal record for one :func:`py_vjp` call.
    """
    plane = _as_plane(phi, "phi")
    grid = _grid_for(plane, h)
    potential = dm.PotentialField(grid, plane.reshape(-1))
    field = dm.fast_march(grid, potential, _seed_set(grid, seeds))
    u = field.u.reshape(grid.ny, grid.nx).copy()
    return u, SolveToken(field, potential)


def py_vjp(token: SolveToken, u_bar):
    """Backward solve: potential gradient for the cotangent ``u_bar``.

    Consumes the token; a stale or already-consumed token raises.
    """
    if not isinstance(token, SolveToken):
        raise TypeError("py_vjp needs the token returned by py_solve")
    field, phi = token._take()
    plane = _as_plane(u_bar, "u_bar")
    if plane.shape != (field.grid.ny, field.grid.nx):
        raise ValueError(
            f"u_bar shape {plane.shape} does not match solve shape "
            f"({field.grid.ny}, {field.grid.nx})"
        )
    cotangent = dm.ScalarField(field.grid, plane.reshape(-1))
    grad = dm.vjp(field, phi, cotangent)
    return grad.g.reshape(field.grid.ny, field.grid.nx).copy()


def py_soft_mask(u, h: float, delta: float):
    """Sigmoid unit-ball mask of a distance array (pointwise)."""
    plane = _as_plane(u, "u")
    grid = _grid_for(plane, h)
    n = grid.n
    field = dm.DistanceField(
        grid,
        plane.reshape(-1),
        np.zeros(n, dtype=np.int8),
        np.full(n, -1, dtype=np.int64),
        np.full(n, -1, dtype=np.int64),
        np.arange(n, dtype=np.int64),
        np.arange(n, dtype=np.int64),
    )
    return dm.soft_mask(field, delta).values.reshape(grid.ny, grid.nx).copy()


def py_fit(target, h: float, seed=None, **config):
    """Inverse fit on a binary (ny, nx) target mask.

    ``seed`` is an optional (i, j) pair (defaults to the mask barycenter
    node); remaining keyword arguments go to the fit configuration.
    Returns (phi, trace) with ``phi`` the fitted (ny, nx) potential and
    ``trace`` a dict of per-iteration lists (loss, iou, grad_norm).
    """
    plane = _as_plane(target, "target")
    grid = _grid_for(plane, h)
    target_field = dm.ScalarField(grid, plane.reshape(-1))
    seed_set = None if seed is None else _seed_set(grid, [seed])
    cfg = dm.FitConfig(**config)
    phi, trace = dm.fit_potential(grid, target_field, seed=seed_set, cfg=cfg)
    return (
        phi.values.reshape(grid.ny, grid.nx).copy(),
        {"loss": list(trace.losses), "iou": list(trace.ious), "grad_norm": list(trace.grad_norms)},
    )
