"""Pure-Python solver kernels (fallback backend).

The compiled backend in ``_core.pyx`` mirrors the arithmetic of this module
expression for expression; both must produce bitwise-identical outputs.
Any change to a formula here has to be copied there.

Update cases follow the two-branch discrete Eikonal solve: a node accepted
with two parents (one per axis) gets the larger root of

    (u - u_a)**2 + (u - u_b)**2 = (h * phi)**2,

otherwise the affine single-parent value ``min(u_a, u_b) + h * phi``.  The
quadratic branch applies only when both axis minima are finite and
``(h*phi)**2 > (u_a - u_b)**2``; the coincident boundary falls to the affine
branch (both branches agree in value there).
"""

from __future__ import annotations

import heapq
from math import inf, sqrt

import numpy as np

CASE_SEED = 0
CASE_ONE_PARENT = 1
CASE_TWO_PARENT = 2


def solve_kernel(nx, ny, h, phi, seeds):
    """Fast Marching sweep over the whole grid.

    Parameters are plain arrays: ``phi`` flat float64 of length nx*ny
    (strictly positive), ``seeds`` int64 indices.  Returns
    ``(u, case, parent_a, parent_b, order)`` where ``parent_a`` holds the
    x-axis parent of two-parent nodes (or the single parent), ``parent_b``
    the y-axis parent, -1 when absent, and ``order[k]`` is the node accepted
    k-th.
    """
    n = nx * ny
    h = float(h)
    phi_l = [float(v) for v in phi]

    u = [inf] * n
    case = [-1] * n
    pa = [-1] * n
    pb = [-1] * n
    order = [0] * n
    accepted = bytearray(n)

    heap = []
    for s in seeds:
        s = int(s)
        u[s] = 0.0
        case[s] = CASE_SEED
        heapq.heappush(heap, (0.0, s))

    k = 0
    while heap:
        up, p = heapq.heappop(heap)
        if accepted[p]:
            continue
        accepted[p] = 1
        u[p] = up
        order[k] = p
        k += 1

        i = p % nx
        j = p // nx
        # Relax the non-accepted in-bounds neighbors of p.
        if i > 0:
            _relax(p - 1, nx, ny, h, phi_l, u, case, pa, pb, accepted, heap)
        if i < nx - 1:
            _relax(p + 1, nx, ny, h, phi_l, u, case, pa, pb, accepted, heap)
        if j > 0:
            _relax(p - nx, nx, ny, h, phi_l, u, case, pa, pb, accepted, heap)
        if j < ny - 1:
            _relax(p + nx, nx, ny, h, phi_l, u, case, pa, pb, accepted, heap)

    if k != n:
        raise RuntimeError(f"fast marching left {n - k} unreached nodes (internal error)")

    return (
        np.array(u, dtype=np.float64),
        np.array(case, dtype=np.int8),
        np.array(pa, dtype=np.int64),
        np.array(pb, dtype=np.int64),
        np.array(order, dtype=np.int64),
    )


def _relax(q, nx, ny, h, phi, u, case, pa, pb, accepted, heap):
    if accepted[q]:
        return
    iq = q % nx
    jq = q // nx

    # Axis minima over accepted neighbors only; within an axis, ties go to
    # the lower linear index (the minus neighbor).
    ua = inf
    qa = -1
    if iq > 0 and accepted[q - 1]:
        ua = u[q - 1]
        qa = q - 1
    if iq < nx - 1 and accepted[q + 1] and u[q + 1] < ua:
        ua = u[q + 1]
        qa = q + 1

    ub = inf
    qb = -1
    if jq > 0 and accepted[q - nx]:
        ub = u[q - nx]
        qb = q - nx
    if jq < ny - 1 and accepted[q + nx] and u[q + nx] < ub:
        ub = u[q + nx]
        qb = q + nx

    phi_q = phi[q]
    if ua < inf and ub < inf:
        diff = ua - ub
        hphi = h * phi_q
        if hphi * hphi > diff * diff:
            val = 0.5 * (ua + ub + sqrt(2.0 * hphi * hphi - diff * diff))
            if val < u[q]:
                u[q] = val
                case[q] = CASE_TWO_PARENT
                pa[q] = qa
                pb[q] = qb
                heapq.heappush(heap, (val, q))
            return

    # Single-parent (affine) branch; equal axis minima resolve to the x axis.
    if ua <= ub:
        val = ua + h * phi_q
        parent = qa
    else:
        val = ub + h * phi_q
        parent = qb
    if val < u[q]:
        u[q] = val
        case[q] = CASE_ONE_PARENT
        pa[q] = parent
        pb[q] = -1
        heapq.heappush(heap, (val, q))


def vjp_kernel(nx, ny, h, phi, u, case, pa, pb, order, u_bar):
    """Reverse-order adjoint sweep: returns g with g = J^T u_bar.

    J is the Jacobian of the distance map with respect to the potential,
    linearized around the causal structure frozen in the acceptance records.
    Runs in O(n) by walking the acceptance order backwards and pushing each
    node's cotangent onto its parents.
    """
    n = nx * ny
    h = float(h)
    bar = [float(v) for v in u_bar]
    phi_l = [float(v) for v in phi]
    u_l = [float(v) for v in u]
    g = [0.0] * n

    for idx in range(n - 1, -1, -1):
        p = order[idx]
        c = bar[p]
        if c == 0.0:
            continue
        cs = case[p]
        if cs == CASE_TWO_PARENT:
            a = pa[p]
            b = pb[p]
            sa = u_l[p] - u_l[a]
            sb = u_l[p] - u_l[b]
            s = sa + sb
            if s <= 0.0:
                raise RuntimeError("inconsistent acceptance records (internal error)")
            g[p] += c * (h * h * phi_l[p] / s)
            bar[a] += c * (sa / s)
            bar[b] += c * (sb / s)
        elif cs == CASE_ONE_PARENT:
            g[p] += c * h
            bar[pa[p]] += c
        # Seed rows are zero: the cotangent stops here.

    return np.array(g, dtype=np.float64)
