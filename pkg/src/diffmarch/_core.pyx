# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled solver kernels.

Mirrors ``_purepy`` expression for expression; both backends must produce
bitwise-identical outputs (the extension is built with -ffp-contract=off to
keep that true).  See ``_purepy`` for the algorithmic documentation.
"""

import numpy as np

from libc.math cimport INFINITY, sqrt
from libc.stdint cimport int64_t

cdef signed char CASE_SEED = 0
cdef signed char CASE_ONE_PARENT = 1
cdef signed char CASE_TWO_PARENT = 2


cdef inline void _heap_push(double[::1] hu, int64_t[::1] hp, Py_ssize_t* size,
                            double val, int64_t node) nogil:
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t par
    cdef double tv
    cdef int64_t tp
    hu[i] = val
    hp[i] = node
    size[0] = i + 1
    while i > 0:
        par = (i - 1) >> 1
        if hu[i] < hu[par] or (hu[i] == hu[par] and hp[i] < hp[par]):
            tv = hu[i]; hu[i] = hu[par]; hu[par] = tv
            tp = hp[i]; hp[i] = hp[par]; hp[par] = tp
            i = par
        else:
            break


cdef inline void _heap_pop(double[::1] hu, int64_t[::1] hp, Py_ssize_t* size,
                           double* val, int64_t* node) nogil:
    cdef Py_ssize_t m = size[0] - 1
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t child
    cdef double tv
    cdef int64_t tp
    val[0] = hu[0]
    node[0] = hp[0]
    hu[0] = hu[m]
    hp[0] = hp[m]
    size[0] = m
    while True:
        child = 2 * i + 1
        if child >= m:
            break
        if child + 1 < m and (hu[child + 1] < hu[child] or
                              (hu[child + 1] == hu[child] and hp[child + 1] < hp[child])):
            child += 1
        if hu[child] < hu[i] or (hu[child] == hu[i] and hp[child] < hp[i]):
            tv = hu[i]; hu[i] = hu[child]; hu[child] = tv
            tp = hp[i]; hp[i] = hp[child]; hp[child] = tp
            i = child
        else:
            break


cdef inline void _relax(Py_ssize_t q, Py_ssize_t nx, Py_ssize_t ny, double h,
                        double[::1] phi, double[::1] u, signed char[::1] case,
                        int64_t[::1] pa, int64_t[::1] pb, unsigned char[::1] accepted,
                        double[::1] hu, int64_t[::1] hp, Py_ssize_t* hsize) nogil:
    cdef Py_ssize_t iq, jq
    cdef int64_t qa, qb, parent
    cdef double ua, ub, phi_q, diff, hphi, val

    if accepted[q]:
        return
    iq = q % nx
    jq = q // nx

    # Axis minima over accepted neighbors only; within an axis, ties go to
    # the lower linear index (the minus neighbor).
    ua = INFINITY
    qa = -1
    if iq > 0 and accepted[q - 1]:
        ua = u[q - 1]
        qa = q - 1
    if iq < nx - 1 and accepted[q + 1] and u[q + 1] < ua:
        ua = u[q + 1]
        qa = q + 1

    ub = INFINITY
    qb = -1
    if jq > 0 and accepted[q - nx]:
        ub = u[q - nx]
        qb = q - nx
    if jq < ny - 1 and accepted[q + nx] and u[q + nx] < ub:
        ub = u[q + nx]
        qb = q + nx

    phi_q = phi[q]
    if ua < INFINITY and ub < INFINITY:
        diff = ua - ub
        hphi = h * phi_q
        if hphi * hphi > diff * diff:
            val = 0.5 * (ua + ub + sqrt(2.0 * hphi * hphi - diff * diff))
            if val < u[q]:
                u[q] = val
                case[q] = CASE_TWO_PARENT
                pa[q] = qa
                pb[q] = qb
                _heap_push(hu, hp, hsize, val, <int64_t>q)
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
        _heap_push(hu, hp, hsize, val, <int64_t>q)


def solve_kernel(Py_ssize_t nx, Py_ssize_t ny, double h, double[::1] phi,
                 int64_t[::1] seeds):
    """Fast Marching sweep; same contract as ``_purepy.solve_kernel``."""
    cdef Py_ssize_t n = nx * ny
    cdef Py_ssize_t nseeds = seeds.shape[0]

    u_arr = np.full(n, np.inf, dtype=np.float64)
    case_arr = np.full(n, -1, dtype=np.int8)
    pa_arr = np.full(n, -1, dtype=np.int64)
    pb_arr = np.full(n, -1, dtype=np.int64)
    order_arr = np.zeros(n, dtype=np.int64)
    acc_arr = np.zeros(n, dtype=np.uint8)
    hu_arr = np.empty(4 * n + nseeds + 4, dtype=np.float64)
    hp_arr = np.empty(4 * n + nseeds + 4, dtype=np.int64)

    cdef double[::1] u = u_arr
    cdef signed char[::1] case = case_arr
    cdef int64_t[::1] pa = pa_arr
    cdef int64_t[::1] pb = pb_arr
    cdef int64_t[::1] order = order_arr
    cdef unsigned char[::1] accepted = acc_arr
    cdef double[::1] hu = hu_arr
    cdef int64_t[::1] hp = hp_arr

    cdef Py_ssize_t hsize = 0
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t s, p, i, j
    cdef double up
    cdef int64_t pnode

    with nogil:
        for s in range(nseeds):
            p = seeds[s]
            u[p] = 0.0
            case[p] = CASE_SEED
            _heap_push(hu, hp, &hsize, 0.0, seeds[s])

        while hsize > 0:
            _heap_pop(hu, hp, &hsize, &up, &pnode)
            p = pnode
            if accepted[p]:
                continue
            accepted[p] = 1
            u[p] = up
            order[k] = p
            k += 1

            i = p % nx
            j = p // nx
            if i > 0:
                _relax(p - 1, nx, ny, h, phi, u, case, pa, pb, accepted, hu, hp, &hsize)
            if i < nx - 1:
                _relax(p + 1, nx, ny, h, phi, u, case, pa, pb, accepted, hu, hp, &hsize)
            if j > 0:
                _relax(p - nx, nx, ny, h, phi, u, case, pa, pb, accepted, hu, hp, &hsize)
            if j < ny - 1:
                _relax(p + nx, nx, ny, h, phi, u, case, pa, pb, accepted, hu, hp, &hsize)

    if k != n:
        raise RuntimeError(f"fast marching left {n - k} unreached nodes (internal error)")

    return u_arr, case_arr, pa_arr, pb_arr, order_arr


def vjp_kernel(Py_ssize_t nx, Py_ssize_t ny, double h, double[::1] phi,
               double[::1] u, signed char[::1] case, int64_t[::1] pa,
               int64_t[::1] pb, int64_t[::1] order, double[::1] u_bar):
    """Reverse adjoint sweep; same contract as ``_purepy.vjp_kernel``."""
    cdef Py_ssize_t n = nx * ny

    bar_arr = np.array(u_bar, dtype=np.float64, copy=True)
    g_arr = np.zeros(n, dtype=np.float64)

    cdef double[::1] bar = bar_arr
    cdef double[::1] g = g_arr

    cdef Py_ssize_t idx, p
    cdef int64_t a, b
    cdef double c, sa, sb, s
    cdef int err = 0

    with nogil:
        for idx in range(n - 1, -1, -1):
            p = order[idx]
            c = bar[p]
            if c == 0.0:
                continue
            if case[p] == CASE_TWO_PARENT:
                a = pa[p]
                b = pb[p]
                sa = u[p] - u[a]
                sb = u[p] - u[b]
                s = sa + sb
                if s <= 0.0:
                    err = 1
                    break
                g[p] += c * (h * h * phi[p] / s)
                bar[a] += c * (sa / s)
                bar[b] += c * (sb / s)
            elif case[p] == CASE_ONE_PARENT:
                g[p] += c * h
                bar[pa[p]] += c
            # Seed rows are zero: the cotangent stops here.

    if err:
        raise RuntimeError("inconsistent acceptance records (internal error)")
    return g_arr
