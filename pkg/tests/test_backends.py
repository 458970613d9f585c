"""Bitwise parity between the compiled and pure-Python solver kernels."""

import numpy as np
import pytest

from diffmarch import _purepy

_core = pytest.importorskip("diffmarch._core", reason="compiled extension not built")


def random_case(seed):
    rng = np.random.default_rng(seed)
    nx = int(rng.integers(2, 20))
    ny = int(rng.integers(2, 20))
    h = float(rng.uniform(0.05, 2.0))
    phi = rng.uniform(0.1, 4.0, nx * ny)
    n_seeds = int(rng.integers(1, 4))
    seeds = rng.choice(nx * ny, n_seeds, replace=False).astype(np.int64)
    return nx, ny, h, phi, seeds, rng


@pytest.mark.parametrize("seed", range(20))
def test_solve_kernels_bitwise_equal(seed):
    nx, ny, h, phi, seeds, _rng = random_case(seed)
    res_py = _purepy.solve_kernel(nx, ny, h, phi, seeds)
    res_c = _core.solve_kernel(nx, ny, h, phi, seeds)
    for a, b, name in zip(res_py, res_c, ("u", "case", "parent_a", "parent_b", "order")):
        assert np.array_equal(a, b), f"{name} differs"


@pytest.mark.parametrize("seed", range(20))
def test_vjp_kernels_bitwise_equal(seed):
    nx, ny, h, phi, seeds, rng = random_case(seed)
    records = _purepy.solve_kernel(nx, ny, h, phi, seeds)
    u_bar = rng.standard_normal(nx * ny)
    g_py = _purepy.vjp_kernel(nx, ny, h, phi, *records, u_bar)
    g_c = _core.vjp_kernel(nx, ny, h, phi, *records, u_bar)
    assert np.array_equal(g_py, g_c)


def test_backend_selection():
    import os

    from diffmarch import _backend

    if os.environ.get("DIFFMARCH_BACKEND", "").lower() in ("python", "pure", "purepy"):
        assert _backend.BACKEND == "python"
    else:
        # With the extension importable, the default selection is compiled.
        assert _backend.BACKEND == "compiled"
