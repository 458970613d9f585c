import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from diffmarch import (
    DistanceField,
    PotentialField,
    ScalarField,
    SeedSet,
    ValidationError,
    fast_march,
    make_grid,
    normalize_potential,
    normalize_potential_vjp,
    potential_mass,
    soft_mask,
    soft_mask_vjp,
)


def distance_with_values(grid, u):
    """DistanceField with prescribed u; records are irrelevant for mask ops."""
    n = grid.n
    return DistanceField(
        grid,
        np.asarray(u, dtype=float),
        np.zeros(n, dtype=np.int8),
        np.full(n, -1, dtype=np.int64),
        np.full(n, -1, dtype=np.int64),
        np.arange(n, dtype=np.int64),
        np.arange(n, dtype=np.int64),
    )


class TestSoftMask:
    def test_half_at_unit_distance(self):
        g = make_grid(2, 2, 1.0)
        field = distance_with_values(g, [1.0, 0.0, 2.0, 1.0])
        m = soft_mask(field, 0.01)
        assert m.values[0] == 0.5
        assert m.values[3] == 0.5

    def test_saturation_at_seed(self):
        g = make_grid(2, 2, 1.0)
        m = soft_mask(distance_with_values(g, [0.0, 1.0, 1.0, 2.0]), 0.01)
        assert m.values[0] == pytest.approx(1.0, abs=1e-15)

    def test_unit_logit(self):
        g = make_grid(2, 2, 1.0)
        delta = 0.01
        m = soft_mask(distance_with_values(g, [1.0 + delta, 0.0, 0.0, 0.0]), delta)
        assert m.values[0] == pytest.approx(1.0 - 1.0 / (1.0 + math.exp(-1.0)), rel=1e-12)

    def test_monotone_decreasing_in_u(self):
        g = make_grid(5, 2, 1.0)
        u = np.linspace(0.0, 3.0, 10)
        m = soft_mask(distance_with_values(g, u), 0.05)
        assert np.all(np.diff(m.values) < 0.0)

    def test_values_within_unit_interval(self):
        g = make_grid(4, 4, 1.0)
        rng = np.random.default_rng(0)
        m = soft_mask(distance_with_values(g, rng.uniform(0, 5, g.n)), 0.3)
        assert np.all((m.values >= 0.0) & (m.values <= 1.0))

    def test_delta_to_zero_approaches_indicator(self):
        g = make_grid(10, 10, 0.1)
        rng = np.random.default_rng(9)
        u = rng.uniform(0.0, 2.0, g.n)
        field = distance_with_values(g, u)
        hard = (u <= 1.0).astype(float)
        gaps = []
        for delta in (0.1, 0.01, 0.001):
            soft = soft_mask(field, delta).values
            gaps.append(np.abs(soft - hard).mean())
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-3

    def test_delta_validation(self):
        g = make_grid(2, 2, 1.0)
        field = distance_with_values(g, np.zeros(4))
        with pytest.raises(ValidationError, match="delta"):
            soft_mask(field, 0.0)


class TestSoftMaskVjp:
    def test_midpoint_slope(self):
        g = make_grid(2, 2, 1.0)
        field = distance_with_values(g, [1.0, 0.0, 0.0, 0.0])
        bar = ScalarField(g, np.array([1.0, 0.0, 0.0, 0.0]))
        out = soft_mask_vjp(field, 0.01, bar)
        assert out.values[0] == pytest.approx(-25.0, rel=1e-12)

    def test_zero_cotangent(self):
        g = make_grid(2, 2, 1.0)
        field = distance_with_values(g, [0.5, 1.0, 1.5, 2.0])
        out = soft_mask_vjp(field, 0.01, ScalarField(g, np.zeros(4)))
        assert np.all(out.values == 0.0)

    def test_matches_central_fd(self):
        g = make_grid(4, 4, 1.0)
        rng = np.random.default_rng(14)
        u = rng.uniform(0.7, 1.3, g.n)
        delta = 0.05
        bar = rng.standard_normal(g.n)
        analytic = soft_mask_vjp(distance_with_values(g, u), delta, ScalarField(g, bar)).values
        t = 1e-7
        for p in range(g.n):
            up, um = u.copy(), u.copy()
            up[p] += t
            um[p] -= t
            f_p = float(np.dot(bar, soft_mask(distance_with_values(g, up), delta).values))
            f_m = float(np.dot(bar, soft_mask(distance_with_values(g, um), delta).values))
            fd = (f_p - f_m) / (2.0 * t)
            assert analytic[p] == pytest.approx(fd, rel=1e-6, abs=1e-10)


class TestNormalizePotential:
    def grid_phi(self, values, h=1.0):
        values = np.asarray(values, dtype=float)
        g = make_grid(values.size // 2, 2, h)
        return g, PotentialField(g, values)

    def test_active_branch_scales(self):
        g = make_grid(5, 2, 1.0)
        phi = PotentialField(g, np.ones(10))  # mass 10
        out, scale = normalize_potential(phi, 5.0)
        assert scale == 0.5
        assert potential_mass(out) == pytest.approx(5.0, rel=1e-15)

    def test_inactive_branch_identity(self):
        g = make_grid(3, 2, 1.0)
        phi = PotentialField(g, np.full(6, 0.5))  # mass 3
        out, scale = normalize_potential(phi, 5.0)
        assert scale == 1.0
        assert out is phi

    def test_boundary_tie_inactive(self):
        g = make_grid(5, 2, 1.0)
        phi = PotentialField(g, np.full(10, 0.5))  # mass exactly 5
        out, scale = normalize_potential(phi, 5.0)
        assert scale == 1.0
        assert out is phi

    def test_mass_uses_h_squared(self):
        g = make_grid(4, 4, 0.5)
        phi = PotentialField(g, np.full(16, 2.0))
        assert potential_mass(phi) == pytest.approx(0.25 * 32.0)

    @given(st.lists(st.floats(1e-3, 1e3), min_size=4, max_size=4), st.floats(0.1, 20.0))
    def test_mass_bound_and_idempotence(self, values, lam):
        g = make_grid(2, 2, 1.0)
        phi = PotentialField(g, np.array(values))
        out, _scale = normalize_potential(phi, lam)
        assert potential_mass(out) <= lam + 1e-12
        twice, scale2 = normalize_potential(out, lam)
        assert scale2 == 1.0
        assert np.array_equal(twice.values, out.values)


class TestNormalizePotentialVjp:
    def test_inactive_identity(self):
        g = make_grid(3, 2, 1.0)
        phi = PotentialField(g, np.full(6, 0.1))
        bar = ScalarField(g, np.arange(6, dtype=float))
        out = normalize_potential_vjp(phi, 5.0, bar)
        assert np.array_equal(out.g, bar.values)

    def test_active_matches_fd(self):
        g = make_grid(4, 3, 0.7)
        rng = np.random.default_rng(3)
        values = rng.uniform(5.0, 15.0, g.n)
        phi = PotentialField(g, values)
        lam = 2.0
        assert potential_mass(phi) > lam
        bar = rng.standard_normal(g.n)
        analytic = normalize_potential_vjp(phi, lam, ScalarField(g, bar)).g
        t = 1e-6
        for p in range(g.n):
            vp, vm = values.copy(), values.copy()
            vp[p] += t
            vm[p] -= t
            f_p = float(np.dot(bar, normalize_potential(PotentialField(g, vp), lam)[0].values))
            f_m = float(np.dot(bar, normalize_potential(PotentialField(g, vm), lam)[0].values))
            fd = (f_p - f_m) / (2.0 * t)
            assert analytic[p] == pytest.approx(fd, rel=1e-6, abs=1e-9)

    def test_soft_mask_full_chain_through_solver(self):
        # End-to-end sanity: solver distances feed the mask ops unchanged.
        g = make_grid(5, 5, 0.5)
        phi = PotentialField(g, np.ones(g.n))
        field = fast_march(g, phi, SeedSet((12,)))
        m = soft_mask(field, 0.1)
        assert m.values[12] == pytest.approx(1.0, abs=1e-4)
        assert np.all((m.values > 0.0) & (m.values <= 1.0))
