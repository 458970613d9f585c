import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffmarch import (
    PotentialField,
    SeedSet,
    UpdateCase,
    ValidationError,
    fast_march,
    geodesic_distance_to_set,
    make_grid,
    upwind_update,
)

from oracle_solver import label_correcting_solve


def uniform_field(grid, value=1.0):
    return PotentialField(grid, np.full(grid.n, value))


class TestUpwindUpdate:
    def test_single_parent_affine(self):
        value, case = upwind_update(0.0, math.inf, 1.0, 1.0)
        assert value == 1.0
        assert case is UpdateCase.ONE_PARENT

    def test_symmetric_quadratic(self):
        value, case = upwind_update(0.0, 0.0, 1.0, 1.0)
        assert case is UpdateCase.TWO_PARENT
        assert value == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)

    def test_case_boundary_goes_affine(self):
        # h^2 phi^2 = (u_a - u_b)^2 exactly: the one-parent branch wins.
        value, case = upwind_update(0.0, 1.0, 1.0, 1.0)
        assert value == 1.0
        assert case is UpdateCase.ONE_PARENT

    def test_two_parent_exceeds_both(self):
        value, case = upwind_update(0.3, 0.5, 1.0, 1.0)
        assert case is UpdateCase.TWO_PARENT
        assert value > 0.5

    def test_errors(self):
        with pytest.raises(RuntimeError, match="both axis minima infinite"):
            upwind_update(math.inf, math.inf, 1.0, 1.0)
        with pytest.raises(ValidationError, match="phi_p"):
            upwind_update(0.0, 1.0, 0.0, 1.0)
        with pytest.raises(ValidationError, match="phi_p"):
            upwind_update(0.0, 1.0, -1.0, 1.0)


class TestFastMarch3x3:
    def test_hand_solution(self):
        g = make_grid(3, 3, 1.0)
        field = fast_march(g, uniform_field(g), SeedSet((g.index(1, 1),)))
        u = field.u.reshape(3, 3)
        assert u[1, 1] == 0.0
        for i, j in [(0, 1), (2, 1), (1, 0), (1, 2)]:
            assert u[j, i] == pytest.approx(1.0, abs=1e-15)
        corner = 1.0 + 1.0 / math.sqrt(2.0)
        for i, j in [(0, 0), (2, 0), (0, 2), (2, 2)]:
            assert u[j, i] == pytest.approx(corner, abs=1e-14)

    def test_records(self):
        g = make_grid(3, 3, 1.0)
        field = fast_march(g, uniform_field(g), SeedSet((4,)))
        assert field.record(4).case is UpdateCase.SEED
        assert field.record(4).parents == ()
        rec = field.record(1)
        assert rec.case is UpdateCase.ONE_PARENT
        assert rec.parents == ((4, 1),)
        rec = field.record(0)
        assert rec.case is UpdateCase.TWO_PARENT
        assert {q for q, _ in rec.parents} == {1, 3}

    def test_all_nodes_accepted_and_ranked(self):
        g = make_grid(3, 3, 1.0)
        field = fast_march(g, uniform_field(g), SeedSet((4,)))
        assert sorted(field.order.tolist()) == list(range(9))
        assert np.array_equal(field.order[field.rank], np.arange(9))


class TestFastMarchProperties:
    def test_causality_monotone_acceptance(self):
        g = make_grid(8, 8, 0.3)
        rng = np.random.default_rng(11)
        phi = PotentialField(g, rng.uniform(0.2, 3.0, g.n))
        field = fast_march(g, phi, SeedSet((0, 37)))
        accepted_values = field.u[field.order]
        assert np.all(np.diff(accepted_values) >= 0.0)

    def test_parents_strictly_earlier(self):
        g = make_grid(8, 8, 0.5)
        rng = np.random.default_rng(5)
        phi = PotentialField(g, rng.uniform(0.2, 3.0, g.n))
        field = fast_march(g, phi, SeedSet((12,)))
        for p in range(g.n):
            for q, _axis in field.record(p).parents:
                assert field.rank[q] < field.rank[p]
                assert field.u[q] < field.u[p]

    def test_consistency_reevaluation(self):
        g = make_grid(9, 7, 0.4)
        rng = np.random.default_rng(7)
        phi = PotentialField(g, rng.uniform(0.2, 3.0, g.n))
        field = fast_march(g, phi, SeedSet((30,)))
        u = field.u.reshape(g.ny, g.nx)
        for p in range(g.n):
            if field.case_codes[p] == int(UpdateCase.SEED):
                continue
            i, j = g.coords(p)
            ua = min(
                u[j, i - 1] if i > 0 else math.inf,
                u[j, i + 1] if i < g.nx - 1 else math.inf,
            )
            ub = min(
                u[j - 1, i] if j > 0 else math.inf,
                u[j + 1, i] if j < g.ny - 1 else math.inf,
            )
            value, _case = upwind_update(ua, ub, phi.values[p], g.h)
            assert value == pytest.approx(field.u[p], rel=1e-12)

    def test_homogeneity(self):
        g = make_grid(8, 8, 0.25)
        rng = np.random.default_rng(3)
        phi = PotentialField(g, rng.uniform(0.3, 2.0, g.n))
        seeds = SeedSet((20,))
        base = fast_march(g, phi, seeds).u
        for c in (0.5, 3.0, 17.0):
            scaled = fast_march(g, PotentialField(g, c * phi.values), seeds).u
            assert np.allclose(scaled, c * base, rtol=1e-12, atol=0.0)

    def test_metric_scaling_constant_potential(self):
        g = make_grid(5, 5, 1.0)
        seeds = SeedSet((12,))
        u1 = fast_march(g, uniform_field(g, 1.0), seeds).u
        u3 = fast_march(g, uniform_field(g, 3.0), seeds).u
        assert np.allclose(u3, 3.0 * u1, rtol=1e-13)

    def test_monotonicity_in_phi(self):
        g = make_grid(8, 8, 0.3)
        rng = np.random.default_rng(23)
        seeds = SeedSet((9,))
        for _ in range(20):
            lo = rng.uniform(0.2, 2.0, g.n)
            hi = lo + rng.uniform(0.1, 0.5, g.n)
            u_lo = fast_march(g, PotentialField(g, lo), seeds).u
            u_hi = fast_march(g, PotentialField(g, hi), seeds).u
            assert np.all(u_lo <= u_hi)

    def test_extra_seed_only_decreases(self):
        g = make_grid(8, 8, 0.3)
        rng = np.random.default_rng(29)
        phi = PotentialField(g, rng.uniform(0.2, 2.0, g.n))
        u_one = fast_march(g, phi, SeedSet((5,))).u
        u_two = fast_march(g, phi, SeedSet((5, 60))).u
        assert np.all(u_two <= u_one + 1e-15)

    def test_zero_exactly_on_seeds(self):
        g = make_grid(6, 6, 0.7)
        rng = np.random.default_rng(31)
        phi = PotentialField(g, rng.uniform(0.5, 2.0, g.n))
        field = fast_march(g, phi, SeedSet((0, 17, 35)))
        assert set(np.flatnonzero(field.u == 0.0)) == {0, 17, 35}

    @settings(deadline=None, max_examples=25)
    @given(st.integers(0, 2**32 - 1))
    def test_oracle_equivalence_random(self, seed):
        rng = np.random.default_rng(seed)
        nx, ny = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        g = make_grid(nx, ny, float(rng.uniform(0.2, 1.5)))
        phi = PotentialField(g, rng.uniform(0.2, 3.0, g.n))
        seeds = SeedSet((int(rng.integers(0, g.n)),))
        field = fast_march(g, phi, seeds)
        expected = label_correcting_solve(nx, ny, g.h, phi.values, seeds.points)
        assert np.allclose(field.u, expected, rtol=0.0, atol=1e-10)

    def test_grid_mismatch_rejected(self):
        g = make_grid(3, 3, 1.0)
        other = make_grid(3, 3, 0.5)
        with pytest.raises(ValidationError, match="different grid"):
            fast_march(other, uniform_field(g), SeedSet((0,)))


class TestHardBall:
    def test_threshold_one_on_3x3(self):
        g = make_grid(3, 3, 1.0)
        field = fast_march(g, uniform_field(g), SeedSet((4,)))
        ball = geodesic_distance_to_set(field, 1.0)
        assert ball.values.sum() == 5.0
        assert ball.values[4] == 1.0

    def test_threshold_zero_marks_seeds_only(self):
        g = make_grid(3, 3, 1.0)
        field = fast_march(g, uniform_field(g), SeedSet((4,)))
        ball = geodesic_distance_to_set(field, 0.0)
        assert np.array_equal(np.flatnonzero(ball.values), [4])

    def test_large_threshold_all_ones(self):
        g = make_grid(3, 3, 1.0)
        field = fast_march(g, uniform_field(g), SeedSet((4,)))
        ball = geodesic_distance_to_set(field, 1e30)
        assert np.all(ball.values == 1.0)

    def test_negative_threshold_rejected(self):
        g = make_grid(3, 3, 1.0)
        field = fast_march(g, uniform_field(g), SeedSet((4,)))
        with pytest.raises(ValidationError, match="threshold"):
            geodesic_distance_to_set(field, -0.1)
