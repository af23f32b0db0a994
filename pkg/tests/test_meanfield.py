"""Discrete solvers: boundary cases, cross-checks between independent routes."""

import numpy as np
import pytest

from bmatch.meanfield import (
    brute_force_node_b1,
    check_slot_dominance,
    solve_node_b1,
    solve_node_bmatch,
    solve_node_exact_b1,
    solve_rank_b1,
    solve_rank_bmatch,
)

# D(6, j) at N=50, p=5/49, frozen from an independently coded straightforward
# evaluator (dict-based, prefix sums recomputed at every access)
GOLDEN_N50_ROW6 = [
    (1, 0.06634379495670434),
    (2, 0.0637028224629074),
    (3, 0.061108159821664315),
    (5, 0.05576294485972154),
    (6, 0.0),
    (7, 0.05090538801623664),
    (10, 0.04375769600156267),
    (20, 0.020673011761051983),
    (50, 0.000979007646259515),
]


def naive_node_b1_row(N, p, i):
    """Straightforward reference evaluator, deliberately unoptimized."""
    D = {}
    for s in range(2, 2 * N + 1):
        for a in range(max(1, s - N), min(N, s - 1) + 1):
            b = s - a
            if a == b:
                D[(a, b)] = 0.0
                continue
            s_ab = 1.0 - sum(D.get((a, k), 0.0) for k in range(1, b))
            s_ba = 1.0 - sum(D.get((b, k), 0.0) for k in range(1, a))
            D[(a, b)] = p * s_ab * s_ba
    return np.array([D[(i, j)] for j in range(1, N + 1)])


class TestSolveNodeB1:
    def test_p_zero(self):
        pd = solve_node_b1(6, 0.0)
        assert np.all(pd.d_vals == 0.0)
        assert np.all(pd.s_vals == 1.0)

    def test_diagonal_zero(self):
        pd = solve_node_b1(9, 0.4)
        assert np.all(np.diagonal(pd.d_vals[0]) == 0.0)

    def test_golden_vector_row6(self):
        pd = solve_node_b1(50, 5.0 / 49.0)
        for j, expected in GOLDEN_N50_ROW6:
            assert pd.d(6, j) == pytest.approx(expected, abs=1e-12)
        full = naive_node_b1_row(50, 5.0 / 49.0, 6)
        assert np.abs(pd.row(6) - full).max() < 1e-12

    def test_symmetric_within_tolerance(self):
        d = solve_node_b1(60, 0.2).d_vals[0]
        assert np.abs(d - d.T).max() < 1e-12

    def test_ccdf_consistency(self):
        pd = solve_node_b1(12, 0.3)
        d, s = pd.d_vals[0], pd.s_vals[0]
        assert np.all(s[:, 0] == 1.0)
        assert np.abs(s[:, 1:] - (1.0 - np.cumsum(d, axis=1))).max() < 1e-14
        assert np.all(s >= -1e-15) and np.all(s <= 1 + 1e-15)
        assert np.all(np.diff(s, axis=1) <= 1e-15)


class TestSolveNodeExactB1:
    def test_boundary_d12_is_p(self):
        for p in (0.2, 0.5, 1.0):
            assert solve_node_exact_b1(5, p).d(1, 2) == pytest.approx(p, abs=1e-15)

    def test_first_row_geometric(self):
        p = 0.3
        pd = solve_node_exact_b1(8, p)
        for k in range(2, 9):
            assert pd.d(1, k) == pytest.approx(p * (1 - p) ** (k - 2), abs=1e-15)

    def test_a2_vanishes_so_row0_is_inert(self):
        # D(2,3) only uses the boundary row: (1-p)^2 * p
        p = 0.4
        pd = solve_node_exact_b1(3, p)
        assert pd.d(2, 3) == pytest.approx((1 - p) ** 2 * p, abs=1e-15)

    def test_exactly_symmetric(self):
        d = solve_node_exact_b1(40, 0.17).d_vals[0]
        assert np.array_equal(d, d.T)

    @pytest.mark.parametrize("n,p", [(4, 0.5), (5, 0.3)])
    def test_matches_brute_force(self, n, p):
        exact = solve_node_exact_b1(n, p).d_vals
        brute = brute_force_node_b1(n, p).d_vals
        assert np.abs(exact - brute).max() < 1e-12

    def test_mean_field_differs_from_exact_at_small_n(self):
        # the two formulas agree only in the limit
        p = 0.5
        mf = solve_node_b1(3, p).d(2, 3)
        ex = solve_node_exact_b1(3, p).d(2, 3)
        assert ex == pytest.approx((1 - p) ** 2 * p, abs=1e-15)
        assert abs(mf - ex) > 1e-3

    def test_mean_field_converges_to_exact_at_scale(self):
        n, d = 2000, 5.0
        p = d / (n - 1)
        mf = solve_node_b1(n, p).d_vals[0]
        ex = solve_node_exact_b1(n, p).d_vals[0]
        assert np.abs(mf - ex).max() <= 1e-3


class TestBruteForce:
    def test_n2(self):
        assert brute_force_node_b1(2, 0.37).d(1, 2) == pytest.approx(0.37, abs=1e-15)

    def test_n3_complete(self):
        pd = brute_force_node_b1(3, 1.0)
        assert pd.d(1, 2) == pytest.approx(1.0, abs=1e-15)
        assert pd.d(1, 3) == 0.0 and pd.d(2, 3) == 0.0
        assert pd.unmatched_prob(3) == pytest.approx(1.0, abs=1e-15)

    def test_needs_mc_flag_above_exact_bound(self):
        with pytest.raises(ValueError, match="mc_samples"):
            brute_force_node_b1(9, 0.5)
        with pytest.raises(ValueError, match="N <= 12"):
            brute_force_node_b1(13, 0.5, mc_samples=10)

    def test_mc_estimate_near_exact(self):
        exact = brute_force_node_b1(6, 0.4).d_vals
        mc = brute_force_node_b1(6, 0.4, mc_samples=20000, seed=1).d_vals
        assert np.abs(exact - mc).max() < 0.02


class TestRankB1:
    def test_p_one_delta(self):
        rd = solve_rank_b1(6, 1.0)
        assert rd.s(1) == 1.0
        assert np.all(rd.s_vals[1:] == 0.0)

    def test_p_zero_all_ones(self):
        rd = solve_rank_b1(6, 0.0)
        assert np.all(rd.s_vals == 1.0)

    def test_one_step(self):
        for p in (0.1, 0.5, 0.9):
            assert solve_rank_b1(5, p).s(2) == pytest.approx(1 - p, abs=1e-15)

    def test_mass_plus_unmatched_is_one(self):
        rd = solve_rank_b1(200, 0.05)
        assert rd.d_vals.sum() + rd.unmatched_prob == pytest.approx(1.0, abs=1e-12)


class TestBMatch:
    def test_node_b1_degenerates(self):
        a = solve_node_bmatch(30, 0.15, 1)
        b = solve_node_b1(30, 0.15)
        assert np.array_equal(a.d_vals, b.d_vals)
        assert np.array_equal(a.s_vals, b.s_vals)

    def test_rank_b1_degenerates(self):
        a = solve_rank_bmatch(30, 0.15, 1)[0]
        b = solve_rank_b1(30, 0.15)
        assert np.array_equal(a.d_vals, b.d_vals)
        assert np.array_equal(a.s_vals, b.s_vals)

    def test_rank_first_slot_mass_at_1(self):
        for rd in solve_rank_bmatch(40, 0.2, 3):
            if rd.slot > 1:
                assert rd.d(1) == 0.0  # forced by the S_c(1) = 1 boundary

    def test_slot_dominance(self):
        for n, p, b in [(40, 0.2, 3), (100, 0.05, 4), (25, 0.9, 2)]:
            assert check_slot_dominance(solve_rank_bmatch(n, p, b)) >= -1e-12
            assert check_slot_dominance(solve_node_bmatch(n, p, b)) >= -1e-12

    def test_node_mass_bounds(self):
        pd = solve_node_bmatch(30, 0.3, 2)
        assert np.all(pd.d_vals >= 0.0)
        assert pd.d_vals.sum(axis=2).max() <= 1.0 + 1e-12

    def test_ccdf_monotone_every_slot(self):
        pd = solve_node_bmatch(25, 0.4, 3)
        assert np.all(np.diff(pd.s_vals, axis=2) <= 1e-15)
        rds = solve_rank_bmatch(25, 0.4, 3)
        for rd in rds:
            assert np.all(np.diff(rd.s_vals) <= 1e-15)
            assert np.all(rd.s_vals >= -1e-15) and np.all(rd.s_vals <= 1 + 1e-15)
