import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_g, min_pair_entropy, random_feasible
from ternary_polar import channel as ch
from ternary_polar.gfunc import (CSV_HEADER, GTableFormatError, SolverOptions, angle_of,
                                 build_gtable, circulant_lambda2, concavity_profile,
                                 large_g_approx, level_curve, level_curve_point, read_gtable,
                                 small_g_approx, small_g_coefficient, small_g_fixed_va, solve_g,
                                 solve_g_fixed_va, table_from_values, write_gtable)
from ternary_polar.qsc import QscChannel, g_qsc

LN3 = math.log(3)


class TestLevelCurve:
    def test_small_G_near_centroid(self):
        for t in np.linspace(0, 2 * np.pi, 13):
            v = level_curve_point(1e-9, t).v
            assert np.max(np.abs(np.asarray(v) - 1 / 3)) < 1e-3

    def test_vertex_direction(self):
        p = level_curve_point(1.0, 0.0)
        assert np.allclose(p.v, [1.0, 0.0, 0.0], atol=1e-12)

    def test_entropy_on_level(self, rng):
        hits = 0
        for t in rng.uniform(0, 2 * np.pi, 100):
            p = level_curve_point(0.5, t)
            if p.on_level:
                hits += 1
                assert abs(ch.entropy(p.v) - 0.5) < 1e-10
            else:
                assert ch.entropy(p.v) > 0.5
        # roughly a third of the directions point at a vertex arc
        assert hits >= 20

    @pytest.mark.xfail(strict=True, reason="edge midpoints have entropy log_3 2 > 0.5")
    def test_every_ray_reaches_level_half(self, rng):
        assert all(level_curve_point(0.5, t).on_level for t in rng.uniform(0, 2 * np.pi, 100))

    def test_every_ray_reaches_small_level(self, rng):
        for t in rng.uniform(0, 2 * np.pi, 100):
            p = level_curve_point(0.3, t)
            assert p.on_level and abs(ch.entropy(p.v) - 0.7) < 1e-10

    def test_edge_clamp_only_above_log2(self, rng):
        # below 1 - log_3(2) every ray reaches the level set inside the simplex
        thr = 1 - math.log(2) / LN3
        for t in rng.uniform(0, 2 * np.pi, 200):
            assert level_curve_point(thr - 1e-3, t).on_level
            p = level_curve_point(0.95, t)
            if not p.on_level:
                assert ch.entropy(p.v) > 0.05
                assert min(p.v) < 1e-12

    def test_angle_roundtrip(self, rng):
        for t in rng.uniform(0, 2 * np.pi, 20):
            assert angle_of(level_curve_point(0.3, t).v) == pytest.approx(t, abs=1e-9)

    def test_vectorized_matches_scalar(self):
        th = np.linspace(0, 2 * np.pi, 17)
        A = level_curve(0.4, th)
        for t, row in zip(th, A):
            assert np.allclose(row, level_curve_point(0.4, t).v)

    def test_binary_points(self):
        p = level_curve_point(0.5, 0.0, q=2)
        assert abs(ch.entropy(p.v) - 0.5) < 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            level_curve_point(1.5, 0.0)


class TestSolveG:
    def test_zero_argument(self):
        assert solve_g(0.0, 0.7).g == 0.0

    @pytest.mark.parametrize("G2", [0.1, 0.5, 0.9])
    def test_noiseless_argument(self, G2):
        assert abs(solve_g(1.0, G2).g - G2) < 1e-6

    def test_small_G(self):
        g = solve_g(0.02, 0.02).g
        assert abs(g - LN3 * 4e-4) / (LN3 * 4e-4) < 0.15

    def test_mid_vs_qsc(self):
        g = solve_g(0.5, 0.5).g
        gq = g_qsc(0.5, 0.5)
        assert gq - 1e-9 <= g < gq + 0.01

    def test_achievers(self):
        sol = solve_g(0.3, 0.6)
        g, va, vb = sol
        assert abs(ch.entropy(va) - 0.7) < 1e-10
        assert abs(ch.entropy(vb) - 0.4) < 1e-10
        assert 1 - ch.entropy(ch.cross_correlate(vb, va)) == pytest.approx(g, abs=1e-12)

    def test_symmetry(self, rng):
        for a, b in rng.uniform(0.02, 0.98, size=(8, 2)):
            assert abs(solve_g(a, b).g - solve_g(b, a).g) < 2e-4

    def test_deterministic(self):
        a, b = solve_g(0.37, 0.61), solve_g(0.37, 0.61)
        assert (a.g, a.theta_a, a.theta_b) == (b.g, b.theta_a, b.theta_b)

    def test_unsupported_q(self):
        with pytest.raises(NotImplementedError):
            solve_g(0.5, 0.5, q=5)

    def test_binary_is_qsc(self):
        for a, b in [(0.2, 0.7), (0.5, 0.5), (0.9, 0.1)]:
            assert solve_g(a, b, q=2).g == pytest.approx(g_qsc(a, b, 2), abs=1e-12)

    def test_without_sector_reduction(self):
        # a full-circle coarse search finds nothing better than the sector search
        for G1, G2 in [(0.2, 0.4), (0.6, 0.9), (0.95, 0.97)]:
            full = brute_force_g(G1, G2, n=720)
            assert full <= solve_g(G1, G2).g + 1e-6

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
    def test_sandwich(self, a, b):
        g = solve_g(a, b).g
        assert g_qsc(a, b) - 1e-6 <= g <= min(a, b) + 1e-6


class TestInequalityForm:
    def test_interior_points_never_beat_boundary(self, rng):
        # tilde-g: feasible interior posteriors cannot yield a larger 1 - H
        worst = -np.inf
        for G1, G2 in rng.uniform(0.02, 0.98, size=(50, 2)):
            A = random_feasible(rng, G1, 300)
            B = random_feasible(rng, G2, 300)
            worst = max(worst, 1 - min_pair_entropy(A, B) - solve_g(G1, G2).g)
        assert worst <= 1e-6


class TestAsymptotes:
    def test_small_formula(self):
        assert small_g_approx(0.0, 0.4) == 0.0
        assert small_g_approx(0.01, 0.01) == pytest.approx(LN3 * 1e-4)

    def test_large_formula(self):
        assert large_g_approx(1, 1) == 1
        assert large_g_approx(1, 0.3) == pytest.approx(0.3)

    def test_large_close_to_one(self):
        for a, b in [(0.99, 0.99), (0.98, 0.99)]:
            assert abs(solve_g(a, b).g - large_g_approx(a, b)) < 5e-3

    @pytest.mark.xfail(strict=True, reason="g >= g_qsc gives 0.95516 at (0.98, 0.97)")
    def test_large_at_098_097(self):
        assert abs(solve_g(0.98, 0.97).g - 0.95) < 5e-3

    @pytest.mark.xfail(strict=True, reason="symmetric twin of the case above")
    def test_large_at_097_098(self):
        assert abs(solve_g(0.97, 0.98).g - 0.95) < 5e-3

    def test_large_lower_bound_already_exceeds(self):
        # the QSC pair is feasible, so g >= g_qsc; at (0.97, 0.97) that alone
        # is farther than 5e-3 from G1 + G2 - 1
        assert g_qsc(0.97, 0.97) - large_g_approx(0.97, 0.97) > 5e-3


class TestFixedVa:
    def test_uniform(self):
        assert small_g_coefficient([1 / 3] * 3) == pytest.approx(0.0, abs=1e-15)
        assert circulant_lambda2([1 / 3] * 3) == pytest.approx(0.0, abs=1e-12)

    def test_vertex(self):
        assert small_g_coefficient([1, 0, 0]) == pytest.approx(1.0)
        assert small_g_fixed_va([1, 0, 0], 0.01) == pytest.approx(0.01)

    def test_eigenvalue_matches_coefficient(self, rng):
        for v in rng.dirichlet(np.ones(3), size=20):
            assert circulant_lambda2(v) == pytest.approx(small_g_coefficient(v), abs=1e-12)

    def test_qsc_posterior_small_G2(self):
        va = QscChannel(0.2).posterior()
        approx = small_g_fixed_va(va, 1e-3)
        exact = solve_g_fixed_va(va, 1e-3)
        assert abs(approx - exact) / exact < 0.05


class TestBruteForce:
    def test_subgrid_small(self):
        # a cheap version of the 3600x3600 acceptance oracle
        curves = {}
        for G1 in (0.1, 0.6):
            for G2 in (0.35, 0.93):
                bf = brute_force_g(G1, G2, n=1200, curves=curves)
                assert abs(bf - solve_g(G1, G2).g) < 2e-4


    def test_oracle_converges_near_vertex(self):
        # at G = 0.95 the optimum sits on a vertex arc about nine 3600-grid
        # angles wide; refining the oracle approaches solve_g from below
        g = solve_g(0.95, 0.95).g
        errs = [g - brute_force_g(0.95, 0.95, n=n) for n in (3600, 14400, 28800)]
        assert all(e >= -1e-12 for e in errs)
        assert errs[0] > errs[1] > errs[2] and errs[2] < 2e-5


class TestTable:
    def test_default_table_shape(self, table):
        assert table.values.shape == (99, 99)
        assert table.n == 100

    def test_invariants(self, table):
        d = table.diagnostics
        assert d["max_asymmetry"] < 2e-4
        assert d["max_monotonicity_violation"] < 2e-4
        assert d["max_above_min"] <= 1e-6
        assert d["max_below_qsc"] <= 1e-6

    def test_corner_cell(self, table):
        assert abs(table.values[-1, -1] - 0.98) < 2e-3

    def test_row_half_monotone(self, table):
        row = table.values[:, table.index(0.5)]
        assert row[0] < 0.01 and abs(row[-1] - 0.5) < 0.01
        assert np.all(np.diff(row) >= -2e-4)

    def test_qsc_gap_cells(self, table):
        # cells where the worst case is strictly better than the QSC guess
        assert 0 < len(table.diagnostics["cells_above_qsc"]) < table.values.size
        assert table.diagnostics["max_above_qsc"] < 0.01

    def test_bilinear_call(self, table):
        assert table(0.5, 0.5) == pytest.approx(table.values[49, 49])
        assert table(1.0, 0.3) == pytest.approx(0.3)
        assert table(0.0, 0.3) == 0.0

    def test_d1_matches_central_difference(self, table):
        i, j = table.index(0.4), table.index(0.7)
        fd = (table.values[i + 1, j] - table.values[i - 1, j]) / 0.02
        assert table.d1[i, j] == pytest.approx(fd)

    @pytest.mark.xfail(strict=True, reason="d1 at G1 = 0.99 reaches 0.87 for G2 near 1")
    def test_d1_last_column_small(self, table):
        assert np.all(table.d1[-1, :] < 0.05)

    def test_d1_last_column_small_rows(self, table):
        # only rows with small G2 have a flat edge at grid resolution
        assert table.d1[-1, table.index(0.1)] < 0.05


class TestConcavityProfile:
    def test_single_crossing_middle(self, table):
        prof = concavity_profile(table, 0.5)
        assert prof.sign_changes == 1 and prof.violations == 0

    def test_near_one_row(self, table):
        prof = concavity_profile(table, 0.99)
        assert prof.violations == 0
        assert prof.x_star <= 0.1

    def test_all_rows(self, table):
        assert sum(concavity_profile(table, G).violations for G in table.grid) == 0


@pytest.fixture(scope="module")
def coarse_table():
    return build_gtable(0.1, SolverOptions(coarse=60))


class TestSerialization:
    def test_roundtrip(self, tmp_path, coarse_table):
        t = coarse_table
        write_gtable(t, tmp_path / "g.csv", tmp_path / "g.json")
        t2 = read_gtable(tmp_path / "g.csv")
        assert np.allclose(t2.values, t.values, atol=1e-12)
        assert (tmp_path / "g.csv").read_text().splitlines()[0] == CSV_HEADER

    def test_rows_are_row_major(self, tmp_path, coarse_table):
        t = coarse_table
        write_gtable(t, tmp_path / "g.csv")
        rows = [r.split(",") for r in (tmp_path / "g.csv").read_text().splitlines()[1:3]]
        assert rows[0][:2] == ["0.1", "0.1"] and rows[1][:2] == ["0.1", "0.2"]

    @pytest.mark.parametrize("mutate", [
        lambda s: s.replace("G1,G2", "A,B", 1),
        lambda s: "\n".join(s.splitlines()[:-3]),
        lambda s: s.replace("0.2,0.3,", "0.2,0.3,nan_", 1),
        lambda s: s.replace("\n0.1,0.2,", "\n0.1,0.25,", 1),
        lambda s: s.replace("\n0.1,0.2,", "\n0.1,0.2,7,", 1),
    ])
    def test_rejects_corrupt(self, tmp_path, mutate, coarse_table):
        t = coarse_table
        p = tmp_path / "g.csv"
        write_gtable(t, p)
        p.write_text(mutate(p.read_text()))
        with pytest.raises(GTableFormatError):
            read_gtable(p)

    def test_from_values_shape_check(self):
        with pytest.raises(ValueError):
            table_from_values(0.1, np.zeros((5, 5)))
