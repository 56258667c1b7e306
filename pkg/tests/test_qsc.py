import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ternary_polar import channel as ch
from ternary_polar.qsc import (QscChannel, compose_p, dgqsc_dG1, eps_l_qsc, g_qsc, h_q, h_q_inv,
                               lagrangian_gradient, qsc_stationarity)

TOP = 2 / 3
GRID = np.round(np.arange(1, 100) / 100, 2)
probs = st.floats(0.0, TOP)


def mp_hq(p, q=3):
    mpmath.mp.dps = 50
    p = mpmath.mpf(p)
    return -(1 - p) * mpmath.log(1 - p, q) - p * mpmath.log(p / (q - 1), q)


class TestHq:
    def test_endpoints(self):
        assert h_q(0.0) == 0.0
        assert h_q(TOP) == pytest.approx(1.0, abs=1e-15)
        assert h_q(0.5, 2) == pytest.approx(1.0, abs=1e-15)

    def test_arbitrary_precision(self):
        assert h_q(0.1) == pytest.approx(float(mp_hq(0.1)), abs=1e-15)

    def test_strictly_increasing(self):
        p = np.linspace(0, TOP - 1e-6, 10_000)
        assert all(h_q(a + 1e-6) > h_q(a) for a in p)

    def test_domain(self):
        with pytest.raises(ValueError):
            h_q(1.5)


class TestHqInv:
    def test_endpoints(self):
        assert h_q_inv(0.0) == 0.0
        assert h_q_inv(1.0) == TOP

    def test_roundtrip_random(self, rng):
        u = rng.uniform(size=1000)
        err = max(abs(h_q(h_q_inv(t)) - t) for t in u)
        assert err < 1e-10

    @given(st.floats(0.0, 1.0))
    def test_branch(self, u):
        p = h_q_inv(u)
        assert 0.0 <= p <= TOP
        assert abs(h_q(p) - u) < 1e-12


class TestComposeP:
    def test_identity(self):
        assert compose_p(0.0, 0.3) == pytest.approx(0.3)

    def test_fixed_point(self):
        assert compose_p(TOP, TOP) == pytest.approx(TOP, abs=1e-15)

    def test_value(self):
        assert compose_p(0.1, 0.1) == pytest.approx(0.185, abs=1e-15)

    @given(probs, probs, probs)
    def test_group_laws(self, a, b, c):
        assert compose_p(a, b) == pytest.approx(compose_p(b, a), abs=1e-12)
        assert compose_p(compose_p(a, b), c) == pytest.approx(compose_p(a, compose_p(b, c)), abs=1e-12)
        assert 0.0 <= compose_p(a, b) <= TOP


class TestGqsc:
    def test_noiseless_argument(self):
        assert max(abs(g_qsc(1.0, G) - G) for G in GRID) < 1e-10

    def test_useless_argument(self):
        assert g_qsc(0.0, 0.4) == pytest.approx(0.0, abs=1e-15)

    def test_matches_channel_transform(self, rng):
        for pa, pb in rng.uniform(0, TOP, size=(100, 2)):
            Ga, Gb = 1 - h_q(pa), 1 - h_q(pb)
            c = ch.capacity(ch.minus_transform(ch.qsc_channel(pa), ch.qsc_channel(pb)))
            assert abs(g_qsc(Ga, Gb) - c) < 1e-9

    def test_symmetric_and_below_min(self):
        for a in GRID[::7]:
            for b in GRID:
                assert g_qsc(a, b) == g_qsc(b, a)
                assert g_qsc(a, b) <= min(a, b) + 1e-10

    def test_qsc_channel_type(self):
        W = QscChannel.from_capacity(0.4)
        assert W.capacity == pytest.approx(0.4, abs=1e-12)
        assert W.posterior().sum() == pytest.approx(1.0)
        with pytest.raises(ch.ChannelError):
            QscChannel(0.9)


class TestDerivative:
    @pytest.mark.parametrize("a,b", [(0.5, 0.5), (0.2, 0.7), (0.8, 0.3)])
    def test_finite_difference(self, a, b):
        h = 1e-6
        fd = (g_qsc(a + h, b) - g_qsc(a - h, b)) / (2 * h)
        assert dgqsc_dG1(a, b) == pytest.approx(fd, abs=1e-6)

    def test_swap_via_symmetry(self):
        h = 1e-6
        fd2 = (g_qsc(0.3, 0.6 + h) - g_qsc(0.3, 0.6 - h)) / (2 * h)
        assert dgqsc_dG1(0.6, 0.3) == pytest.approx(fd2, abs=1e-6)

    def test_decays_toward_one(self):
        vals = [dgqsc_dG1(1 - d, 0.5) for d in (1e-2, 1e-4, 1e-6, 1e-9)]
        assert all(np.diff(vals) < 0) and vals[-1] > 0

    @pytest.mark.xfail(strict=True, reason="decay is logarithmic: 0.103 at 1 - 1e-6")
    def test_vanishes_at_one_minus_1e6(self):
        assert abs(dgqsc_dG1(1 - 1e-6, 0.5)) < 1e-3

    @pytest.mark.parametrize("G1", [0.0, 1.0])
    def test_domain(self, G1):
        with pytest.raises(ValueError):
            dgqsc_dG1(G1, 0.5)


class TestEpsLQsc:
    def test_endpoints(self):
        assert eps_l_qsc(0.0) == pytest.approx(0.0, abs=1e-15)
        assert eps_l_qsc(1.0) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("q", [2, 3])
    def test_identity(self, q):
        assert max(abs(eps_l_qsc(x, q) - (x - g_qsc(x, x, q))) for x in GRID) < 1e-10

    def test_binary_closed_form(self):
        # binary case: x - g(x, x) with p_t = 2p(1-p)
        for x in GRID[::5]:
            p = h_q_inv(1 - x, 2)
            assert eps_l_qsc(x, 2) == pytest.approx(x - 1 + h_q(2 * p * (1 - p), 2), abs=1e-12)


class TestStationarity:
    @pytest.mark.parametrize("pa,pb", [(0.1, 0.2), (0.3, 0.3)])
    def test_residual(self, pa, pb):
        assert qsc_stationarity(pa, pb).residual < 1e-8

    def test_near_degenerate(self):
        assert qsc_stationarity(1e-6, 0.5).residual < 1e-6

    def test_random(self, rng):
        res = [qsc_stationarity(a, b).residual for a, b in rng.uniform(0.01, 0.6, size=(50, 2))]
        assert max(res) < 1e-8

    def test_residual_is_sensitive(self):
        # perturbed multipliers must leave a visible gradient
        s = qsc_stationarity(0.1, 0.2)
        va = QscChannel(0.1).posterior()
        vb = QscChannel(0.2).posterior()
        ga, gb = lagrangian_gradient(va, vb, s.lambda1 + 0.01, s.lambda2, s.lambda3, s.lambda4)
        assert max(np.abs(ga).max(), np.abs(gb).max()) > 1e-3

    def test_plus_one_over_q_reading_fails(self):
        # the alternative +1/q constant in the b-equation is not stationary
        s = qsc_stationarity(0.1, 0.2)
        va = QscChannel(0.1).posterior()
        vb = QscChannel(0.2).posterior()
        _, gb = lagrangian_gradient(va, vb, s.lambda1, s.lambda2, s.lambda3, s.lambda4)
        gb_alt = gb + s.lambda2 * (1 / 3 - 1 / math.log(3))
        assert np.abs(gb_alt).max() > 1e-2

    @pytest.mark.parametrize("pa,pb", [(0.0, 0.2), (TOP, 0.2), (0.2, TOP)])
    def test_domain(self, pa, pb):
        with pytest.raises(ValueError):
            qsc_stationarity(pa, pb)

    @settings(max_examples=30)
    @given(st.floats(0.01, 0.6), st.floats(0.01, 0.6))
    def test_property(self, pa, pb):
        assert qsc_stationarity(pa, pb).residual < 1e-8
