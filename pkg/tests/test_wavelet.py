import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scalebreak import (
    SampledPath,
    ValidationError,
    coeff,
    coefficients_at_scale,
    make_band_limited,
    make_compact_poly,
    psi_hat,
)


def gl_moment(wavelet, r, order=200):
    """High-order quadrature oracle for int t^r psi(t) dt on [0, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    return float(np.sum(w * t**r * wavelet.evaluate(t)))


class TestCompactPoly:
    @pytest.mark.parametrize("q", [2, 3, 4])
    def test_vanishing_moments(self, q):
        w = make_compact_poly(q)
        for r in range(q):
            assert abs(w.moment(r)) <= 1e-12

    def test_q2_has_exactly_two_moments(self):
        w = make_compact_poly(2)
        assert abs(gl_moment(w, 2)) > 1e-6

    def test_q3_third_moment_nonzero(self):
        w = make_compact_poly(3)
        assert abs(gl_moment(w, 3)) > 1e-6
        assert abs(gl_moment(w, 2)) <= 1e-12

    def test_moment_matches_quadrature_oracle(self):
        w = make_compact_poly(3)
        for r in range(6):
            assert w.moment(r) == pytest.approx(gl_moment(w, r), abs=1e-12)

    def test_unit_l2_norm(self):
        w = make_compact_poly(3)
        nodes, wts = np.polynomial.legendre.leggauss(200)
        t = 0.5 * (nodes + 1.0)
        norm = float(np.sum(0.5 * wts * w.evaluate(t) ** 2))
        assert norm == pytest.approx(1.0, rel=1e-12)

    def test_boundary_zeros(self):
        w = make_compact_poly(3)
        assert w.evaluate(0.0) == 0.0
        assert w.evaluate(1.0) == pytest.approx(0.0, abs=1e-14)
        assert w.evaluate(-0.5) == 0.0 and w.evaluate(1.5) == 0.0

    def test_q_below_two_rejected(self):
        with pytest.raises(ValidationError):
            make_compact_poly(1)


class TestPsiHat:
    def test_zero_frequency_vanishes(self):
        w = make_compact_poly(3)
        assert abs(psi_hat(w, 0.0)) <= 1e-12

    def test_derivatives_vanish_up_to_q(self):
        # psi_hat(xi) ~ (-i)^q m_q xi^q / q! near 0, so |psi_hat| at small xi
        # scales like xi^q.
        w = make_compact_poly(3)
        assert abs(psi_hat(w, 0.1)) / abs(psi_hat(w, 0.05)) == pytest.approx(
            2.0**3, rel=0.05
        )

    def test_conjugate_symmetry(self):
        w = make_compact_poly(3)
        xi = np.array([0.5, 1.7, 12.0, 80.0])
        np.testing.assert_allclose(
            np.abs(psi_hat(w, -xi)), np.abs(psi_hat(w, xi)), rtol=1e-10
        )

    def test_against_direct_quadrature(self):
        w = make_compact_poly(3)
        nodes, wts = np.polynomial.legendre.leggauss(400)
        t = 0.5 * (nodes + 1.0)
        for xi in (0.7, 5.0, 33.3, 150.0):
            direct = np.sum(0.5 * wts * w.evaluate(t) * np.exp(-1j * xi * t))
            assert psi_hat(w, xi) == pytest.approx(direct, abs=1e-6)


class TestBandLimited:
    def test_hat_vanishes_at_zero(self):
        w = make_band_limited(2.0, 3.0)
        assert psi_hat(w, 0.0) == 0.0
        assert psi_hat(w, 1.99) == 0.0
        assert psi_hat(w, 3.01) == 0.0

    def test_hat_is_even(self):
        w = make_band_limited(2.0, 3.0)
        xi = np.linspace(-4, 4, 41)
        np.testing.assert_allclose(psi_hat(w, xi), psi_hat(w, -xi))

    def test_integral_of_psi_vanishes(self):
        w = make_band_limited(2.0, 3.0)
        t = np.arange(-400.0, 400.0, 0.25)
        assert abs(np.sum(w.evaluate(t)) * 0.25) < 1e-6

    def test_band_ordering_rejected(self):
        with pytest.raises(ValidationError):
            make_band_limited(3.0, 2.0)

    def test_effective_support_is_finite(self):
        w = make_band_limited(2.0, 3.0)
        assert 0 < w.support_radius < 800


class TestCoeff:
    def test_zero_path(self):
        path = SampledPath(values=np.zeros(100))
        w = make_compact_poly(3)
        assert coeff(path, w, 8.0, 16.0) == 0.0

    def test_impulse(self):
        n, p0 = 64, 20
        vals = np.zeros(n + 1)
        vals[p0] = 1.0
        path = SampledPath(values=vals)
        w = make_compact_poly(3)
        a, b = 8.0, 16.0
        expected = 1.0 / math.sqrt(a) * w.evaluate((p0 - b) / a)
        assert coeff(path, w, a, b) == pytest.approx(expected, rel=1e-12)

    def test_constant_path_residual_bounded(self):
        # Discrete vanishing-moment residual obeys |e| <= C / a; the double
        # endpoint zeros make the Riemann sum superconvergent, so the
        # residual here is rounding noise far below that bound.
        n = 4096
        path = SampledPath(values=np.ones(n + 1))
        w = make_compact_poly(3)
        for a in (8, 16, 32, 64):
            assert abs(coeff(path, w, float(a), float(2 * a))) <= 1e-10 / a + 1e-12

    def test_linearity_exact(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=129)
        y = rng.normal(size=129)
        px, py = SampledPath(values=x), SampledPath(values=y)
        pxy = SampledPath(values=x + y)
        w = make_compact_poly(3)
        assert coeff(pxy, w, 8.0, 24.0) == pytest.approx(
            coeff(px, w, 8.0, 24.0) + coeff(py, w, 8.0, 24.0), rel=1e-12
        )

    def test_scale_below_minimum_rejected(self):
        path = SampledPath(values=np.zeros(50))
        w = make_compact_poly(3)
        with pytest.raises(ValidationError):
            coeff(path, w, 0.5, 4.0)

    def test_window_out_of_range(self):
        path = SampledPath(values=np.zeros(50))
        w = make_compact_poly(3)
        with pytest.raises(ValidationError):
            coeff(path, w, 8.0, 45.0)
        with pytest.raises(ValidationError):
            coeff(path, w, 8.0, -1.0)

    def test_delta_prefactor(self):
        vals = np.arange(101, dtype=float)
        p1 = SampledPath(values=vals, delta=1.0)
        p2 = SampledPath(values=vals, delta=0.5)
        w = make_band_limited(2.0, 3.0)
        assert coeff(p2, w, 8.0, 50.0) == pytest.approx(
            0.5 * coeff(p1, w, 8.0, 50.0)
        )


class TestCoefficientsAtScale:
    def test_matches_single_coefficient_compact(self):
        rng = np.random.default_rng(7)
        path = SampledPath(values=rng.normal(size=257))
        w = make_compact_poly(3)
        a = 8
        all_coeffs = coefficients_at_scale(path, w, float(a))
        assert all_coeffs.size == 256 // 8
        for p in (0, 3, 17, 31):
            assert all_coeffs[p] == pytest.approx(
                coeff(path, w, float(a), float(a * p)), rel=1e-10, abs=1e-12
            )

    def test_matches_single_coefficient_band_limited(self):
        rng = np.random.default_rng(8)
        path = SampledPath(values=rng.normal(size=2001))
        w = make_band_limited(2.0, 3.0)
        a = 10
        all_coeffs = coefficients_at_scale(path, w, float(a))
        for p in (40, 100, 160):
            assert all_coeffs[p] == pytest.approx(
                coeff(path, w, float(a), float(a * p)), rel=1e-6, abs=1e-10
            )

    @settings(max_examples=10, deadline=None)
    @given(st.integers(min_value=2, max_value=12))
    def test_count_matches_floor(self, a):
        path = SampledPath(values=np.zeros(101))
        w = make_compact_poly(2)
        assert coefficients_at_scale(path, w, float(a)).size == 100 // a
