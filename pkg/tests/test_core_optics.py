import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sep3d.core_optics import (
    ApertureModel,
    DomainError,
    QuadratureError,
    SeparationVector,
    aperture_average,
    eigen_decompose,
    normalize_separation,
    overlap_delta,
    phase_psi,
    resolution_scales,
    source_wavefunction,
)

coord = st.floats(-1.0, 1.0, allow_nan=False)


def _airy_overlap(l_perp):
    # |<K-|K+>| for an in-focus pair: 2 J1(z)/z with z = 4 pi l_perp
    z = 4 * mpmath.pi * l_perp
    return float(2 * mpmath.besselj(1, z) / z)


class TestSeparationVector:
    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            SeparationVector(math.nan, 0.0, 0.0)
        with pytest.raises(ValueError):
            SeparationVector(0.0, math.inf, 0.0)

    def test_polar_round_trip(self):
        l = SeparationVector.from_polar(0.3, 0.7, 0.1)
        assert l.l_perp == pytest.approx(0.3)
        assert l.phi_l == pytest.approx(0.7)
        assert l.l_z == 0.1

    def test_coerce(self):
        l = SeparationVector.coerce([0.1, 0.2, 0.3])
        assert np.array_equal(l.as_array(), [0.1, 0.2, 0.3])
        assert SeparationVector.coerce(l) is l
        assert tuple(-l) == (-0.1, -0.2, -0.3)


class TestMoments:
    def test_clear_aperture_moments(self):
        ap = ApertureModel.clear()
        assert aperture_average(lambda u, p: u**2, ap) == pytest.approx(0.5, abs=1e-12)
        assert aperture_average(lambda u, p: u**4, ap) == pytest.approx(1 / 3, abs=1e-12)
        ux2 = aperture_average(lambda u, p: (u * np.cos(p)) ** 2, ap)
        uxuy = aperture_average(lambda u, p: u**2 * np.cos(p) * np.sin(p), ap)
        assert ux2 == pytest.approx(0.25, abs=1e-12)
        assert abs(uxuy) < 1e-14

    def test_gaussian_weight_matches_radial_quadrature(self):
        alpha = 1.7
        ap = ApertureModel.gaussian(alpha)
        num = mpmath.quad(lambda r: r**3 * mpmath.exp(-alpha * r**2), [0, 1])
        den = mpmath.quad(lambda r: r * mpmath.exp(-alpha * r**2), [0, 1])
        assert aperture_average(lambda u, p: u**2, ap) == pytest.approx(float(num / den), rel=1e-12)

    def test_self_check_passes_for_smooth_integrand(self):
        v = aperture_average(lambda u, p: np.cos(3 * u**2), check=True)
        assert v == pytest.approx(float(mpmath.quad(lambda x: mpmath.cos(3 * x), [0, 1])), abs=1e-12)

    def test_self_check_flags_underresolved_integrand(self):
        coarse = ApertureModel.clear(radial_order=8, angular_order=16)
        with pytest.raises(QuadratureError):
            aperture_average(lambda u, p: np.cos(40 * u**2), coarse, check=True)


class TestOverlap:
    def test_on_axis_pair_is_sinc(self):
        for lz in (0.1, 0.5, 0.9):
            delta, phi0 = overlap_delta((0, 0, lz))
            assert delta == pytest.approx(abs(math.sin(math.pi * lz) / (math.pi * lz)), abs=1e-12)
            assert phi0 == pytest.approx(math.pi * lz / 2, abs=1e-12)

    def test_in_focus_pair_is_airy(self):
        for lp in (0.05, 0.2, 0.6):
            delta, phi0 = overlap_delta(SeparationVector.from_polar(lp, 0.4, 0.0))
            assert delta == pytest.approx(abs(_airy_overlap(lp)), abs=1e-11)

    def test_coincident_sources(self):
        delta, phi0 = overlap_delta((0, 0, 0))
        assert delta == pytest.approx(1.0, abs=1e-14)
        assert phi0 == 0.0

    @settings(max_examples=30, deadline=None)
    @given(coord, coord, coord)
    def test_phase_convention_makes_overlap_real(self, x, y, z):
        ap = ApertureModel.clear()
        delta, phi0 = overlap_delta((x, y, z), ap)
        assert 0.0 <= delta <= 1.0 + 1e-12
        assert -math.pi / 2 < phi0 <= math.pi / 2
        kp = source_wavefunction((x, y, z), ap, +1)
        km = source_wavefunction((x, y, z), ap, -1)
        inner = np.sum(km.conj() * kp * ap.grid().area)
        assert inner.real == pytest.approx(delta, abs=1e-10)
        assert abs(inner.imag) < 1e-10

    def test_states_are_normalized(self):
        ap = ApertureModel.gaussian(2.0)
        k = source_wavefunction((0.2, -0.1, 0.3), ap)
        assert np.sum(np.abs(k) ** 2 * ap.grid().area) == pytest.approx(1.0, abs=1e-12)


class TestEigen:
    def test_values(self):
        e = eigen_decompose(0.6)
        assert (e.e_plus, e.e_minus) == pytest.approx((0.8, 0.2))

    @pytest.mark.parametrize("bad", [-0.1, 1.1])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            eigen_decompose(bad)


def test_phase_psi_formula():
    u, phi = 0.7, 1.1
    expected = 2 * math.pi * (0.1 * u * math.cos(phi) + 0.2 * u * math.sin(phi)) + math.pi * 0.3 * u**2
    assert phase_psi(u, phi, (0.1, 0.2, 0.3)) == pytest.approx(expected)


def test_physical_units():
    sigma0, zeta0 = resolution_scales(500e-9, 0.1, 1e-3)
    assert sigma0 == pytest.approx(500e-9 * 0.1 / 1e-3)
    assert zeta0 == pytest.approx(500e-9 * 0.1**2 / 1e-6)
    l = normalize_separation((sigma0, 2 * sigma0, zeta0), 500e-9, 0.1, 1e-3)
    assert tuple(l) == pytest.approx((1.0, 2.0, 1.0))
    with pytest.raises(ValueError):
        resolution_scales(0.0, 1.0, 1.0)
