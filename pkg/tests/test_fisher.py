import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sep3d.core_optics import ApertureModel, SeparationVector
from sep3d.fisher import (
    CENTRAL_FD,
    axial_overlap,
    crb_from_fisher,
    fisher_matrix,
    information_gap,
    sincos_fi_axial,
    sincos_fi_transverse,
)
from sep3d.modal import (
    SMALL_L,
    SinCos,
    channel_probabilities_and_jacobian,
    mode_overlap_amplitude,
    sincos_modes,
    zernike_modes,
)
from sep3d.qfi import qfi_clear_analytic, qfi_phase_covariance

H = qfi_clear_analytic()
pos = st.floats(0.01, 0.6, allow_nan=False)


@settings(max_examples=20, deadline=None)
@given(pos, pos, pos)
def test_zernike_fi_below_qfi(x, y, z):
    J = fisher_matrix(zernike_modes(), (x, y, z)).matrix
    assert np.allclose(J, J.T)
    assert np.min(np.linalg.eigvalsh(J)) > -1e-9
    assert information_gap(J, H) > -1e-8


def test_sincos_fi_below_qfi_for_3d_separation():
    J = fisher_matrix(sincos_modes(3, 3), (0.15, 0.1, 0.2)).matrix
    assert information_gap(J, H) > -1e-8


def test_gaussian_aperture_fi_below_its_qfi():
    ap = ApertureModel.gaussian(2.0)
    J = fisher_matrix(zernike_modes(), (0.2, 0.1, 0.3), ap).matrix
    assert information_gap(J, qfi_phase_covariance(ap)) > -1e-8


def test_analytic_against_central_differences():
    l = (0.25, 0.25, 0.25)
    a = fisher_matrix(zernike_modes(), l).matrix
    f = fisher_matrix(zernike_modes(), l, deriv=CENTRAL_FD).matrix
    np.testing.assert_allclose(f, a, rtol=1e-5, atol=1e-7)


def test_origin_uses_matched_filter_limits():
    res = fisher_matrix(zernike_modes(), (0, 0, 0))
    np.testing.assert_allclose(res.matrix, H, atol=1e-10)
    assert set(res.limits) == {"Z2", "Z3", "Z4"}


def test_small_l_model_at_origin():
    res = fisher_matrix(zernike_modes(), (0, 0, 0), model=SMALL_L)
    np.testing.assert_allclose(res.matrix, H, atol=1e-12)


def test_fd_drops_zero_channels():
    res = fisher_matrix(zernike_modes(), (0.1, 0.0, 0.1), deriv=CENTRAL_FD)
    assert "Z3" in res.dropped
    assert res.matrix[1, 1] == pytest.approx(0.0, abs=1e-6)


def test_unknown_derivative_mode():
    with pytest.raises(ValueError):
        fisher_matrix(zernike_modes(), (0.1, 0.1, 0.1), deriv="forward")


class TestCRB:
    def test_inverse(self):
        F = np.array([[4.0, 1.0, 0.0], [1.0, 3.0, 0.0], [0.0, 0.0, 2.0]])
        res = crb_from_fisher(F)
        np.testing.assert_allclose(res.crb @ F, np.eye(3), atol=1e-14)
        assert not res.singular_flag and res.method == "inverse"

    def test_singular_gives_infinite_bounds(self):
        F = np.diag([2.0, 1.0, 0.0])
        res = crb_from_fisher(F)
        assert res.singular_flag and res.method == "pseudo-inverse"
        assert res.crb[2, 2] == math.inf
        assert res.crb[0, 0] == pytest.approx(0.5)

    def test_per_coordinate(self):
        F = np.array([[4.0, 1.0, 0.0], [1.0, 3.0, 0.0], [0.0, 0.0, 2.0]])
        res = crb_from_fisher(F, per_coordinate=True)
        np.testing.assert_allclose(np.diag(res.crb), [0.25, 1 / 3, 0.5])
        # known nuisance coordinates can only lower the bound
        assert np.all(np.diag(res.crb) <= np.diag(crb_from_fisher(F).crb) + 1e-15)

    def test_qcrb_of_clear_aperture(self):
        np.testing.assert_allclose(np.diag(crb_from_fisher(H).crb),
                                   [1 / (4 * math.pi**2), 1 / (4 * math.pi**2), 3 / math.pi**2])


class TestSinCosConvergence:
    def test_transverse_monotone_and_bounded(self):
        conv = sincos_fi_transverse(0.3, 0.7, (8, 8))
        assert np.all(np.diff(conv.J_xx) >= -1e-14)
        assert np.all(np.diff(conv.J_yy) >= -1e-14)
        assert np.all(conv.J_xx <= 4 * math.pi**2 + 1e-8)
        # isotropy: the complete family is blind to phi_l
        assert conv.J_xx[-1] == pytest.approx(conv.J_yy[-1], rel=2e-2)

    def test_transverse_matches_disk_quadrature(self):
        # mode channels only: the truncated sum carries no complement channel
        modes = sincos_modes(3, 3)
        l = SeparationVector.from_polar(0.2, 0.5, 0.0)
        probs, dp = channel_probabilities_and_jacobian(modes, l, ApertureModel.clear(1024, 128))
        J_xx = np.sum(dp[:, 0] ** 2 / probs.p)
        conv = sincos_fi_transverse(0.2, 0.5, (3, 3))
        assert conv.J_xx[-1] == pytest.approx(J_xx, rel=1e-7)

    def test_axial_overlap_against_disk_quadrature(self):
        for family in ("CC", "SC"):
            for m in range(1, 6):
                # the disk route fixes phi0 = pi l_z / 2, the axial route phi0 = 0
                ref = mode_overlap_amplitude(SinCos(family, m, 0), (0, 0, 0.3))
                assert abs(axial_overlap(family, m, 0.3) * np.exp(0.15j * math.pi) - ref) < 1e-12

    def test_axial_monotone_and_bounded(self):
        conv = sincos_fi_axial(0.3, 30)
        assert np.all(np.diff(conv.J_zz) >= 0)
        assert np.all(conv.J_zz <= math.pi**2 / 3 + 1e-8)

    def test_axial_deficit_decays_like_inverse_truncation(self):
        full = math.pi**2 / 3
        d = [full - sincos_fi_axial(0.3, M).J_zz[-1] for M in (20, 40, 80)]
        assert d[0] / d[1] == pytest.approx(2.0, rel=0.1)
        assert d[1] / d[2] == pytest.approx(2.0, rel=0.1)
