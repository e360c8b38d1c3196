import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from sep3d.core_optics import ApertureModel, warn_imaginary
from sep3d.qfi import (
    is_psd,
    localization_qfi,
    qfi_clear_analytic,
    qfi_phase_covariance,
    qfi_state_derivative,
)

coord = st.floats(-1.0, 1.0, allow_nan=False)


def _gaussian_qfi_radial(alpha):
    """Brute-force 1D radial quadrature of 4 Cov(grad Psi) for the weight exp(-alpha u^2)."""
    mom = [integrate.quad(lambda r, k=k: r ** (2 * k + 1) * math.exp(-alpha * r * r), 0, 1,
                          epsabs=0, epsrel=1e-13)[0] for k in range(3)]
    m2, m4 = mom[1] / mom[0], mom[2] / mom[0]
    h_perp = 4 * (2 * math.pi) ** 2 * m2 / 2
    h_zz = 4 * math.pi**2 * (m4 - m2**2)
    return np.diag([h_perp, h_perp, h_zz])


def test_closed_form():
    H = qfi_clear_analytic()
    assert np.allclose(np.diag(H), [4 * math.pi**2, 4 * math.pi**2, math.pi**2 / 3], rtol=0, atol=0)


def test_phase_route_clear():
    H = qfi_phase_covariance(check=True)
    np.testing.assert_allclose(H, qfi_clear_analytic(), rtol=0, atol=1e-11)


@pytest.mark.parametrize("alpha", [0.5, 2.0, 4.0])
def test_phase_route_gaussian_against_radial_oracle(alpha):
    H = qfi_phase_covariance(ApertureModel.gaussian(alpha))
    np.testing.assert_allclose(H, _gaussian_qfi_radial(alpha), rtol=1e-11, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(coord, coord, coord)
def test_state_route_is_separation_independent(x, y, z):
    H = qfi_state_derivative((x, y, z))
    np.testing.assert_allclose(H, qfi_clear_analytic(), atol=1e-8 * 4 * math.pi**2)
    assert is_psd(H)


@settings(max_examples=15, deadline=None)
@given(coord, coord, coord)
def test_localization_equals_separation_qfi_gaussian(x, y, z):
    ap = ApertureModel.gaussian(1.5)
    np.testing.assert_allclose(localization_qfi((x, y, z), ap), qfi_phase_covariance(ap), atol=1e-9)


def test_no_imaginary_warning_for_resolved_grid():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        qfi_state_derivative((0.9, -0.4, 1.0))


def test_imaginary_residue_warning():
    with pytest.warns(RuntimeWarning):
        warn_imaginary(1e-6, 1e-8, "probe")
