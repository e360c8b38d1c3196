"""Per-photon quantum Fisher information for the 3D pair separation.

Three independent evaluations are provided:

* :func:`qfi_clear_analytic` - closed form for the clear circular pupil;
* :func:`qfi_phase_covariance` - four times the covariance of the pupil-phase
  gradient under the aperture weight;
* :func:`qfi_state_derivative` - built from the sampled photon state
  ``|K+>`` and its analytic derivatives.

:func:`localization_qfi` evaluates the pure-state QFI of a single source,
which coincides with the pair-separation QFI.
"""

from __future__ import annotations

import numpy as np

from .core_optics import (
    ApertureModel,
    SeparationVector,
    phase_gradient,
    source_wavefunction,
    warn_imaginary,
    _self_check,
    DEFAULT_QUAD_TOL,
)

IMAG_TOL = 1e-8


def qfi_clear_analytic() -> np.ndarray:
    """``diag(4 pi^2, 4 pi^2, pi^2/3)``, independent of the separation."""
    return np.diag([4.0 * np.pi**2, 4.0 * np.pi**2, np.pi**2 / 3.0])


def _phase_covariance(ap: ApertureModel) -> np.ndarray:
    g = ap.grid()
    grad = phase_gradient(g)
    mean = grad @ g.mass
    second = (grad * g.mass) @ grad.T
    H = 4.0 * (second - np.outer(mean, mean))
    return 0.5 * (H + H.T)


def qfi_phase_covariance(ap: ApertureModel | None = None, *, check: bool = False,
                         tol: float = DEFAULT_QUAD_TOL) -> np.ndarray:
    """QFI as ``4 Cov(grad_l Psi)`` under the weight ``|P(u)|^2``.

    The phase is linear in ``l``, so no separation argument is needed.
    """
    ap = ApertureModel.clear() if ap is None else ap
    if check:
        return _self_check(_phase_covariance, ap, tol, "qfi_phase_covariance")
    return _phase_covariance(ap)


def _state_and_derivatives(l, ap, phi0=None):
    g = ap.grid()
    K = source_wavefunction(l, ap, +1, phi0)
    # d/dl_mu <u|K+> = -i dPsi/dl_mu <u|K+>  (phi0 held at its value at l)
    dK = -1j * phase_gradient(g) * K
    return g.area, K, dK


def qfi_state_derivative(l, ap: ApertureModel | None = None) -> np.ndarray:
    """QFI from ``4[(d_mu <K+|) d_nu |K+> + <K+|d_mu K+><K+|d_nu K+>]``.

    Both inner products are integrated on the aperture grid; the real part
    is returned and a :class:`RuntimeWarning` is issued if the imaginary
    residue of any entry exceeds ``1e-8``.
    """
    ap = ApertureModel.clear() if ap is None else ap
    l = SeparationVector.coerce(l)
    area, K, dK = _state_and_derivatives(l, ap)
    cross = (dK.conj() * area) @ dK.T
    first = (K.conj() * area) @ dK.T
    H = 4.0 * (cross + np.outer(first, first))
    warn_imaginary(float(np.max(np.abs(H.imag))), IMAG_TOL, "qfi_state_derivative")
    H = H.real
    return 0.5 * (H + H.T)


def localization_qfi(l, ap: ApertureModel | None = None) -> np.ndarray:
    """QFI for localizing the single source at ``+l``.

    Uses the pure-state expression
    ``4 Re[<d_mu K|d_nu K> - <d_mu K|K><K|d_nu K>]`` with ``phi0 = 0``.
    """
    ap = ApertureModel.clear() if ap is None else ap
    l = SeparationVector.coerce(l)
    area, K, dK = _state_and_derivatives(l, ap, phi0=0.0)
    cross = (dK.conj() * area) @ dK.T
    proj = (K.conj() * area) @ dK.T
    H = 4.0 * (cross - np.outer(proj.conj(), proj))
    warn_imaginary(float(np.max(np.abs(H.imag))), IMAG_TOL, "localization_qfi")
    H = H.real
    return 0.5 * (H + H.T)


def is_psd(H: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.min(np.linalg.eigvalsh(0.5 * (H + H.T))) >= -tol)
