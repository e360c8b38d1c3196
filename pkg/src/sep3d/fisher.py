"""Classical Fisher information of modal photon counting and the resulting Cramér-Rao bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core_optics import ApertureModel, SeparationVector
from .modal import (
    EXACT,
    ModeSet,
    SinCos,
    Zernike,
    channel_probabilities,
    channel_probabilities_and_jacobian,
    projector,
    sincos_modes,
    sincos_transverse_gradient,
    radial_node_count,
    _gauss_legendre_unit,
)

SMALL_PROBABILITY = 1e-14
ANALYTIC = "analytic"
CENTRAL_FD = "central-fd"
COMPLEMENT = "complement"


@dataclass(frozen=True)
class FisherResult:
    """Per-photon Fisher matrix with bookkeeping of near-zero channels.

    ``dropped`` lists channels with probability below ``1e-14`` that
    contributed nothing; ``limits`` lists those whose finite zero-probability
    limit of ``(dP)^2/P`` was used instead.
    """

    matrix: np.ndarray
    dropped: tuple = ()
    limits: tuple = ()


def _fd_steps(l: SeparationVector, step):
    if step is not None:
        return np.full(3, float(step))
    return np.maximum(1e-5, 1e-3 * np.abs(l.as_array()))


def _small_l_limit_gradient(n: int) -> np.ndarray:
    # P_n = (g . l)^2 at leading order for n = 2, 3, 4
    return {2: np.array([math.pi, 0.0, 0.0]),
            3: np.array([0.0, math.pi, 0.0]),
            4: np.array([0.0, 0.0, math.pi / math.sqrt(12.0)])}[n]


def fisher_matrix(modes: ModeSet, l, ap: ApertureModel | None = None, model: str = EXACT,
                  deriv: str = ANALYTIC, step: float | None = None) -> FisherResult:
    """Per-photon FI ``J = sum_k dP_k dP_k^T / P_k`` over the modes and the complement channel.

    Parameters
    ----------
    deriv : {"analytic", "central-fd"}
        Differentiate under the integral sign, or central differences with
        step ``max(1e-5, 1e-3 |l_mu|)`` per coordinate (or ``step``).

    Notes
    -----
    A channel with ``P_k < 1e-14`` is dropped, except a Zernike tilt or
    defocus channel in analytic mode: its amplitude vanishes linearly there,
    so ``(dP)^2/P`` tends to ``4 |d<Z|K+>|^2`` and that limit is used.
    """
    l = SeparationVector.coerce(l)
    modes = tuple(modes)
    labels = [m.label for m in modes] + [COMPLEMENT]

    if deriv == ANALYTIC:
        probs, dp = channel_probabilities_and_jacobian(modes, l, ap, model)
        amp_derivs = None
        if model == EXACT:
            _, _, (_, _, dC, dS) = projector(modes, ap).probabilities_and_jacobian(l)
            amp_derivs = (dC, dS)
    elif deriv == CENTRAL_FD:
        probs = channel_probabilities(modes, l, ap, model)
        h = _fd_steps(l, step)
        dp = np.empty((len(modes), 3))
        base = l.as_array()
        for mu in range(3):
            e = np.zeros(3)
            e[mu] = h[mu]
            up = channel_probabilities(modes, base + e, ap, model).p
            dn = channel_probabilities(modes, base - e, ap, model).p
            dp[:, mu] = (up - dn) / (2.0 * h[mu])
        amp_derivs = None
    else:
        raise ValueError(f"unknown derivative mode {deriv!r}")

    P = probs.all
    dP = np.vstack([dp, -dp.sum(axis=0)])
    J = np.zeros((3, 3))
    dropped, limits = [], []
    for k, (pk, g) in enumerate(zip(P, dP)):
        if pk >= SMALL_PROBABILITY:
            J += np.outer(g, g) / pk
            continue
        mode = modes[k] if k < len(modes) else None
        if deriv == ANALYTIC and isinstance(mode, Zernike) and mode.n >= 2:
            if model == EXACT:
                dC, dS = amp_derivs
                J += 4.0 * (np.outer(dC[k], dC[k]) + np.outer(dS[k], dS[k]))
            else:
                a = _small_l_limit_gradient(mode.n)
                J += 4.0 * np.outer(a, a)
            limits.append(labels[k])
        else:
            dropped.append(labels[k])
    return FisherResult(0.5 * (J + J.T), tuple(dropped), tuple(limits))


class CRBResult(NamedTuple):
    fisher: np.ndarray
    crb: np.ndarray
    conditioning: float
    singular_flag: bool
    method: str


def crb_from_fisher(F, per_coordinate: bool = False) -> CRBResult:
    """Cramér-Rao bound matrix from a Fisher matrix.

    The full inverse is used unless the smallest eigenvalue is at most
    ``1e-10 * trace``; then the pseudo-inverse is returned, the singular flag
    set and every coordinate touched by the null space gets an infinite
    diagonal bound. ``per_coordinate=True`` returns ``diag(1/F_ii)`` instead
    (the bound when the other coordinates are known).
    """
    F = np.asarray(F, dtype=float)
    F = 0.5 * (F + F.T)
    evals, evecs = np.linalg.eigh(F)
    lam_min = float(evals[0])
    trace = float(np.trace(F))
    singular = not (lam_min > 1e-10 * trace and trace > 0)

    if per_coordinate:
        d = np.diag(F)
        ok = (d > 0) & (d > 1e-10 * trace)
        bounds = np.full(3, np.inf)
        bounds[ok] = 1.0 / d[ok]
        return CRBResult(F, np.diag(bounds), lam_min, not bool(np.all(ok)), "per-coordinate")

    if not singular:
        return CRBResult(F, np.linalg.inv(F), lam_min, False, "inverse")
    crb = np.linalg.pinv(F, rcond=1e-10, hermitian=True)
    null = evecs[:, evals <= 1e-10 * max(trace, 0.0)]
    touched = np.sum(null**2, axis=1) > 1e-12
    crb[np.diag_indices(3)] = np.where(touched, np.inf, np.diag(crb))
    return CRBResult(F, crb, lam_min, True, "pseudo-inverse")


def information_gap(J, H) -> float:
    """Smallest eigenvalue of ``H - J``; nonnegative when ``J <= H``."""
    D = np.asarray(H) - np.asarray(J)
    return float(np.min(np.linalg.eigvalsh(0.5 * (D + D.T))))


class TransverseConvergence(NamedTuple):
    levels: np.ndarray
    J_xx: np.ndarray
    J_yy: np.ndarray
    J_xy: np.ndarray


def sincos_fi_transverse(l_perp: float, phi_l: float = 0.0,
                         truncation: tuple[int, int] = (20, 20)) -> TransverseConvergence:
    """Transverse FI of the truncated sine-cosine basis at ``l_z = 0``, per truncation level.

    Level ``k`` keeps every mode with ``m <= min(k, M_max)`` and
    ``n <= min(k, N_max)``. Each mode contributes ``4 da_mu da_nu`` where
    ``a`` is its real overlap amplitude; derivatives of the Bessel integrals
    use ``J_n' = (J_{n-1} - J_{n+1})/2``.
    """
    if l_perp < 0:
        raise ValueError("l_perp must be nonnegative")
    M_max, N_max = truncation
    n_levels = max(M_max, N_max) + 1
    contrib = np.zeros((n_levels, 3))
    for mode in sincos_modes(M_max, N_max):
        g = sincos_transverse_gradient(mode, l_perp, phi_l)
        contrib[max(mode.m, mode.n)] += 4.0 * np.array([g[0] ** 2, g[1] ** 2, g[0] * g[1]])
    cum = np.cumsum(contrib, axis=0)
    return TransverseConvergence(np.arange(n_levels), cum[:, 0], cum[:, 1], cum[:, 2])


def _axial_amplitudes(family: str, m, l_z: float, nodes: int | None = None):
    """Real amplitudes of ``<A_m0|K+>`` at ``l_perp = 0`` and their ``l_z`` derivatives.

    With ``w = u^2 - 1/2`` the overlap is ``exp(-i pi l_z/2)`` times a real
    (CC) or imaginary (SC) symmetrized integral over ``w in [-1/2, 1/2]``.
    """
    m = np.atleast_1d(np.asarray(m, dtype=int))
    if nodes is None:
        nodes = 2 * radial_node_count(int(m.max()), abs(l_z))
    v, wts = _gauss_legendre_unit(nodes)
    w = v - 0.5
    c_m = np.where(m == 0, 1.0, 2.0)
    pref = np.sqrt(c_m) * (-1.0) ** m
    arg = np.pi * l_z * w
    trig = np.cos if family == "CC" else np.sin
    radial = trig(2.0 * np.pi * np.outer(m, w)) * wts
    if family == "CC":
        amp = radial @ np.cos(arg)
        d = radial @ (-np.pi * w * np.sin(arg))
    else:
        amp = radial @ np.sin(arg)
        d = radial @ (np.pi * w * np.cos(arg))
    return pref * amp, pref * d


def axial_overlap(family: str, m: int, l_z: float) -> complex:
    """``<A_m0|K+>`` for an on-axis pair (``A`` in ``CC, SC``), clear aperture, ``phi0 = 0``."""
    SinCos(family, m, 0)
    if family not in ("CC", "SC"):
        raise ValueError("axial overlaps use the n = 0 families CC and SC")
    r = float(_axial_amplitudes(family, m, l_z)[0][0])
    phase = complex(math.cos(math.pi * l_z / 2), -math.sin(math.pi * l_z / 2))
    return phase * (r if family == "CC" else -1j * r)


class AxialConvergence(NamedTuple):
    levels: np.ndarray
    J_zz: np.ndarray


def sincos_fi_axial(l_z: float, truncation: int = 20) -> AxialConvergence:
    """Axial FI of the ``n = 0`` sine-cosine modes at ``l_perp = 0``, per level ``m <= M``."""
    if truncation < 0:
        raise ValueError("truncation must be nonnegative")
    m = np.arange(truncation + 1)
    nodes = 2 * radial_node_count(truncation, abs(l_z))
    _, d_cc = _axial_amplitudes("CC", m, l_z, nodes)
    _, d_sc = _axial_amplitudes("SC", m, l_z, nodes)
    d_sc[0] = 0.0
    contrib = 4.0 * (d_cc**2 + d_sc**2)
    return AxialConvergence(m, np.cumsum(contrib))
