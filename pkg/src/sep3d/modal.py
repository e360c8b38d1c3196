"""Projection modes on the pupil and the photon-counting probabilities they induce.

Two mode families are supported: the first four Zernike polynomials
(piston, x-tilt, y-tilt, defocus) and the sine-cosine Fourier basis

    CC_mn = sqrt(c_m c_n / pi) cos(2 pi m u^2) cos(n phi),  etc.,

with ``c_n = 2 - delta_n0``. Both are orthonormal on the unit disk under
plain area measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np
from scipy import special

from .core_optics import (
    ApertureModel,
    SeparationVector,
    DomainError,
    overlap_delta,
    phase_gradient,
    _grid_phase,
    _self_check,
    DEFAULT_QUAD_TOL,
)

EXACT = "exact"
SMALL_L = "small-l"
PROBABILITY_MODELS = (EXACT, SMALL_L)
SUM_TOL = 1e-10
SQRT_PI = math.sqrt(math.pi)


class ModeIndexError(ValueError):
    """Invalid mode family or index."""


class ProbabilityConsistencyError(RuntimeError):
    """Channel probabilities sum to more than one beyond tolerance."""


@dataclass(frozen=True)
class Zernike:
    """Zernike mode ``Z_n``, ``n = 1..4`` in the piston/tilt/tilt/defocus order."""

    n: int

    def __post_init__(self):
        if self.n not in (1, 2, 3, 4):
            raise ModeIndexError(f"Zernike index must be 1..4, got {self.n!r}")

    @property
    def label(self) -> str:
        return f"Z{self.n}"


@dataclass(frozen=True)
class SinCos:
    """Sine-cosine mode ``family_mn`` with family in ``CC, CS, SC, SS``."""

    family: str
    m: int
    n: int

    def __post_init__(self):
        if self.family not in ("CC", "CS", "SC", "SS"):
            raise ModeIndexError(f"unknown sine-cosine family {self.family!r}")
        if self.m < 0 or self.n < 0:
            raise ModeIndexError("sine-cosine indices must be nonnegative")
        if self.family[0] == "S" and self.m < 1:
            raise ModeIndexError(f"{self.family} requires m >= 1")
        if self.family[1] == "S" and self.n < 1:
            raise ModeIndexError(f"{self.family} requires n >= 1")

    @property
    def label(self) -> str:
        return f"{self.family}{self.m},{self.n}"

    @property
    def norm(self) -> float:
        return math.sqrt((1 if self.m == 0 else 2) * (1 if self.n == 0 else 2) / math.pi)


ModeId = Union[Zernike, SinCos]
ModeSet = Sequence[ModeId]


def zernike_modes() -> tuple[Zernike, ...]:
    return tuple(Zernike(n) for n in (1, 2, 3, 4))


def sincos_modes(m_max: int, n_max: int, families: Iterable[str] = ("CC", "CS", "SC", "SS")
                 ) -> tuple[SinCos, ...]:
    """All valid sine-cosine modes with ``m <= m_max`` and ``n <= n_max``."""
    out = []
    for fam in families:
        for m in range(m_max + 1):
            for n in range(n_max + 1):
                if (fam[0] == "S" and m < 1) or (fam[1] == "S" and n < 1):
                    continue
                out.append(SinCos(fam, m, n))
    return tuple(out)


def zernike_eval(n: int, u, phi) -> np.ndarray:
    """Zernike ``Z_n(u, phi)`` for ``n = 1..4``, orthonormal on the unit disk."""
    Zernike(n)
    u = np.asarray(u, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if n == 1:
        return np.full(np.broadcast(u, phi).shape, 1.0 / SQRT_PI)
    if n == 2:
        return 2.0 / SQRT_PI * u * np.cos(phi)
    if n == 3:
        return 2.0 / SQRT_PI * u * np.sin(phi)
    return math.sqrt(3.0 / math.pi) * (2.0 * u**2 - 1.0)


def sincos_eval(mode: SinCos, u, phi) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    phi = np.asarray(phi, dtype=float)
    radial = np.cos if mode.family[0] == "C" else np.sin
    angular = np.cos if mode.family[1] == "C" else np.sin
    return mode.norm * radial(2.0 * np.pi * mode.m * u**2) * angular(mode.n * phi)


def mode_eval(mode: ModeId, u, phi) -> np.ndarray:
    if isinstance(mode, Zernike):
        return zernike_eval(mode.n, u, phi)
    if isinstance(mode, SinCos):
        return sincos_eval(mode, u, phi)
    raise ModeIndexError(f"not a mode: {mode!r}")


def orthonormality_residual(modes: ModeSet, ap: ApertureModel | None = None) -> float:
    """Largest deviation of the quadrature Gram matrix from the identity.

    Inner products use plain area measure on the disk; only the quadrature
    rule of ``ap`` is used.
    """
    ap = ApertureModel.clear() if ap is None else ap
    g = ap.grid()
    B = np.stack([mode_eval(md, g.u, g.phi) for md in modes])
    gram = (B * g.area) @ B.T
    return float(np.max(np.abs(gram - np.eye(len(modes)))))


class ModalProjector:
    """Mode values sampled on an aperture grid, for repeated probability evaluation.

    Holds ``P(u) A_k(u) dA`` for each mode so that the real and imaginary
    parts of ``<A_k|K+>`` (up to the common factor ``exp(i phi0)``) are two
    matrix-vector products.
    """

    def __init__(self, modes: ModeSet, ap: ApertureModel | None = None):
        self.modes = tuple(modes)
        self.ap = ApertureModel.clear() if ap is None else ap
        g = self.ap.grid()
        self._grid = g
        self._weighted = np.stack([mode_eval(md, g.u, g.phi) for md in self.modes]) * (g.amplitude * g.area)
        self._grad = phase_gradient(g)

    def __len__(self):
        return len(self.modes)

    def quadratures(self, l):
        """``(C, S)`` with ``C_k = int P A_k cos Psi`` and ``S_k = int P A_k sin Psi``."""
        psi = _grid_phase(self._grid, SeparationVector.coerce(l))
        return self._weighted @ np.cos(psi), self._weighted @ np.sin(psi)

    def probabilities(self, l) -> np.ndarray:
        C, S = self.quadratures(l)
        return C**2 + S**2

    def probabilities_and_jacobian(self, l):
        """Probabilities ``P_k`` and ``dP_k/dl_mu`` (shape ``(K, 3)``).

        The derivatives are taken under the integral sign.
        """
        l = SeparationVector.coerce(l)
        psi = _grid_phase(self._grid, l)
        c, s = np.cos(psi), np.sin(psi)
        W = self._weighted
        C, S = W @ c, W @ s
        dC = -(W @ (s * self._grad).T)
        dS = W @ (c * self._grad).T
        P = C**2 + S**2
        dP = 2.0 * (C[:, None] * dC + S[:, None] * dS)
        return P, dP, (C, S, dC, dS)


def mode_overlap_amplitude(mode: ModeId, l, sign: int = +1, ap: ApertureModel | None = None,
                           *, check: bool = False, tol: float = DEFAULT_QUAD_TOL) -> complex:
    """``<A|K+->``: integral of ``P(u) exp(+-i phi0 -+ i Psi) A(u)`` over the disk.

    Sine-cosine modes with odd ``n`` are not smooth at the origin in
    ``v = u^2``, so the disk rule converges only algebraically for them
    (about ``1e-7`` at the default order); use
    :func:`sincos_overlap_transverse` when ``l_z = 0``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    ap = ApertureModel.clear() if ap is None else ap
    l = SeparationVector.coerce(l)
    _, phi0 = overlap_delta(l, ap)

    def compute(a):
        g = a.grid()
        psi = _grid_phase(g, l)
        vals = mode_eval(mode, g.u, g.phi) * g.amplitude * g.area
        return complex(np.sum(vals * np.exp(sign * 1j * (phi0 - psi))))

    if check:
        return _self_check(compute, ap, tol, "mode_overlap_amplitude")
    return compute(ap)


@lru_cache(maxsize=16)
def _gauss_legendre_unit(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def radial_node_count(m: int, l_perp: float) -> int:
    return int(max(64, math.ceil(8 * m + 4 * math.ceil(l_perp) * math.pi)))


def bessel_j(n: int, z):
    """Bessel function of the first kind of integer order."""
    return special.jv(n, z)


def bessel_j_prime(n: int, z):
    """``J_n'(z) = (J_{n-1}(z) - J_{n+1}(z)) / 2``."""
    return 0.5 * (special.jv(n - 1, z) - special.jv(n + 1, z))


def bessel_j_over_z(n: int, z):
    """``J_n(z)/z`` for ``n >= 1``, regular at ``z = 0``."""
    return (special.jv(n - 1, z) + special.jv(n + 1, z)) / (2.0 * n)


class TransverseOverlap(NamedTuple):
    """``<A|K+->`` for a transverse separation, as ``amplitude * exp(i phase)``.

    ``amplitude`` is real and may be negative: a sign change is a zero
    crossing of the overlap, not a phase jump, which keeps it smooth in
    ``l_perp``. ``phase`` depends only on ``n mod 4`` and the sign.
    """

    amplitude: float
    phase: float

    @property
    def magnitude(self) -> float:
        return abs(self.amplitude)

    @property
    def value(self) -> complex:
        return self.amplitude * complex(math.cos(self.phase), math.sin(self.phase))


def _radial_trig(mode: SinCos):
    return np.cos if mode.family[0] == "C" else np.sin


def _angular_trig(mode: SinCos, phi_l: float) -> tuple[float, float]:
    """``trig(n phi_l)`` and its derivative w.r.t. ``phi_l``."""
    n = mode.n
    if mode.family[1] == "C":
        return math.cos(n * phi_l), -n * math.sin(n * phi_l)
    return math.sin(n * phi_l), n * math.cos(n * phi_l)


def _radial_integrals(mode: SinCos, l_perp: float):
    """``I = int_0^1 trig(2 pi m v) J_n(2 pi l_perp sqrt v) dv``, ``dI/dl_perp``, ``I/l_perp``.

    Integrated in ``r = sqrt(v)``: ``J_n(a sqrt v)`` behaves as ``v^(n/2)``
    near the origin, which Gauss-Legendre in ``v`` resolves only
    algebraically for odd ``n``, while ``2 r J_n(a r)`` is analytic in ``r``.
    """
    r, w = _gauss_legendre_unit(2 * radial_node_count(mode.m, l_perp))
    z = 2.0 * np.pi * l_perp * r
    t = _radial_trig(mode)(2.0 * np.pi * mode.m * r * r) * (2.0 * r * w)
    n = mode.n
    I = float(t @ bessel_j(n, z))
    dI = float(t @ (bessel_j_prime(n, z) * 2.0 * np.pi * r))
    I_over_l = float(t @ (bessel_j_over_z(n, z) * 2.0 * np.pi * r)) if n > 0 else 0.0
    return I, dI, I_over_l


def sincos_overlap_transverse(mode: SinCos, l_perp: float, phi_l: float,
                              sign: int = +1) -> TransverseOverlap:
    """Bessel-reduced overlap of a sine-cosine mode with ``|K+->`` at ``l_z = 0``.

    ``<A|K+-> = (-+i)^n sqrt(c_m c_n) trig(n phi_l) int_0^1 trig(2 pi m v) J_n(2 pi l_perp sqrt v) dv``
    for a clear aperture and ``phi0 = 0``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if l_perp < 0:
        raise DomainError("l_perp must be nonnegative")
    I, _, _ = _radial_integrals(mode, l_perp)
    ang, _ = _angular_trig(mode, phi_l)
    amp = math.sqrt(math.pi) * mode.norm * ang * I
    phase = -sign * (math.pi / 2) * (mode.n % 4)
    phase = math.remainder(phase, 2 * math.pi)
    if phase == -math.pi:
        phase = math.pi
    return TransverseOverlap(amp, phase)


def sincos_transverse_gradient(mode: SinCos, l_perp: float, phi_l: float) -> np.ndarray:
    """Derivative of the real overlap amplitude w.r.t. ``(l_x, l_y)``."""
    _, dI, I_over_l = _radial_integrals(mode, l_perp)
    ang, dang = _angular_trig(mode, phi_l)
    c = math.sqrt(math.pi) * mode.norm
    d_radial = c * ang * dI
    # (1/l_perp) d/dphi_l of the amplitude; regular at l_perp = 0
    d_angular = c * dang * I_over_l
    cp, sp = math.cos(phi_l), math.sin(phi_l)
    return np.array([d_radial * cp - d_angular * sp, d_radial * sp + d_angular * cp])


def zernike_probability_exact(n: int, l, ap: ApertureModel | None = None) -> float:
    """``|int P Z_n cos Psi|^2 + |int P Z_n sin Psi|^2`` by 2D quadrature."""
    Zernike(n)
    ap = ApertureModel.clear() if ap is None else ap
    return float(_projector((Zernike(n),), ap).probabilities(l)[0])


def _small_l(n: int, l: SeparationVector) -> float:
    pi2 = math.pi**2
    if n == 1:
        return 1.0 - pi2 * (l.l_x**2 + l.l_y**2 + l.l_z**2 / 12.0)
    if n == 2:
        return pi2 * l.l_x**2
    if n == 3:
        return pi2 * l.l_y**2
    return pi2 * l.l_z**2 / 12.0


def _small_l_gradient(n: int, l: SeparationVector) -> np.ndarray:
    pi2 = math.pi**2
    if n == 1:
        return -pi2 * np.array([2.0 * l.l_x, 2.0 * l.l_y, l.l_z / 6.0])
    if n == 2:
        return np.array([2.0 * pi2 * l.l_x, 0.0, 0.0])
    if n == 3:
        return np.array([0.0, 2.0 * pi2 * l.l_y, 0.0])
    return np.array([0.0, 0.0, pi2 * l.l_z / 6.0])


def zernike_probability_small(n: int, l) -> float:
    """Leading-order Zernike projection probability, clamped to ``[0, 1]``.

    Accurate for ``|l| <~ 0.3``; beyond that the quadratic expansion is
    only indicative.
    """
    Zernike(n)
    return min(max(_small_l(n, SeparationVector.coerce(l)), 0.0), 1.0)


@dataclass(frozen=True)
class ChannelProbabilities:
    """Per-photon probabilities of the measured channels plus the complement."""

    p: np.ndarray
    p_bar: float
    modes: tuple = ()
    model: str = EXACT
    clamped: bool = False

    @property
    def all(self) -> np.ndarray:
        """Measured channels followed by the complement channel."""
        return np.append(self.p, self.p_bar)


def _complement(p: np.ndarray) -> float:
    total = float(np.sum(p))
    if total > 1.0 + SUM_TOL:
        raise ProbabilityConsistencyError(
            f"channel probabilities sum to {total!r} > 1; modes not orthonormal "
            "or quadrature under-resolved")
    return max(0.0, 1.0 - total)


@lru_cache(maxsize=32)
def _projector(modes: tuple, ap: ApertureModel) -> ModalProjector:
    return ModalProjector(modes, ap)


def projector(modes: ModeSet, ap: ApertureModel | None = None) -> ModalProjector:
    """Cached :class:`ModalProjector` for a mode set and aperture."""
    return _projector(tuple(modes), ApertureModel.clear() if ap is None else ap)


def _check_small_l_modes(modes):
    if not all(isinstance(m, Zernike) for m in modes):
        raise ModeIndexError("the small-l model is defined for Zernike modes only")


def channel_probabilities(modes: ModeSet, l, ap: ApertureModel | None = None,
                          model: str = EXACT) -> ChannelProbabilities:
    """Probabilities of the measured modes and of the complement ``1 - sum p``."""
    l = SeparationVector.coerce(l)
    modes = tuple(modes)
    if model == EXACT:
        p = projector(modes, ap).probabilities(l)
        clamped = False
    elif model == SMALL_L:
        _check_small_l_modes(modes)
        raw = np.array([_small_l(m.n, l) for m in modes])
        p = np.clip(raw, 0.0, 1.0)
        clamped = bool(np.any(p != raw))
    else:
        raise ValueError(f"unknown probability model {model!r}")
    return ChannelProbabilities(p, _complement(p), modes, model, clamped)


def channel_probabilities_and_jacobian(modes: ModeSet, l, ap: ApertureModel | None = None,
                                       model: str = EXACT):
    """Channel probabilities with their ``(K, 3)`` Jacobian (complement excluded)."""
    l = SeparationVector.coerce(l)
    modes = tuple(modes)
    if model == EXACT:
        p, dp, _ = projector(modes, ap).probabilities_and_jacobian(l)
        clamped = False
    elif model == SMALL_L:
        _check_small_l_modes(modes)
        raw = np.array([_small_l(m.n, l) for m in modes])
        p = np.clip(raw, 0.0, 1.0)
        dp = np.stack([_small_l_gradient(m.n, l) for m in modes])
        inside = p == raw
        dp = dp * inside[:, None]
        clamped = not bool(np.all(inside))
    else:
        raise ValueError(f"unknown probability model {model!r}")
    return ChannelProbabilities(p, _complement(p), modes, model, clamped), dp
