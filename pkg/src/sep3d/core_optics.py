"""Pupil-plane description of an incoherent point-source pair.

Everything here lives in the exit pupil of a circular imager: the unit
disk carries the aperture weight ``|P(u)|^2``, each source's photon has
the wavefunction ``P(u) exp(+-i phi0) exp(-+i Psi(u; l))`` and the pair's
density operator is fixed by the overlap ``Delta = <K-|K+>``.

Disk integrals use a tensor rule in ``(v, phi)`` with ``v = u**2``:
Gauss-Legendre in ``v`` and the trapezoid rule in ``phi``. With that
substitution the area element is ``d^2u = dv dphi / 2`` and the axial
part of the pupil phase is linear in ``v``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

DEFAULT_RADIAL_ORDER = 64
DEFAULT_ANGULAR_ORDER = 256
DEFAULT_QUAD_TOL = 1e-10

WeightFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


class QuadratureError(RuntimeError):
    """Two refinements of a disk quadrature disagree beyond tolerance."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class SeparationVector:
    """Dimensionless half-separation ``(l_x, l_y, l_z)`` of the source pair.

    Transverse components are in units of ``sigma0 = lambda z_O / R``,
    the axial one in units of ``zeta0 = lambda z_O**2 / R**2``.
    """

    l_x: float
    l_y: float
    l_z: float

    def __post_init__(self):
        for name in ("l_x", "l_y", "l_z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_polar(cls, l_perp: float, phi_l: float, l_z: float) -> "SeparationVector":
        return cls(l_perp * math.cos(phi_l), l_perp * math.sin(phi_l), l_z)

    @classmethod
    def coerce(cls, l) -> "SeparationVector":
        if isinstance(l, cls):
            return l
        l_x, l_y, l_z = l
        return cls(l_x, l_y, l_z)

    @property
    def l_perp(self) -> float:
        return math.hypot(self.l_x, self.l_y)

    @property
    def phi_l(self) -> float:
        return math.atan2(self.l_y, self.l_x)

    def as_array(self) -> np.ndarray:
        return np.array([self.l_x, self.l_y, self.l_z])

    def __iter__(self):
        return iter((self.l_x, self.l_y, self.l_z))

    def __neg__(self) -> "SeparationVector":
        return SeparationVector(-self.l_x, -self.l_y, -self.l_z)


@lru_cache(maxsize=32)
def _disk_rule(n_radial: int, n_angular: int):
    # v = u^2 on [0, 1]; d^2u = dv dphi / 2
    x, w = np.polynomial.legendre.leggauss(n_radial)
    v = 0.5 * (x + 1.0)
    wv = 0.5 * w
    phi = 2.0 * np.pi * np.arange(n_angular) / n_angular
    wphi = np.full(n_angular, 2.0 * np.pi / n_angular)
    V, PHI = np.meshgrid(v, phi, indexing="ij")
    area = 0.5 * np.outer(wv, wphi)
    u = np.sqrt(V).ravel()
    phi = PHI.ravel()
    area = area.ravel()
    for arr in (u, phi, area):
        arr.setflags(write=False)
    return u, phi, area


class DiskGrid(NamedTuple):
    """Quadrature nodes on the unit disk with the aperture weight folded in.

    ``u``, ``phi`` are polar node coordinates, ``ux``, ``uy`` the Cartesian
    ones. ``area`` integrates plain area; ``mass = area * weight`` integrates
    against ``|P(u)|^2`` and ``amplitude = sqrt(weight)`` is ``P(u)``.
    """

    u: np.ndarray
    phi: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    area: np.ndarray
    weight: np.ndarray
    mass: np.ndarray
    amplitude: np.ndarray


def _clear_weight(u, phi):
    return np.full(np.shape(u), 1.0 / np.pi)


@dataclass(frozen=True)
class GaussianWeight:
    """Unnormalized truncated-Gaussian pupil weight ``exp(-alpha u^2)``."""

    alpha: float

    def __call__(self, u, phi):
        return np.exp(-self.alpha * np.asarray(u) ** 2)


@dataclass(frozen=True)
class ApertureModel:
    """Normalized pupil weight ``|P(u)|^2`` on the unit disk plus its quadrature rule.

    Parameters
    ----------
    weight : callable, optional
        ``weight(u, phi) -> ndarray`` of nonnegative values. ``None`` means the
        clear circular aperture, ``1/pi`` on the disk.
    radial_order, angular_order : int
        Gauss-Legendre nodes in ``v = u**2`` and trapezoid nodes in ``phi``.
    symmetric : bool
        Whether the weight is inversion symmetric, ``w(u) == w(-u)``.
        Checks that rely on the symmetry are skipped when False.
    normalize : bool
        Rescale a general weight so that it integrates to one with this rule.
    """

    weight: WeightFunction | None = None
    radial_order: int = DEFAULT_RADIAL_ORDER
    angular_order: int = DEFAULT_ANGULAR_ORDER
    symmetric: bool = True
    normalize: bool = True
    name: str = "clear"
    _scale: float = field(default=1.0, repr=False, compare=False)

    def __post_init__(self):
        if self.radial_order < 1 or self.angular_order < 1:
            raise DomainError("quadrature orders must be positive")
        if self.weight is not None and self.normalize:
            u, phi, area = _disk_rule(self.radial_order, self.angular_order)
            total = float(np.sum(area * self.weight(u, phi)))
            if not total > 0.0:
                raise DomainError("aperture weight integrates to a nonpositive value")
            object.__setattr__(self, "_scale", 1.0 / total)

    @classmethod
    def clear(cls, radial_order: int = DEFAULT_RADIAL_ORDER,
              angular_order: int = DEFAULT_ANGULAR_ORDER) -> "ApertureModel":
        return cls(None, radial_order, angular_order)

    @classmethod
    def gaussian(cls, alpha: float = 2.0, **orders) -> "ApertureModel":
        """Truncated Gaussian pupil, ``|P(u)|^2 ∝ exp(-alpha u^2)`` on the disk."""
        return cls(GaussianWeight(alpha), name=f"gaussian(alpha={alpha:g})", **orders)

    @property
    def kind(self) -> str:
        return "ClearCircular" if self.weight is None else "GeneralWeighted"

    @property
    def is_clear(self) -> bool:
        return self.weight is None

    def with_orders(self, radial_order: int, angular_order: int) -> "ApertureModel":
        return ApertureModel(self.weight, radial_order, angular_order,
                             self.symmetric, self.normalize, self.name)

    def refined(self) -> "ApertureModel":
        """The same aperture with both quadrature orders doubled."""
        return self.with_orders(2 * self.radial_order, 2 * self.angular_order)

    def evaluate_weight(self, u, phi) -> np.ndarray:
        if self.weight is None:
            return _clear_weight(u, phi)
        return self._scale * np.asarray(self.weight(u, phi), dtype=float)

    def grid(self) -> DiskGrid:
        return _aperture_grid(self)


@lru_cache(maxsize=64)
def _aperture_grid(ap: ApertureModel) -> DiskGrid:
    u, phi, area = _disk_rule(ap.radial_order, ap.angular_order)
    weight = ap.evaluate_weight(u, phi)
    if np.any(weight < 0):
        raise DomainError("aperture weight must be nonnegative")
    grid = DiskGrid(u, phi, u * np.cos(phi), u * np.sin(phi), area,
                    weight, area * weight, np.sqrt(weight))
    for arr in grid:
        arr.setflags(write=False)
    return grid


def _self_check(compute, ap: ApertureModel, tol: float, what: str):
    """Evaluate ``compute(ap)`` and compare against the doubled-order rule."""
    coarse = compute(ap)
    fine = compute(ap.refined())
    err = np.max(np.abs(np.asarray(fine) - np.asarray(coarse)))
    if err > tol:
        raise QuadratureError(
            f"{what}: orders ({ap.radial_order}, {ap.angular_order}) and doubled "
            f"differ by {err:.3e} > {tol:.1e}")
    return coarse


def phase_psi(u, phi, l) -> np.ndarray:
    """Pupil phase ``2 pi l_perp . u + pi l_z u^2`` at polar pupil points ``(u, phi)``."""
    l = SeparationVector.coerce(l)
    u = np.asarray(u, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ux = u * np.cos(phi)
    uy = u * np.sin(phi)
    return 2.0 * np.pi * (l.l_x * ux + l.l_y * uy) + np.pi * l.l_z * u**2


def phase_gradient(grid: DiskGrid) -> np.ndarray:
    """Gradient of the pupil phase w.r.t. ``(l_x, l_y, l_z)``; shape ``(3, nodes)``.

    The phase is linear in ``l`` so the gradient does not depend on it.
    """
    return np.stack([2.0 * np.pi * grid.ux, 2.0 * np.pi * grid.uy, np.pi * grid.u**2])


def _grid_phase(grid: DiskGrid, l: SeparationVector) -> np.ndarray:
    return 2.0 * np.pi * (l.l_x * grid.ux + l.l_y * grid.uy) + np.pi * l.l_z * grid.u**2


def aperture_average(f: Callable, ap: ApertureModel | None = None, *,
                     check: bool = False, tol: float = DEFAULT_QUAD_TOL) -> float:
    """Average of ``f(u, phi)`` against the aperture weight ``|P(u)|^2``.

    With ``check=True`` the value is recomputed at doubled quadrature order
    and :class:`QuadratureError` is raised if the two disagree by more than
    ``tol``.
    """
    ap = ApertureModel.clear() if ap is None else ap

    def compute(a):
        g = a.grid()
        return float(np.sum(g.mass * np.asarray(f(g.u, g.phi), dtype=float)))

    if check:
        return _self_check(compute, ap, tol, "aperture_average")
    return compute(ap)


def overlap_integral(l, ap: ApertureModel) -> complex:
    """``D = int |P(u)|^2 exp(-2 i Psi(u; l)) d^2u``, the overlap before phase fixing."""
    l = SeparationVector.coerce(l)
    g = ap.grid()
    return complex(np.sum(g.mass * np.exp(-2j * _grid_phase(g, l))))


def _phase_constant(D: complex) -> float:
    if D.imag == 0.0 and D.real >= 0.0:
        return 0.0
    phi0 = -0.5 * np.angle(D)
    if phi0 <= -np.pi / 2:
        phi0 += np.pi
    return float(phi0)


def overlap_delta(l, ap: ApertureModel | None = None, *, check: bool = False,
                  tol: float = DEFAULT_QUAD_TOL) -> tuple[float, float]:
    """Real overlap ``Delta = <K-|K+>`` and the phase constant ``phi0`` that makes it so.

    Returns
    -------
    delta : float
        ``|D|`` in ``[0, 1]``.
    phi0 : float
        Zero when ``D`` is already real and nonnegative, otherwise
        ``-arg(D)/2`` reduced to ``(-pi/2, pi/2]``.
    """
    ap = ApertureModel.clear() if ap is None else ap
    l = SeparationVector.coerce(l)
    if check:
        D = _self_check(lambda a: overlap_integral(l, a), ap, tol, "overlap_delta")
    else:
        D = overlap_integral(l, ap)
    delta = min(abs(D), 1.0)
    return delta, _phase_constant(D)


class EigenPair(NamedTuple):
    delta: float
    e_plus: float
    e_minus: float


def eigen_decompose(delta: float) -> EigenPair:
    """Nonzero eigenvalues ``(1 +- delta)/2`` of the two-source density operator."""
    if not (-1e-12 <= delta <= 1.0 + 1e-12):
        raise DomainError(f"overlap must lie in [0, 1], got {delta!r}")
    delta = min(max(float(delta), 0.0), 1.0)
    return EigenPair(delta, 0.5 * (1.0 + delta), 0.5 * (1.0 - delta))


def resolution_scales(wavelength: float, distance: float, radius: float) -> tuple[float, float]:
    """Transverse and axial resolution scales ``(sigma0, zeta0)``."""
    for name, val in (("wavelength", wavelength), ("distance", distance), ("radius", radius)):
        if not val > 0:
            raise DomainError(f"{name} must be positive, got {val!r}")
    sigma0 = wavelength * distance / radius
    zeta0 = wavelength * distance**2 / radius**2
    return sigma0, zeta0


def normalize_separation(physical, wavelength: float, distance: float,
                         radius: float) -> SeparationVector:
    """Convert a physical half-separation ``(r_x, r_y, r_z)`` to dimensionless units."""
    sigma0, zeta0 = resolution_scales(wavelength, distance, radius)
    r_x, r_y, r_z = physical
    return SeparationVector(r_x / sigma0, r_y / sigma0, r_z / zeta0)


def source_wavefunction(l, ap: ApertureModel, sign: int = +1, phi0: float | None = None) -> np.ndarray:
    """Samples of ``<u|K_+->`` on the aperture grid.

    ``phi0`` defaults to the value fixed by :func:`overlap_delta`.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    l = SeparationVector.coerce(l)
    if phi0 is None:
        _, phi0 = overlap_delta(l, ap)
    g = ap.grid()
    return g.amplitude * np.exp(sign * 1j * (phi0 - _grid_phase(g, l)))


def warn_imaginary(residue: float, tol: float, what: str):
    if residue > tol:
        warnings.warn(f"{what}: imaginary residue {residue:.3e} exceeds {tol:.1e}",
                      RuntimeWarning, stacklevel=3)
