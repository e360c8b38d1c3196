"""Photon-count simulation and maximum-likelihood estimation of the separation.

A frame distributes ``M`` emitted photons over the measured modes and the
complement channel; each of those photons is then detected with quantum
efficiency ``eta``. Undetected photons are an extra multinomial channel,
so the detected-count likelihood factorizes into an ``eta``-only part and
the per-photon channel probabilities, and the ML estimate does not depend
on ``eta``.

Randomness comes from counter-based Philox streams keyed by
``(base_seed, frame_index)``; serial and parallel batches agree bit for bit.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .core_optics import ApertureModel, SeparationVector
from .modal import (
    EXACT,
    ChannelProbabilities,
    ModeSet,
    ProbabilityConsistencyError,
    channel_probabilities,
    channel_probabilities_and_jacobian,
    zernike_modes,
)

log = logging.getLogger(__name__)

DEFAULT_INIT = (0.25, 0.25, 0.25)
GRAD_TOL = 1e-8
STEP_TOL = 1e-10
MAX_ITER = 500


class InvalidProbabilityError(ValueError):
    """Effective channel probabilities fall outside ``[0, 1]``."""


@dataclass(frozen=True)
class CountsFrame:
    """One multinomial realization.

    ``counts`` are detected photons per measured mode, ``undetected`` the
    detected photons of the complement channel (``m_bar``). Photons lost to
    non-unit efficiency are ``total - counts.sum() - undetected``.
    """

    counts: np.ndarray
    undetected: int
    total: int
    efficiency: float = 1.0

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if np.any(counts < 0) or self.undetected < 0:
            raise ValueError("counts must be nonnegative")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in (0, 1]")
        detected = int(counts.sum()) + int(self.undetected)
        if detected > self.total:
            raise ValueError("more photons detected than emitted")
        if self.efficiency == 1.0 and detected != self.total:
            raise ValueError("with unit efficiency every photon lands in a channel")

    @property
    def lost(self) -> int:
        return int(self.total - self.counts.sum() - self.undetected)

    @classmethod
    def expected(cls, probs: ChannelProbabilities, total: int) -> "CountsFrame":
        """Noiseless frame with counts ``round(M P_k)``; the most probable channel absorbs rounding."""
        full = np.rint(total * probs.all).astype(np.int64)
        full[np.argmax(probs.all)] += total - full.sum()
        return cls(full[:-1], int(full[-1]), total, 1.0)


def frame_rng(base_seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream for frame ``index`` of a batch seeded with ``base_seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(base_seed, spawn_key=(index,))))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sample_frame(total: int, probs: ChannelProbabilities, efficiency: float = 1.0,
                 seed=0) -> CountsFrame:
    """Draw one frame by sequential conditional binomial draws.

    The channels are ``eta p_1 .. eta p_N``, ``eta p_bar`` and the lost
    channel ``1 - eta``.
    """
    if total < 0:
        raise ValueError("photon count must be nonnegative")
    if not 0.0 < efficiency <= 1.0:
        raise InvalidProbabilityError("efficiency must lie in (0, 1]")
    eff = np.append(efficiency * probs.all, 1.0 - efficiency)
    if np.any(eff < -1e-12) or np.any(eff > 1.0 + 1e-12):
        raise InvalidProbabilityError(f"effective probabilities out of range: {eff}")
    eff = np.clip(eff, 0.0, 1.0)
    rng = _as_rng(seed)

    out = np.zeros(eff.size, dtype=np.int64)
    remaining = int(total)
    mass = float(eff.sum())
    for k in range(eff.size - 1):
        if remaining == 0:
            break
        q = min(max(eff[k] / mass, 0.0), 1.0) if mass > 0 else 0.0
        out[k] = rng.binomial(remaining, q)
        remaining -= int(out[k])
        mass -= eff[k]
    out[-1] = remaining
    n = len(probs.p)
    return CountsFrame(out[:n], int(out[n]), int(total), float(efficiency))


def _channel_model(modes, ap, model, l, with_jacobian):
    if with_jacobian:
        probs, dp = channel_probabilities_and_jacobian(modes, l, ap, model)
        return probs.all, np.vstack([dp, -dp.sum(axis=0)])
    return channel_probabilities(modes, l, ap, model).all, None


def _nll_and_grad(frame: CountsFrame, l, modes, ap, model, efficiency, with_grad):
    try:
        P, dP = _channel_model(modes, ap, model, l, with_grad)
    except ProbabilityConsistencyError:
        # small-l expansion outside its domain: no valid distribution here
        return math.inf, (np.full(3, np.nan) if with_grad else None)
    m = np.append(frame.counts, frame.undetected).astype(float)
    hit = m > 0
    if np.any(P[hit] <= 0.0):
        return math.inf, (np.full(3, np.nan) if with_grad else None)
    # -sum m ln(eta P) with the eta part split off as one l-independent term
    nll = -float(m[hit] @ np.log(P[hit])) - float(m[hit].sum()) * math.log(efficiency)
    if not with_grad:
        return nll, None
    grad = -(m[hit] / P[hit]) @ dP[hit]
    return nll, grad


def neg_log_likelihood(frame: CountsFrame, l, model: str = EXACT, ap: ApertureModel | None = None,
                       modes: ModeSet | None = None, efficiency: float | None = None) -> float:
    """Negative log-likelihood of a frame at separation ``l``.

    ``-sum_k m_k ln(eta P_k) - m_bar ln(eta P_bar)``. The multinomial
    coefficient and the lost-photon term ``-(M - sum m) ln(1 - eta)`` do
    not depend on ``l`` and are omitted. Returns ``inf`` if a channel with
    counts has zero probability or the model has no valid distribution at
    ``l``.
    """
    modes = zernike_modes() if modes is None else tuple(modes)
    eta = frame.efficiency if efficiency is None else efficiency
    nll, _ = _nll_and_grad(frame, SeparationVector.coerce(l), modes, ap, model, eta, False)
    return nll


@dataclass(frozen=True)
class EstimationResult:
    l_hat: SeparationVector
    nll_at_optimum: float
    converged: bool
    iterations: int
    init: SeparationVector
    method: str = "BFGS"
    grad_norm: float = math.nan


def _minimize_single(frame, init, modes, ap, model, eta, max_iter):
    scale = 1.0 / max(1, int(frame.counts.sum()) + frame.undetected)

    def fun(t):
        l = SeparationVector(*(t * t))
        nll, g = _nll_and_grad(frame, l, modes, ap, model, eta, True)
        if not math.isfinite(nll):
            return math.inf, np.zeros(3)
        return nll * scale, g * 2.0 * t * scale

    t0 = np.sqrt(init.as_array())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = optimize.minimize(fun, t0, jac=True, method="BFGS",
                                options=dict(gtol=GRAD_TOL, xrtol=STEP_TOL, maxiter=max_iter))
    method = "BFGS"
    iterations = int(res.nit)
    t = res.x
    if res.status == 2:
        # line-search failure: restart from the same init with the simplex method
        log.debug("BFGS line search failed (%s); Nelder-Mead restart", res.message)
        nm = optimize.minimize(lambda x: fun(x)[0], t0, method="Nelder-Mead",
                               options=dict(xatol=STEP_TOL, fatol=1e-15, maxiter=max_iter * 10))
        iterations += int(nm.nit)
        if nm.fun <= res.fun:
            t, method = nm.x, "Nelder-Mead"
        converged = bool(nm.success)
    else:
        converged = bool(res.success)
    f, g = fun(t)
    gnorm = float(np.linalg.norm(g))
    converged = (converged or gnorm < GRAD_TOL) and math.isfinite(f)
    return t, f / scale, converged, iterations, method, gnorm


def ml_estimate(frame: CountsFrame, init=DEFAULT_INIT, model: str = EXACT,
                ap: ApertureModel | None = None, modes: ModeSet | None = None,
                efficiency: float | None = None, max_iter: int = MAX_ITER,
                starts=None) -> EstimationResult:
    """Maximum-likelihood separation over the nonnegative octant.

    The octant is parametrized as ``l_i = t_i**2`` and the unconstrained
    problem minimized with BFGS using analytic likelihood gradients
    (converged when the per-photon gradient norm drops below ``1e-8`` or
    the relative step below ``1e-10``). A line-search failure triggers a
    Nelder-Mead restart from the same point. ``starts`` adds further
    initial points; the best optimum is kept.

    The small-l model has no valid distribution at the default initial
    point (its tilt probabilities alone exceed one there); pass an ``init``
    inside its domain.
    """
    modes = zernike_modes() if modes is None else tuple(modes)
    eta = frame.efficiency if efficiency is None else efficiency
    init = SeparationVector(*np.abs(SeparationVector.coerce(init).as_array()))
    candidates = [init] + [SeparationVector(*np.abs(SeparationVector.coerce(s).as_array()))
                           for s in (starts or ())]
    best = None
    for start in candidates:
        t, nll, conv, its, method, gnorm = _minimize_single(frame, start, modes, ap, model, eta, max_iter)
        if best is None or nll < best[1]:
            best = (t, nll, conv, its, method, gnorm)
    t, nll, conv, its, method, gnorm = best
    l_hat = SeparationVector(*(t * t))
    nll_init = neg_log_likelihood(frame, init, model, ap, modes, eta)
    if not nll <= nll_init:
        l_hat, nll, conv = init, nll_init, False
    return EstimationResult(l_hat, nll, conv, its, init, method, gnorm)


@dataclass(frozen=True)
class BatchResult:
    l_true: SeparationVector
    photons: int
    frames: int
    base_seed: int
    estimates: np.ndarray = field(repr=False)
    converged: np.ndarray = field(repr=False)

    @property
    def mean(self) -> np.ndarray:
        return self.estimates.mean(axis=0)

    @property
    def variance(self) -> np.ndarray:
        return self.estimates.var(axis=0, ddof=1)

    @property
    def bias(self) -> np.ndarray:
        return self.mean - self.l_true.as_array()

    @property
    def per_photon_variance(self) -> np.ndarray:
        """Sample variance times ``M``, comparable with the per-photon CRB."""
        return self.variance * self.photons

    @property
    def nonconverged(self) -> int:
        return int(np.count_nonzero(~self.converged))


def _estimate_frame(args):
    index, base_seed, photons, probs, efficiency, init, model, ap, modes = args
    frame = sample_frame(photons, probs, efficiency, frame_rng(base_seed, index))
    res = ml_estimate(frame, init, model, ap, modes)
    return res.l_hat.as_array(), res.converged


def batch_estimate(l_true, photons: int, frames: int, base_seed: int, model: str = EXACT,
                   ap: ApertureModel | None = None, modes: ModeSet | None = None,
                   efficiency: float = 1.0, init=DEFAULT_INIT, workers: int = 1) -> BatchResult:
    """Simulate ``frames`` frames at ``l_true`` and ML-estimate each one.

    Frame ``i`` uses the stream :func:`frame_rng` ``(base_seed, i)``, so the
    result does not depend on ``workers``.
    """
    if frames < 2:
        raise ValueError("need at least two frames for a variance")
    modes = zernike_modes() if modes is None else tuple(modes)
    ap = ApertureModel.clear() if ap is None else ap
    l_true = SeparationVector.coerce(l_true)
    probs = channel_probabilities(modes, l_true, ap, model)
    tasks = [(i, base_seed, photons, probs, efficiency, SeparationVector.coerce(init), model, ap, modes)
             for i in range(frames)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_estimate_frame, tasks, chunksize=max(1, frames // (4 * workers))))
    else:
        results = [_estimate_frame(t) for t in tasks]
    estimates = np.array([r[0] for r in results])
    converged = np.array([r[1] for r in results], dtype=bool)
    return BatchResult(l_true, photons, frames, base_seed, estimates, converged)
