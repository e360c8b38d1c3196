"""Scenario runners: each turns an :class:`ExperimentConfig` into a :class:`ResultTable`."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..core_optics import SeparationVector
from ..fisher import crb_from_fisher, fisher_matrix, sincos_fi_axial, sincos_fi_transverse
from ..modal import zernike_modes
from ..montecarlo import batch_estimate
from ..qfi import localization_qfi, qfi_clear_analytic, qfi_phase_covariance, qfi_state_derivative
from .config import ConfigError, ExperimentConfig, separation_from_point
from .tables import ResultTable

log = logging.getLogger(__name__)

QFI_TOL = 1e-6
_PAIRS = ((0, 1), (0, 2), (1, 2))


def _parallel_map(fn, items, workers: int):
    """Ordered map; results keep grid order whatever the worker count."""
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _coordinate_columns(cfg: ExperimentConfig) -> tuple:
    cols = [cfg.sweep.coordinate] if cfg.sweep is not None else []
    cols += [k for k in sorted(cfg.fixed) if k not in cols]
    cols += [c for c in ("l_x", "l_y", "l_z") if c not in cols]
    return tuple(cols)


def _coordinate_values(cols, pt: dict, l: SeparationVector) -> list:
    full = dict(pt, l_x=l.l_x, l_y=l.l_y, l_z=l.l_z)
    return [float(full[c]) for c in cols]


def _crb_point(args):
    l, ap, model, per_coordinate = args
    F = fisher_matrix(zernike_modes(), l, ap, model).matrix
    return crb_from_fisher(F, per_coordinate=per_coordinate)


def _common_metadata(cfg: ExperimentConfig) -> dict:
    return {"probability-model": cfg.probability_model, "aperture": cfg.aperture,
            "quadrature-order": str(cfg.quadrature_order)}


def run_crb_sweep(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """4-Zernike Fisher matrix and CRB at every grid point of a sweep."""
    if not cfg.scenario.startswith("crb-sweep"):
        raise ConfigError(f"scenario {cfg.scenario!r} is not a CRB sweep")
    ap = cfg.aperture_model()
    points = cfg.points()
    ls = [separation_from_point(pt) for pt in points]
    per_coord = cfg.crb_method == "per-coordinate"
    results = _parallel_map(_crb_point, [(l, ap, cfg.probability_model, per_coord) for l in ls], threads)

    coord_cols = _coordinate_columns(cfg)
    columns = coord_cols + ("J_xx", "J_yy", "J_zz", "J_xy", "J_xz", "J_yz",
                            "CRB_xx", "CRB_yy", "CRB_zz", "singular_flag", "model", "quadrature_order")
    rows = []
    for pt, l, res in zip(points, ls, results):
        F, C = res.fisher, res.crb
        if res.singular_flag:
            log.info("singular Fisher matrix at %s", l)
        rows.append(tuple(_coordinate_values(coord_cols, pt, l))
                    + tuple(float(F[i, i]) for i in range(3))
                    + tuple(float(F[i, j]) for i, j in _PAIRS)
                    + tuple(float(C[i, i]) for i in range(3))
                    + (bool(res.singular_flag), cfg.probability_model, cfg.quadrature_order))

    axial = cfg.sweep.coordinate == "l_z"
    group = [k for k in sorted(cfg.fixed) if len(cfg.fixed[k]) > 1]
    meta = _common_metadata(cfg)
    meta["crb-method"] = cfg.crb_method
    meta["plot"] = (f"x={cfg.sweep.coordinate} y={'CRB_zz' if axial else 'CRB_xx,CRB_yy,CRB_zz'} "
                    f"group={','.join(group)} logy=1")
    return ResultTable(cfg.scenario, columns, rows, meta)


def run_mc_variance(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Monte Carlo ML estimation at each grid point, compared with the CRB."""
    if cfg.scenario != "mc-variance":
        raise ConfigError(f"scenario {cfg.scenario!r} is not mc-variance")
    ap = cfg.aperture_model()
    modes = zernike_modes()
    coord_cols = _coordinate_columns(cfg)
    columns = coord_cols + ("mean_x", "mean_y", "mean_z", "bias_x", "bias_y", "bias_z",
                            "var_x", "var_y", "var_z", "CRB_xx", "CRB_yy", "CRB_zz",
                            "frames", "photons", "seed", "nonconverged")
    rows = []
    total_failed = 0
    for index, pt in enumerate(cfg.points()):
        l = separation_from_point(pt)
        seed = cfg.base_seed + index
        batch = batch_estimate(l, cfg.photons, cfg.frames, seed, cfg.probability_model, ap, modes,
                               cfg.efficiency, cfg.init, workers=threads)
        crb = crb_from_fisher(fisher_matrix(modes, l, ap, cfg.probability_model).matrix,
                              per_coordinate=cfg.crb_method == "per-coordinate").crb
        total_failed += batch.nonconverged
        rows.append(tuple(_coordinate_values(coord_cols, pt, l))
                    + tuple(float(v) for v in batch.mean) + tuple(float(v) for v in batch.bias)
                    + tuple(float(v) for v in batch.per_photon_variance)
                    + tuple(float(crb[i, i]) for i in range(3))
                    + (cfg.frames, cfg.photons, seed, batch.nonconverged))
    if total_failed:
        log.warning("%d frame(s) did not converge", total_failed)
    meta = _common_metadata(cfg)
    meta["crb-method"] = cfg.crb_method
    meta["variance"] = "per-photon sample variance (M times ddof=1 variance)"
    meta["scale"] = "long" if cfg.paper_scale else "desk"
    meta["nonconverged-total"] = str(total_failed)
    x = cfg.sweep.coordinate if cfg.sweep is not None else "l_x"
    meta["plot"] = f"x={x} y=var_x,var_y,var_z,CRB_xx,CRB_yy,CRB_zz group= logy=1"
    return ResultTable("mc-variance", columns, rows, meta)


def run_modal_convergence(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Truncated sine-cosine Fisher information versus truncation level."""
    if cfg.modal_kind == "transverse":
        conv = sincos_fi_transverse(cfg.modal_l_perp, cfg.modal_phi_l, (cfg.truncation, cfg.truncation))
        H = 4.0 * math.pi**2
        columns = ("level", "J_xx", "J_yy", "J_xy", "qfi_asymptote", "fraction")
        rows = [(int(k), float(a), float(b), float(c), H, float(a) / H)
                for k, a, b, c in zip(conv.levels, conv.J_xx, conv.J_yy, conv.J_xy)]
        y = "J_xx,qfi_asymptote"
    else:
        conv = sincos_fi_axial(cfg.modal_l_z, cfg.truncation)
        H = math.pi**2 / 3.0
        columns = ("level", "J_zz", "qfi_asymptote", "fraction")
        rows = [(int(k), float(a), H, float(a) / H) for k, a in zip(conv.levels, conv.J_zz)]
        y = "J_zz,qfi_asymptote"
    meta = {"modal-kind": cfg.modal_kind, "plot": f"x=level y={y} group= logy=0"}
    return ResultTable(f"modal-convergence-{cfg.modal_kind}", columns, rows, meta)


@dataclass(frozen=True)
class QfiReport:
    table: ResultTable
    phase: np.ndarray
    analytic: np.ndarray | None
    discrepancy: float
    qcrb_diagonal: np.ndarray
    symmetric_checks: bool
    passed: bool

    def text(self) -> str:
        H = self.phase
        lines = ["QFI report", f"aperture checks: {'symmetric' if self.symmetric_checks else 'general'}",
                 "phase-covariance route:"]
        lines += ["  " + "  ".join(f"{v: .12e}" for v in row) for row in H]
        if self.analytic is not None:
            lines.append("closed form:")
            lines += ["  " + "  ".join(f"{v: .12e}" for v in row) for row in self.analytic]
        lines.append(f"H_zz = {H[2, 2]:.12f}  (pi^2/3 = {math.pi**2 / 3:.12f})")
        lines.append("QCRB diagonal: " + "  ".join(f"{v:.12e}" for v in self.qcrb_diagonal))
        lines.append(f"max route discrepancy: {self.discrepancy:.3e}  (tolerance {QFI_TOL:g})")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


def run_qfi_report(cfg: ExperimentConfig, threads: int = 1) -> QfiReport:
    """Compare the QFI routes over the configured grid (cubed).

    Discrepancies are relative to the largest diagonal entry. For a clear
    aperture the closed form is a route of its own; for a symmetric aperture
    the off-diagonals and ``H_xx - H_yy`` must vanish as well.
    """
    ap = cfg.aperture_model()
    H = qfi_phase_covariance(ap)
    scale = float(np.max(np.diag(H)))
    analytic = qfi_clear_analytic() if ap.is_clear else None
    worst = 0.0 if analytic is None else float(np.max(np.abs(H - analytic))) / scale
    if ap.symmetric:
        worst = max(worst, abs(H[0, 0] - H[1, 1]) / scale,
                    max(abs(H[i, j]) for i, j in _PAIRS) / scale)

    grid = cfg.qfi_grid
    columns = ("l_x", "l_y", "l_z", "state_deviation", "localization_deviation")
    rows = []
    for lx in grid:
        for ly in grid:
            for lz in grid:
                l = SeparationVector(lx, ly, lz)
                ds = float(np.max(np.abs(qfi_state_derivative(l, ap) - H))) / scale
                dl = float(np.max(np.abs(localization_qfi(l, ap) - H))) / scale
                worst = max(worst, ds, dl)
                rows.append((float(lx), float(ly), float(lz), ds, dl))
    qcrb = np.diag(np.linalg.inv(H))
    passed = worst <= QFI_TOL
    meta = _common_metadata(cfg)
    meta["max-discrepancy"] = repr(worst)
    meta["H_zz"] = f"{H[2, 2]:.12f}"
    meta["qcrb-diagonal"] = " ".join(repr(float(v)) for v in qcrb)
    meta["status"] = "PASS" if passed else "FAIL"
    meta["plot"] = "x=l_z y=state_deviation,localization_deviation group= logy=0"
    table = ResultTable("qfi-report", columns, rows, meta)
    return QfiReport(table, H, analytic, worst, qcrb, ap.symmetric, passed)
