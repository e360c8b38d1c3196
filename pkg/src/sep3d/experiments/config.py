"""Experiment configuration: an INI document with a schema id and strict keys.

Example::

    [experiment]
    schema = sep3d-experiment/1
    scenario = crb-sweep-axial

    [sweep]
    coordinate = l_z
    start = 0.01
    stop = 0.5
    points = 50

    [fixed]
    l_perp = 0.025, 0.05, 0.125, 0.25
"""

from __future__ import annotations

import configparser
import io
import itertools
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..core_optics import ApertureModel, SeparationVector
from ..modal import PROBABILITY_MODELS

SCHEMA_ID = "sep3d-experiment/1"
OUTPUT_ENV = "SEP3D_OUTPUT_DIR"

SCENARIOS = ("crb-sweep-transverse", "crb-sweep-axial", "mc-variance", "qfi-report",
             "modal-convergence")
COORDINATES = ("l_x", "l_y", "l_z", "l_perp", "phi_l")

LONG_FRAMES = 20_000
LONG_PHOTONS = 1_000_000


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class Grid:
    coordinate: str
    start: float
    stop: float
    points: int
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    probability_model: str = "exact"
    quadrature_order: int = 64
    aperture: str = "clear"
    gaussian_alpha: float = 2.0
    crb_method: str = "inverse"
    sweep: Grid | None = None
    fixed: dict = field(default_factory=dict)
    photons: int = 100_000
    frames: int = 500
    base_seed: int = 20181015
    efficiency: float = 1.0
    init: tuple = (0.25, 0.25, 0.25)
    modal_kind: str = "transverse"
    modal_l_perp: float = 0.2
    modal_phi_l: float = 0.0
    modal_l_z: float = 0.3
    truncation: int = 20
    qfi_grid: tuple = (0.0, 0.05, 0.25, 1.0)
    output_dir: str = "results"
    emit_plots: bool = False
    paper_scale: bool = False

    def aperture_model(self) -> ApertureModel:
        angular = 4 * self.quadrature_order
        if self.aperture == "clear":
            return ApertureModel.clear(self.quadrature_order, angular)
        return ApertureModel.gaussian(self.gaussian_alpha, radial_order=self.quadrature_order,
                                      angular_order=angular)

    def points(self) -> list[dict]:
        """Coordinate assignments for every grid point, sweep coordinate varying fastest."""
        fixed_names = sorted(self.fixed)
        combos = list(itertools.product(*(self.fixed[k] for k in fixed_names)))
        sweep_vals = self.sweep.values() if self.sweep is not None else [None]
        out = []
        for combo in combos:
            for s in sweep_vals:
                pt = dict(zip(fixed_names, combo))
                if s is not None:
                    pt[self.sweep.coordinate] = float(s)
                out.append(pt)
        return out

    def to_text(self) -> str:
        """Canonical INI rendering of the resolved configuration (output location excluded)."""
        return render(self, include_output=False)


def separation_from_point(pt: dict) -> SeparationVector:
    polar = "l_perp" in pt or "phi_l" in pt
    if polar and ("l_x" in pt or "l_y" in pt):
        raise ConfigError("use either l_x/l_y or l_perp/phi_l, not both")
    if polar:
        return SeparationVector.from_polar(pt.get("l_perp", 0.0), pt.get("phi_l", 0.0), pt.get("l_z", 0.0))
    return SeparationVector(pt.get("l_x", 0.0), pt.get("l_y", 0.0), pt.get("l_z", 0.0))


_KEYS = {
    "experiment": {"schema", "scenario", "probability_model", "quadrature_order", "aperture",
                   "gaussian_alpha", "crb_method"},
    "sweep": {"coordinate", "start", "stop", "points", "spacing"},
    "fixed": set(COORDINATES),
    "monte_carlo": {"photons", "frames", "base_seed", "efficiency", "init"},
    "modal": {"kind", "l_perp", "phi_l", "l_z", "truncation"},
    "qfi": {"grid"},
    "output": {"directory", "emit_plots"},
}


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _num(section, key, cast, default):
    if key not in section:
        return default
    try:
        return cast(section[key])
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key}: cannot parse {section[key]!r}") from exc


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(text)
    return int(value)


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc

    for name in cp.sections():
        if name not in _KEYS:
            raise ConfigError(f"unknown section [{name}]")
        unknown = set(cp[name]) - _KEYS[name]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    ex = cp["experiment"]
    schema = ex.get("schema")
    if schema != SCHEMA_ID:
        raise ConfigError(f"schema must be {SCHEMA_ID!r}, got {schema!r}")
    if "scenario" not in ex:
        raise ConfigError("[experiment] scenario is required")

    kw = dict(scenario=ex["scenario"].strip())
    kw["probability_model"] = ex.get("probability_model", "exact").strip()
    kw["quadrature_order"] = _num(ex, "quadrature_order", _int, 64)
    kw["aperture"] = ex.get("aperture", "clear").strip()
    kw["gaussian_alpha"] = _num(ex, "gaussian_alpha", float, 2.0)
    kw["crb_method"] = ex.get("crb_method", "inverse").strip()

    if "sweep" in cp:
        sw = cp["sweep"]
        for key in ("coordinate", "start", "stop", "points"):
            if key not in sw:
                raise ConfigError(f"[sweep] {key} is required")
        kw["sweep"] = Grid(sw["coordinate"].strip(), _num(sw, "start", float, None),
                           _num(sw, "stop", float, None), _num(sw, "points", _int, None),
                           sw.get("spacing", "linear").strip())
    if "fixed" in cp:
        kw["fixed"] = {k: _floats(v) for k, v in cp["fixed"].items()}
    if "monte_carlo" in cp:
        mc = cp["monte_carlo"]
        kw["photons"] = _num(mc, "photons", _int, 100_000)
        kw["frames"] = _num(mc, "frames", _int, 500)
        kw["base_seed"] = _num(mc, "base_seed", _int, 20181015)
        kw["efficiency"] = _num(mc, "efficiency", float, 1.0)
        if "init" in mc:
            kw["init"] = _floats(mc["init"])
    if "modal" in cp:
        md = cp["modal"]
        kw["modal_kind"] = md.get("kind", "transverse").strip()
        kw["modal_l_perp"] = _num(md, "l_perp", float, 0.2)
        kw["modal_phi_l"] = _num(md, "phi_l", float, 0.0)
        kw["modal_l_z"] = _num(md, "l_z", float, 0.3)
        kw["truncation"] = _num(md, "truncation", _int, 20)
    if "qfi" in cp and "grid" in cp["qfi"]:
        kw["qfi_grid"] = _floats(cp["qfi"]["grid"])
    if "output" in cp:
        out = cp["output"]
        kw["output_dir"] = out.get("directory", "results").strip()
        kw["emit_plots"] = _num(out, "emit_plots", _bool, False)
    cfg = ExperimentConfig(**kw)
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    return parse_config(text)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check the configuration; raise :class:`ConfigError` on the first problem."""
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}; expected one of {', '.join(SCENARIOS)}")
    if cfg.probability_model not in PROBABILITY_MODELS:
        raise ConfigError(f"probability_model must be one of {PROBABILITY_MODELS}")
    if cfg.aperture not in ("clear", "gaussian"):
        raise ConfigError("aperture must be 'clear' or 'gaussian'")
    if cfg.probability_model == "small-l" and cfg.aperture != "clear":
        raise ConfigError("the small-l model describes the clear aperture only")
    if cfg.crb_method not in ("inverse", "per-coordinate"):
        raise ConfigError("crb_method must be 'inverse' or 'per-coordinate'")
    if cfg.quadrature_order < 4:
        raise ConfigError("quadrature_order must be at least 4")
    if cfg.sweep is not None:
        g = cfg.sweep
        if g.coordinate not in COORDINATES:
            raise ConfigError(f"sweep coordinate must be one of {COORDINATES}")
        if g.points < 1:
            raise ConfigError("sweep grid is empty")
        if g.spacing not in ("linear", "log"):
            raise ConfigError("spacing must be 'linear' or 'log'")
        if g.spacing == "log" and not (g.start > 0 and g.stop > 0):
            raise ConfigError("log spacing needs positive bounds")
        if not (math.isfinite(g.start) and math.isfinite(g.stop)):
            raise ConfigError("sweep bounds must be finite")
        if g.coordinate in cfg.fixed:
            raise ConfigError(f"{g.coordinate} is both swept and fixed")
    for key, vals in cfg.fixed.items():
        if key not in COORDINATES:
            raise ConfigError(f"unknown coordinate {key!r}")
        if len(vals) == 0:
            raise ConfigError(f"fixed coordinate {key} has no values")
    if cfg.scenario.startswith("crb-sweep") or cfg.scenario == "mc-variance":
        pts = cfg.points()
        if not pts or (cfg.scenario.startswith("crb-sweep") and cfg.sweep is None):
            raise ConfigError("sweep grid is empty")
        for pt in pts[:1]:
            separation_from_point(pt)
    if cfg.photons < 1:
        raise ConfigError("photons must be >= 1")
    if cfg.frames < 1:
        raise ConfigError("frames must be >= 1")
    if cfg.scenario == "mc-variance" and cfg.frames < 2:
        raise ConfigError("mc-variance needs at least two frames")
    if not 0.0 < cfg.efficiency <= 1.0:
        raise ConfigError("efficiency must lie in (0, 1]")
    if len(cfg.init) != 3 or any(v < 0 for v in cfg.init):
        raise ConfigError("init must be three nonnegative numbers")
    if cfg.modal_kind not in ("transverse", "axial"):
        raise ConfigError("[modal] kind must be 'transverse' or 'axial'")
    if cfg.truncation < 0:
        raise ConfigError("truncation must be nonnegative")
    if cfg.modal_l_perp < 0:
        raise ConfigError("[modal] l_perp must be nonnegative")
    if not cfg.qfi_grid:
        raise ConfigError("qfi grid is empty")
    return cfg


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (tuple, list)):
        return ", ".join(_fmt(float(v)) for v in x)
    return str(x)


def render(cfg: ExperimentConfig, include_output: bool = True) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["experiment"] = dict(schema=SCHEMA_ID, scenario=cfg.scenario,
                            probability_model=cfg.probability_model,
                            quadrature_order=_fmt(cfg.quadrature_order), aperture=cfg.aperture,
                            gaussian_alpha=_fmt(cfg.gaussian_alpha), crb_method=cfg.crb_method)
    if cfg.sweep is not None:
        g = cfg.sweep
        cp["sweep"] = dict(coordinate=g.coordinate, start=_fmt(g.start), stop=_fmt(g.stop),
                           points=_fmt(g.points), spacing=g.spacing)
    if cfg.fixed:
        cp["fixed"] = {k: _fmt(cfg.fixed[k]) for k in sorted(cfg.fixed)}
    if cfg.scenario == "mc-variance":
        cp["monte_carlo"] = dict(photons=_fmt(cfg.photons), frames=_fmt(cfg.frames),
                                 base_seed=_fmt(cfg.base_seed), efficiency=_fmt(cfg.efficiency),
                                 init=_fmt(cfg.init))
    if cfg.scenario == "modal-convergence":
        cp["modal"] = dict(kind=cfg.modal_kind, l_perp=_fmt(cfg.modal_l_perp),
                           phi_l=_fmt(cfg.modal_phi_l), l_z=_fmt(cfg.modal_l_z),
                           truncation=_fmt(cfg.truncation))
    if cfg.scenario == "qfi-report":
        cp["qfi"] = dict(grid=_fmt(cfg.qfi_grid))
    if include_output:
        cp["output"] = dict(directory=cfg.output_dir, emit_plots=_fmt(cfg.emit_plots))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue().strip() + "\n"


def default_config(scenario: str) -> ExperimentConfig:
    """Built-in desk-scale configuration of a scenario."""
    if scenario == "crb-sweep-transverse":
        return ExperimentConfig(scenario, sweep=Grid("l_x", 0.025, 0.5, 20),
                                fixed={"l_y": (0.025, 0.25), "l_z": (0.025,)})
    if scenario == "crb-sweep-axial":
        return ExperimentConfig(scenario, sweep=Grid("l_z", 0.01, 0.5, 50),
                                fixed={"l_perp": (0.025, 0.05, 0.125, 0.25), "phi_l": (0.0,)})
    if scenario == "mc-variance":
        return ExperimentConfig(scenario, fixed={"l_x": (0.25,), "l_y": (0.25,), "l_z": (0.25,)})
    if scenario in SCENARIOS:
        return ExperimentConfig(scenario)
    raise ConfigError(f"unknown scenario {scenario!r}")


def apply_overrides(cfg: ExperimentConfig, *, seed=None, quadrature_order=None,
                    out=None, paper_scale=False) -> ExperimentConfig:
    changes = {}
    if seed is not None:
        changes["base_seed"] = int(seed)
    if quadrature_order is not None:
        changes["quadrature_order"] = int(quadrature_order)
    if paper_scale:
        changes.update(frames=LONG_FRAMES, photons=LONG_PHOTONS, paper_scale=True)
    if out is not None:
        changes["output_dir"] = str(out)
    elif os.environ.get(OUTPUT_ENV):
        changes["output_dir"] = os.environ[OUTPUT_ENV]
    return validate(replace(cfg, **changes))


def ensure_output_dir(path) -> Path:
    """Create the output directory and prove it is writable (raises ``OSError``)."""
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(dir=p, prefix=".write-check-"):
        pass
    return p
