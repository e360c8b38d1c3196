"""Command-line interface.

::

    sep3d qfi-report
    sep3d crb-sweep --axis axial --out results
    sep3d mc-variance --config mc.ini --seed 7 --threads 4
    sep3d modal-convergence --kind transverse
    sep3d plot results/crb-sweep-axial.csv

Exit codes: 0 success, 1 invalid configuration, 2 QFI routes disagree,
3 I/O error. ``SEP3D_OUTPUT_DIR`` overrides the configured output directory
(``--out`` overrides both).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import (
    ConfigError,
    apply_overrides,
    default_config,
    ensure_output_dir,
    load_config,
)
from .tables import write_csv

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

log = logging.getLogger("sep3d")


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=d, help="experiment configuration (INI)")
    parser.add_argument("--out", metavar="DIR", default=d, help="output directory")
    parser.add_argument("--seed", type=int, metavar="N", default=d, help="base seed (overrides config)")
    parser.add_argument("--quadrature-order", type=int, metavar="N", default=d,
                        help="radial Gauss-Legendre order; the angular order is four times this")
    parser.add_argument("--threads", type=int, metavar="N", default=d, help="worker processes")
    parser.add_argument("--paper-scale", action="store_true", default=d,
                        help="20000 frames of 1e6 photons (long)")
    parser.add_argument("-v", "--verbose", action="store_true", default=d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sep3d", description="3D two-point separation estimation experiments")
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="verb", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)

    sub.add_parser("qfi-report", parents=[common], help="compare the QFI evaluation routes")
    p = sub.add_parser("crb-sweep", parents=[common], help="4-Zernike CRB along a grid")
    p.add_argument("--axis", choices=("transverse", "axial"), default=None,
                   help="built-in sweep when no config is given (default axial)")
    sub.add_parser("mc-variance", parents=[common], help="Monte Carlo ML variance against the CRB")
    p = sub.add_parser("modal-convergence", parents=[common], help="sine-cosine FI versus truncation")
    p.add_argument("--kind", choices=("transverse", "axial"), default=None)
    p = sub.add_parser("plot", parents=[common], help="render a result CSV as SVG")
    p.add_argument("csv", help="CSV written by another verb")
    p.add_argument("--output", metavar="SVG", default=None)
    return parser


def _resolve_config(args):
    verb = args.verb
    if args.config:
        cfg = load_config(args.config)
        expected = {"qfi-report": ("qfi-report",), "mc-variance": ("mc-variance",),
                    "modal-convergence": ("modal-convergence",),
                    "crb-sweep": ("crb-sweep-transverse", "crb-sweep-axial")}[verb]
        if cfg.scenario not in expected:
            raise ConfigError(f"config scenario {cfg.scenario!r} does not match verb {verb!r}")
    elif verb == "crb-sweep":
        cfg = default_config(f"crb-sweep-{args.axis or 'axial'}")
    else:
        cfg = default_config(verb)
    if verb == "modal-convergence" and getattr(args, "kind", None):
        cfg = replace(cfg, modal_kind=args.kind)
    return apply_overrides(cfg, seed=args.seed, quadrature_order=args.quadrature_order,
                           out=args.out, paper_scale=bool(args.paper_scale))


def _emit(table, cfg, name: str, out_dir: Path) -> Path:
    path = write_csv(table, out_dir / f"{name}.csv", cfg.to_text())
    print(path)
    if cfg.emit_plots:
        from .plotting import plot_csv
        print(plot_csv(path))
    return path


def run(args) -> int:
    from . import runners

    if args.verb == "plot":
        from .plotting import plot_csv
        print(plot_csv(args.csv, args.output))
        return EXIT_OK

    cfg = _resolve_config(args)
    threads = max(1, args.threads or 1)
    out_dir = ensure_output_dir(cfg.output_dir)

    if args.verb == "qfi-report":
        report = runners.run_qfi_report(cfg, threads)
        _emit(report.table, cfg, "qfi-report", out_dir)
        text = report.text()
        (out_dir / "qfi-report.txt").write_text(text, encoding="utf-8")
        sys.stdout.write(text)
        return EXIT_OK if report.passed else EXIT_NUMERICAL
    if args.verb == "crb-sweep":
        _emit(runners.run_crb_sweep(cfg, threads), cfg, cfg.scenario, out_dir)
    elif args.verb == "mc-variance":
        if cfg.paper_scale:
            log.warning("paper-scale Monte Carlo requested: this run is long")
        _emit(runners.run_mc_variance(cfg, threads), cfg, "mc-variance", out_dir)
    elif args.verb == "modal-convergence":
        _emit(runners.run_modal_convergence(cfg, threads), cfg, f"modal-convergence-{cfg.modal_kind}", out_dir)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ConfigError as exc:
        print(f"sep3d: configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"sep3d: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"sep3d: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
