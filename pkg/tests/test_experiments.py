import math
from dataclasses import replace

import pytest

from sep3d.experiments import (
    CSV_SCHEMA,
    ConfigError,
    apply_overrides,
    default_config,
    parse_config,
    read_csv,
    render_csv,
    run_crb_sweep,
    run_modal_convergence,
    run_qfi_report,
)
from sep3d.experiments.cli import EXIT_IO, EXIT_OK, EXIT_VALIDATION, main
from sep3d.experiments.config import OUTPUT_ENV, render
from sep3d.experiments.plotting import plot_csv

HEADER = "[experiment]\nschema = sep3d-experiment/1\n"


def _cfg(body: str, scenario: str = "crb-sweep-axial"):
    return parse_config(HEADER + f"scenario = {scenario}\n" + body)


AXIAL = """
[sweep]
coordinate = l_z
start = 0.05
stop = 0.25
points = 3
[fixed]
l_perp = 0.1, 0.2
"""


class TestConfig:
    def test_parse_and_points(self):
        cfg = _cfg(AXIAL)
        pts = cfg.points()
        assert len(pts) == 6
        assert pts[0] == {"l_perp": 0.1, "l_z": 0.05}
        assert pts[-1] == {"l_perp": 0.2, "l_z": 0.25}

    def test_render_round_trip(self):
        cfg = _cfg(AXIAL)
        assert parse_config(render(cfg)) == cfg

    @pytest.mark.parametrize("body,msg", [
        ("bogus = 1\n", "unknown key"),
        ("[extra]\nx = 1\n", "unknown section"),
        ("[sweep]\ncoordinate = l_z\nstart = 0\nstop = 1\npoints = 0\n", "empty"),
        ("[sweep]\ncoordinate = l_q\nstart = 0\nstop = 1\npoints = 3\n", "coordinate"),
        (AXIAL + "[monte_carlo]\nphotons = 0\n", "photons"),
        (AXIAL + "[monte_carlo]\nframes = 0\n", "frames"),
        ("probability_model = magic\n" + AXIAL, "probability_model"),
        ("[sweep]\ncoordinate = l_z\nstart = 0\nstop = 1\npoints = 3\n[fixed]\nl_x = 0.1\nl_perp = 0.2\n",
         "either"),
    ])
    def test_validation_errors(self, body, msg):
        with pytest.raises(ConfigError, match=msg):
            _cfg(body)

    def test_schema_required(self):
        with pytest.raises(ConfigError, match="schema"):
            parse_config("[experiment]\nscenario = qfi-report\n")

    def test_long_run_override(self):
        cfg = apply_overrides(default_config("mc-variance"), paper_scale=True, seed=5)
        assert (cfg.frames, cfg.photons, cfg.base_seed, cfg.paper_scale) == (20000, 10**6, 5, True)

    def test_output_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
        assert apply_overrides(default_config("qfi-report")).output_dir == str(tmp_path / "env")
        assert apply_overrides(default_config("qfi-report"), out="x").output_dir == "x"

    def test_embedded_config_omits_output(self):
        cfg = replace(default_config("qfi-report"), output_dir="/somewhere")
        assert "/somewhere" not in cfg.to_text()


class TestRunners:
    def test_crb_sweep_table(self):
        table = run_crb_sweep(_cfg(AXIAL))
        assert table.columns[:4] == ("l_z", "l_perp", "l_x", "l_y")
        assert len(table.rows) == 6
        rows = table.as_dicts()
        assert all(r["model"] == "exact" and r["quadrature_order"] == 64 for r in rows)
        # divergence toward small l_z on each curve
        for lp in (0.1, 0.2):
            crb = [r["CRB_zz"] for r in rows if r["l_perp"] == lp]
            assert crb[0] > crb[-1]

    def test_sweep_through_origin(self):
        # zero-probability tilt and defocus channels enter through their finite limits
        cfg = _cfg("[sweep]\ncoordinate = l_x\nstart = 0\nstop = 0.2\npoints = 2\n[fixed]\nl_y = 0\nl_z = 0\n",
                   "crb-sweep-transverse")
        first = run_crb_sweep(cfg).as_dicts()[0]
        assert first["singular_flag"] is False
        assert first["CRB_xx"] == pytest.approx(1 / (4 * math.pi**2), rel=1e-9)

    def test_modal_convergence_rows_below_asymptote(self):
        table = run_modal_convergence(replace(default_config("modal-convergence"), truncation=6))
        for r in table.as_dicts():
            assert r["J_xx"] <= r["qfi_asymptote"] + 1e-8

    def test_qfi_report_gaussian(self):
        report = run_qfi_report(replace(default_config("qfi-report"), aperture="gaussian", qfi_grid=(0.0, 0.3)))
        assert report.passed and report.analytic is None
        assert "PASS" in report.text()


class TestCSV:
    def test_round_trip_and_stability(self, tmp_path):
        cfg = _cfg(AXIAL)
        table = run_crb_sweep(cfg)
        text = render_csv(table, cfg.to_text())
        assert text.startswith(f"# schema: {CSV_SCHEMA}\n")
        assert "\r" not in text
        assert text == render_csv(run_crb_sweep(cfg), cfg.to_text())
        path = tmp_path / "t.csv"
        path.write_text(text, encoding="utf-8")
        back, config_text = read_csv(path)
        assert back.columns == table.columns
        assert back.rows == [tuple(v if not isinstance(v, bool) else int(v) for v in r) for r in table.rows]
        assert parse_config(config_text) == replace(cfg, output_dir="results")

    def test_rejects_foreign_csv(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_csv(p)


class TestCLI:
    def test_qfi_report(self, tmp_path, capsys):
        assert main(["qfi-report", "--out", str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "H_zz = 3.289868133696" in out and "PASS" in out
        assert (tmp_path / "qfi-report.csv").exists()

    def test_global_flags_before_verb(self, tmp_path):
        assert main(["--out", str(tmp_path), "--quadrature-order", "48", "modal-convergence", "--kind", "axial"]) == 0
        table, _ = read_csv(tmp_path / "modal-convergence-axial.csv")
        assert table.kind == "modal-convergence-axial"

    def test_validation_exit(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(HEADER + "scenario = crb-sweep-axial\nbogus = 1\n")
        assert main(["crb-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_VALIDATION
        assert main(["crb-sweep", "--config", str(tmp_path / "missing.ini")]) == EXIT_VALIDATION
        assert main(["no-such-verb"]) == EXIT_VALIDATION

    def test_verb_scenario_mismatch(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(HEADER + "scenario = qfi-report\n")
        assert main(["crb-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_VALIDATION

    def test_io_exit(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["qfi-report", "--out", str(blocker / "sub")]) == EXIT_IO

    def test_plot_is_pure_function_of_csv(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(HEADER + "scenario = crb-sweep-axial\n" + AXIAL)
        assert main(["crb-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        csv = tmp_path / "crb-sweep-axial.csv"
        first = plot_csv(csv, tmp_path / "a.svg").read_bytes()
        assert main(["plot", str(csv), "--output", str(tmp_path / "b.svg")]) == 0
        assert first == (tmp_path / "b.svg").read_bytes()
        assert first.startswith(b"<?xml")
