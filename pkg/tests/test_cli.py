"""
Tests for the CSV reporter and the command line interface
"""

import io
import logging

import pytest
from rich.console import Console
from typer.testing import CliRunner

from vtruncem import cli, stdout
from vtruncem.config import build_run_config
from vtruncem.errors import ConfigError, NumericFailure
from vtruncem.montecarlo.estimators import MomentReport, MomentRow
from vtruncem.stdout import OutputMode, STDOUTHandler, get_stdout_handler, set_output_mode
from vtruncem.utils.console_helper import SafeConsole, make_text_safe
from vtruncem.utils.reporter import MOMENT_COLUMNS, STABILITY_COLUMNS, Reporter, format_value

runner = CliRunner()

FAILING_MODEL = """\
# ℒV = 2x² is positive, so λ = 0 cannot hold
f = x
g = 0
V = x^2
lambda = 0
"""


class TestReporter:
    """Test CSV formatting and layouts"""

    def test_format_value(self):
        assert format_value(0.1) == "0.10000000000000001"
        assert format_value(True) == "1"
        assert format_value(False) == "0"
        assert format_value(None) == ""
        assert format_value(7) == "7"
        assert format_value(float("-inf")) == "-inf"

    def test_moment_report(self, tmp_path):
        report = MomentReport(
            model="scalar-cubic",
            rho=0.5,
            horizon=1.0,
            seed=0,
            rows=[MomentRow(dt=0.5, sup_moment=2.0, stderr=0.0, argmax_step=0, paths=2)],
        )
        path = Reporter(str(tmp_path)).write(report, "moments.csv")
        lines = open(path, encoding="utf-8").read().splitlines()
        assert lines == [",".join(MOMENT_COLUMNS), "0.5,2,0,0,2"]

    def test_unsupported_report(self, tmp_path):
        with pytest.raises(ConfigError):
            Reporter(str(tmp_path)).write({"rows": []}, "x.csv")

    def test_nested_output_directory(self, tmp_path, scalar_cubic):
        reports = scalar_cubic.validation_reports(32)
        path = Reporter(str(tmp_path)).write(reports, "deep/dir/validation.csv")
        lines = open(path, encoding="utf-8").read().splitlines()
        assert lines[0] == "check,passed,checked,skipped,failures,worst_ratio"
        assert len(lines) == len(reports) + 1


class TestRun:
    """Test exit codes of run()"""

    @pytest.fixture
    def handler(self):
        return STDOUTHandler(OutputMode.QUIET, use_colors=False)

    def test_numeric_failure_exit_code(self, monkeypatch, handler):
        def explode(config, bundle, out):
            raise NumericFailure("non-finite predictor", [float("nan")])

        monkeypatch.setitem(cli.COMMANDS, "validate", explode)
        config = build_run_config({"command": "validate", "model": "scalar-cubic"})
        assert cli.run(config, handler) == cli.EXIT_NUMERIC

    def test_step_above_cap(self, handler):
        config = build_run_config({"command": "stability", "model": "scalar-cubic", "dt": 0.01, "horizon": 1.0})
        assert cli.run(config, handler) == cli.EXIT_CONFIG

    def test_classical_simulate_ignores_cap(self, handler, tmp_path):
        config = build_run_config(
            {"command": "simulate", "model": "scalar-cubic", "scheme": "classical", "dt": 0.01, "horizon": 0.1,
             "x0": "1", "out": tmp_path / "path.csv"}
        )
        assert cli.run(config, handler) == cli.EXIT_OK
        lines = (tmp_path / "path.csv").read_text().splitlines()
        assert lines[0] == "step,t,y_1,v,truncated"
        assert len(lines) == 12

    def test_infeasible_start_only_for_classical(self, handler, tmp_path):
        """x0 = 25 is outside what the scalar-cubic policy admits"""
        values = {"model": "scalar-cubic", "dt": 0.005, "horizon": 0.1, "x0": "25"}
        classical = build_run_config(dict(values, command="simulate", scheme="classical", out=tmp_path / "em.csv"))
        assert cli.run(classical, handler) == cli.EXIT_OK
        truncated = build_run_config(dict(values, command="simulate"))
        assert cli.run(truncated, handler) == cli.EXIT_CONFIG

    def test_unknown_model(self, handler):
        config = build_run_config({"command": "validate", "model": "no-such-model"})
        assert cli.run(config, handler) == cli.EXIT_CONFIG


class TestCommands:
    """Test the typer commands end to end"""

    def test_list_models(self):
        result = runner.invoke(cli.app, ["list-models"])
        assert result.exit_code == 0
        assert "scalar-cubic" in result.output
        assert "duffing-vdp" in result.output

    def test_validate_builtin(self, tmp_path):
        out = tmp_path / "checks.csv"
        result = runner.invoke(cli.app, ["validate", "--model", "duffing-vdp", "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = [row.split(",") for row in out.read_text().splitlines()[1:]]
        assert rows[-1][0] == "third derivative probe"
        assert all(row[1] == "1" for row in rows[:-1])

    def test_validate_failing_description(self, tmp_path):
        model = tmp_path / "unstable.poly"
        model.write_text(FAILING_MODEL)
        result = runner.invoke(cli.app, ["validate", "--model", str(model)])
        assert result.exit_code == 2

    def test_converge_without_reference_step(self):
        result = runner.invoke(cli.app, ["converge", "-m", "scalar-cubic", "--dt-list", "2^-6..2^-8", "-T", "1"])
        assert result.exit_code == 1

    def test_stability_csv(self, tmp_path):
        out = tmp_path / "stability.csv"
        args = ["stability", "-m", "scalar-cubic", "--dt", "0.005", "-T", "0.5", "-M", "4", "--seed", "3", "-o", str(out)]
        result = runner.invoke(cli.app, args)
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(STABILITY_COLUMNS)
        assert len(lines) == 1 + 2 * 4
        assert {line.split(",")[1] for line in lines[1:]} == {"truncated", "classical"}

    def test_worker_count_does_not_change_output(self, tmp_path):
        outputs = []
        for workers in ("1", "3"):
            out = tmp_path / f"moments-{workers}.csv"
            args = [
                "moments", "-m", "scalar-cubic", "--dt-list", "0.005,0.0025", "-T", "0.5", "-M", "7",
                "--seed", "11", "-w", workers, "--chunk-size", "2", "-o", str(out), "-q",
            ]
            result = runner.invoke(cli.app, args)
            assert result.exit_code == 0, result.output
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[run]\nmodel = scalar-cubic\ndt = 0.005\nT = 0.05\n")
        out = tmp_path / "path.csv"
        result = runner.invoke(cli.app, ["simulate", "-c", str(cfg), "--T", "0.1", "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert len(out.read_text().splitlines()) == 1 + 21


class TestConsole:
    """Test ASCII fallbacks for report symbols"""

    def test_symbols_spelled_out(self):
        text = "ℒ(1+V)^ρ ≤ λ(1+V^ρ) at Δ = 2⁻¹"
        assert make_text_safe(text) == "L(1+V)^rho <= lambda(1+V^rho) at dt = 2^-1"

    def test_unicode_encoding_keeps_symbols(self):
        assert make_text_safe("φ(u) ≥ 1", "utf-8") == "φ(u) ≥ 1"

    def test_ascii_console(self):
        buffer = io.StringIO()
        console = SafeConsole(Console(file=buffer, color_system=None, width=200), unicode_supported=False)
        console.print("✓ Δ* = 0.008", highlight=False)
        assert buffer.getvalue().strip() == "ok dt* = 0.008"


class TestOutputMode:
    """Test output modes and the shared handler"""

    def test_set_output_mode_updates_shared_handler(self, monkeypatch):
        monkeypatch.setattr(stdout, "stdout_handler", None)
        set_output_mode(OutputMode.QUIET)
        handler = get_stdout_handler()
        assert handler.quiet
        assert handler.mode.log_level == logging.ERROR

    @pytest.mark.parametrize("mode, shown", [(OutputMode.DEBUG, True), (OutputMode.VERBOSE, False)])
    def test_run_config_echoed_in_debug_mode(self, mode, shown):
        buffer = io.StringIO()
        handler = STDOUTHandler(mode, use_colors=False, console=Console(file=buffer, color_system=None, width=400))
        config = build_run_config({"command": "validate", "model": "scalar-cubic"})
        assert cli.run(config, handler) == cli.EXIT_OK
        assert ("run config:" in buffer.getvalue()) is shown
