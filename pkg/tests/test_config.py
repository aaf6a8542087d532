"""
Tests for step-size parsing, config files and environment settings
"""

import pytest

from vtruncem.config import (
    Settings,
    build_run_config,
    canonical_key,
    load_config_file,
    parse_dt,
    parse_dt_list,
    parse_state,
    read_config_file,
)
from vtruncem.errors import ConfigError

CONVERGE_FILE = """\
[run]
command = converge
model = scalar-cubic
T = 1
paths = 500

[steps]
dt-list = 2^-6..2^-9
dt_ref = 2^-14
"""


class TestStepParsing:
    """Test step sizes and step-size lists"""

    @pytest.mark.parametrize("text, expected", [("2^-6", 2**-6), (" 2 ^ -12 ", 2**-12), ("0.005", 0.005), (0.01, 0.01)])
    def test_parse_dt(self, text, expected):
        assert parse_dt(text) == expected

    def test_parse_dt_malformed(self):
        with pytest.raises(ConfigError):
            parse_dt("small")

    def test_range_descending(self):
        assert parse_dt_list("2^-6..2^-9") == [2**-6, 2**-7, 2**-8, 2**-9]

    def test_range_ascending(self):
        assert parse_dt_list("2^-9..2^-7") == [2**-9, 2**-8, 2**-7]

    def test_comma_list(self):
        assert parse_dt_list("0.01, 2^-8,0.001") == [0.01, 2**-8, 0.001]

    def test_range_needs_powers_of_two(self):
        with pytest.raises(ConfigError):
            parse_dt_list("0.01..0.001")

    def test_empty_list(self):
        with pytest.raises(ConfigError):
            parse_dt_list(" , ")

    def test_state(self):
        assert parse_state("1, -2.5") == [1.0, -2.5]
        assert parse_state(19) == [19.0]
        with pytest.raises(ConfigError):
            parse_state("1, two")


class TestRunConfig:
    """Test run configuration consistency"""

    def test_converge_requires_reference_step(self):
        with pytest.raises(ConfigError, match="'converge' requires --dt-ref"):
            build_run_config({"command": "converge", "model": "scalar-cubic", "dt_list": "2^-6..2^-8",
                              "horizon": 1.0, "paths": 10}, Settings())

    def test_list_models_needs_nothing(self):
        config = build_run_config({"command": "list-models"}, Settings())
        assert config.model is None

    def test_step_sizes(self):
        config = build_run_config(
            {"command": "converge", "model": "scalar-cubic", "dt_list": "2^-6..2^-7", "dt_ref": "2^-10",
             "horizon": 1.0, "paths": 4},
            Settings(),
        )
        assert config.step_sizes() == [2**-6, 2**-7, 2**-10]

    def test_moments_needs_two_paths(self):
        with pytest.raises(ConfigError, match="at least 2 paths"):
            build_run_config({"command": "moments", "model": "scalar-cubic", "dt_list": "0.005", "horizon": 1.0},
                             Settings())

    def test_non_positive_horizon(self):
        with pytest.raises(ConfigError, match="T must be positive"):
            build_run_config({"command": "simulate", "model": "scalar-cubic", "dt": 0.005, "horizon": 0.0}, Settings())

    def test_burn_in_range(self):
        with pytest.raises(ConfigError, match="burn_in"):
            build_run_config({"command": "stability", "model": "scalar-cubic", "dt": 0.005, "horizon": 1.0,
                              "burn_in": 0.95}, Settings())

    def test_canonical_key(self):
        assert canonical_key("--dt-ref") == "dt_ref"
        assert canonical_key("T") == "horizon"
        assert canonical_key("M") == "paths"


class TestConfigFile:
    """Test reading config files and merging flags"""

    def test_sections_group_keys(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(CONVERGE_FILE)
        config = load_config_file(path, settings=Settings())
        assert config.command == "converge"
        assert config.horizon == 1.0
        assert config.dt_list == [2**-6, 2**-7, 2**-8, 2**-9]
        assert config.dt_ref == 2**-14

    def test_duplicate_key_across_sections(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("[a]\nseed = 1\n\n[b]\n# again\nseed = 2\n")
        with pytest.raises(ConfigError, match="set on line 2 and again on line 6"):
            read_config_file(path)

    def test_duplicate_key_through_alias(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("T = 1\nhorizon = 2\n")
        with pytest.raises(ConfigError, match="'horizon' set on line 1"):
            read_config_file(path)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("command = simulate\nsteps = 10\n")
        with pytest.raises(ConfigError, match="unknown key 'steps'"):
            read_config_file(path)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("command simulate\n")
        with pytest.raises(ConfigError, match="expected 'key = value'"):
            read_config_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            read_config_file(tmp_path / "absent.cfg")

    def test_quoted_values(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text('x0 = "1, 2"\n')
        assert read_config_file(path)["x0"] == ("1, 2", 1)

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(CONVERGE_FILE)
        config = load_config_file(path, {"paths": 20, "dt-ref": "2^-12", "seed": None}, Settings())
        assert config.paths == 20
        assert config.dt_ref == 2**-12
        assert config.seed == 0


class TestSettings:
    """Test environment defaults"""

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("VTRUNCEM_WORKERS", "3")
        monkeypatch.setenv("VTRUNCEM_SEED", "42")
        settings = Settings()
        config = build_run_config({"command": "list-models"}, settings)
        assert (config.workers, config.seed, config.chunk_size) == (3, 42, 64)

    def test_explicit_value_beats_environment(self, monkeypatch):
        monkeypatch.setenv("VTRUNCEM_WORKERS", "3")
        config = build_run_config({"command": "list-models", "workers": 1}, Settings())
        assert config.workers == 1
