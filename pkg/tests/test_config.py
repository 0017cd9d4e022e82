# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Tests for config.py run configuration parsing."""

import math
from fractions import Fraction

import pytest

from pv_regularity_lab.config import (
    config_hash,
    load_run_config,
    parse_config,
    parse_yaml_config,
)
from pv_regularity_lab.errors import ParseError, ThetaOutOfRange, ValidationError
from pv_regularity_lab.fields import Domain
from pv_regularity_lab.solver import InitialConditionKind


def _replace(text: str, old: str, new: str) -> str:
    assert old in text
    return text.replace(old, new)


class TestParseConfig:
    """Test suite for the line format."""

    def test_full_config(self, run_config_text, tmp_path):
        """Test every section is read into typed values."""
        cfg = parse_config(run_config_text)

        assert cfg.solver.grid.n == 16
        assert cfg.solver.grid.box_length == pytest.approx(2 * math.pi)
        assert cfg.solver.grid.domain is Domain.TORUS
        assert cfg.solver.initial_condition.kind is InitialConditionKind.TAYLOR_GREEN
        assert cfg.solver.snapshot_every == 5
        assert cfg.monitor.theta == Fraction(1, 2)
        assert isinstance(cfg.monitor.theta, Fraction)
        assert cfg.monitor.p == Fraction(8, 3)
        assert cfg.output_dir == tmp_path / "run"
        assert cfg.registry_path == tmp_path / "run" / "constants.txt"
        assert cfg.trajectory_dir == tmp_path / "run" / "trajectory"
        assert cfg.log_level == "INFO"
        assert len(cfg.config_hash) == 64

    def test_chain_pairs(self, run_config_text):
        """Test the configured pair comes first and the sweep follows."""
        cfg = parse_config(run_config_text)
        expected = [(Fraction(1, 2), Fraction(4)), (Fraction(0), Fraction(2)), (Fraction(1), Fraction(4))]
        assert cfg.chain_pairs == expected

    def test_chain_pairs_skip_repeats(self, run_config_text):
        """Test a sweep entry equal to the configured pair is not repeated."""
        cfg = parse_config(_replace(run_config_text, "0:2, 1:4", "1/2:4, 1:4"))
        assert cfg.chain_pairs == [(Fraction(1, 2), Fraction(4)), (Fraction(1), Fraction(4))]

    def test_automatic_dt(self, run_config_text):
        """Test dt = auto leaves the choice to the CFL bound."""
        cfg = parse_config(_replace(run_config_text, "solver.dt = 0.01", "solver.dt = auto"))
        assert cfg.solver.dt is None

    def test_windowed_default_length(self, run_config_text):
        """Test a windowed domain without box_length gets the default window."""
        text = _replace(run_config_text, "solver.box_length = 2pi", "solver.domain = windowed")
        cfg = parse_config(text)

        assert cfg.solver.grid.domain is Domain.WINDOWED
        assert cfg.solver.grid.box_length == 10.0

    @pytest.mark.parametrize(("raw", "expected"), [("pi", math.pi), ("0.5pi", math.pi / 2), ("4", 4.0)])
    def test_pi_suffix(self, run_config_text, raw, expected):
        """Test box lengths written as multiples of pi."""
        cfg = parse_config(_replace(run_config_text, "solver.box_length = 2pi", f"solver.box_length = {raw}"))
        assert cfg.solver.grid.box_length == pytest.approx(expected)

    @pytest.mark.parametrize("theta", ["1.5", "1.01"])
    def test_theta_out_of_range(self, run_config_text, theta):
        """Test theta above 1 is a validation error, not a parse error."""
        with pytest.raises(ThetaOutOfRange):
            parse_config(_replace(run_config_text, "monitor.theta = 1/2", f"monitor.theta = {theta}"))

    def test_missing_required_key(self, run_config_text):
        """Test ParseError naming the missing key."""
        with pytest.raises(ParseError, match="monitor.q"):
            parse_config(_replace(run_config_text, "monitor.q = 4", ""))

    def test_unknown_key_line_number(self):
        """Test the line of an unknown key is reported."""
        with pytest.raises(ParseError, match="line 2") as excinfo:
            parse_config("solver.n = 16\nsolver.colour = blue\n")
        assert excinfo.value.line_number == 2

    def test_duplicate_key(self, run_config_text):
        """Test a repeated key is rejected with both line numbers."""
        with pytest.raises(ParseError, match="given twice"):
            parse_config(run_config_text + "solver.n = 32\n")

    def test_malformed_line(self):
        """Test a line without '=' is rejected."""
        with pytest.raises(ParseError, match="line 1"):
            parse_config("solver.n 16\n")

    def test_unreadable_value(self, run_config_text):
        """Test a non-numeric grid size is a ParseError with its line."""
        with pytest.raises(ParseError, match="solver.n"):
            parse_config(_replace(run_config_text, "solver.n = 16", "solver.n = sixteen"))

    def test_invalid_grid_size(self, run_config_text):
        """Test a grid size that is not a power of two."""
        with pytest.raises(ValidationError):
            parse_config(_replace(run_config_text, "solver.n = 16", "solver.n = 12"))

    def test_bad_sweep(self, run_config_text):
        """Test sweep entries must look like theta:q."""
        with pytest.raises(ParseError, match="theta:q"):
            parse_config(_replace(run_config_text, "0:2, 1:4", "0-2"))

    def test_bad_log_level(self, run_config_text):
        """Test unknown log levels are rejected."""
        with pytest.raises(ParseError, match="log_level"):
            parse_config(run_config_text + "run.log_level = chatty\n")

    def test_epsilon_too_large(self, run_config_text):
        """Test an epsilon that defeats the absorption is rejected."""
        with pytest.raises(ValidationError, match="too large"):
            parse_config(run_config_text + "monitor.epsilon = 1/8\n")


class TestConfigHash:
    """Test suite for config_hash and format equivalence."""

    def test_hash_ignores_order_and_comments(self, run_config_text):
        """Test reordering lines and adding comments keeps the hash."""
        lines = [line for line in run_config_text.splitlines() if line.strip()]
        reordered = "\n".join(["# a comment", *reversed(lines)])

        assert parse_config(reordered).config_hash == parse_config(run_config_text).config_hash

    def test_hash_changes_with_values(self, run_config_text):
        """Test a different value gives a different hash."""
        other = _replace(run_config_text, "solver.t_end = 0.2", "solver.t_end = 0.3")
        assert parse_config(other).config_hash != parse_config(run_config_text).config_hash

    def test_canonical_form(self):
        """Test the hash is taken over sorted key = value lines."""
        assert config_hash({"b": "2", "a": "1"}) == config_hash({"a": "1", "b": "2"})

    def test_yaml_equivalence(self, run_config_text, tmp_path):
        """Test the YAML form of the same entries gives the same config and hash."""
        yaml_text = f"""
solver:
  n: 16
  box_length: 2pi
  t_end: 0.2
  dt: 0.01
  snapshot_every: 5
  initial_condition: taylor_green
  amplitude: 1.0
monitor:
  theta: 1/2
  q: 4
  sweep: ["0:2", "1:4"]
run:
  output_dir: {tmp_path / "run"}
"""
        from_yaml = parse_yaml_config(yaml_text)
        from_lines = parse_config(run_config_text)

        assert from_yaml.config_hash == from_lines.config_hash
        assert from_yaml.monitor == from_lines.monitor
        assert from_yaml.solver == from_lines.solver

    def test_yaml_unknown_key(self):
        """Test unknown YAML keys are rejected."""
        with pytest.raises(ParseError, match="unknown key"):
            parse_yaml_config("solver:\n  colour: blue\n")

    def test_yaml_must_be_mapping(self):
        """Test a YAML list is rejected."""
        with pytest.raises(ParseError, match="mapping"):
            parse_yaml_config("- a\n- b\n")


class TestLoadRunConfig:
    """Test suite for load_run_config."""

    def test_missing_file(self, tmp_path):
        """Test FileNotFoundError for a missing configuration."""
        with pytest.raises(FileNotFoundError):
            load_run_config(tmp_path / "missing.cfg")

    def test_line_format_file(self, tmp_path, run_config_text):
        """Test a .cfg file is read with the line parser."""
        path = tmp_path / "run.cfg"
        path.write_text(run_config_text, encoding="utf-8")

        assert load_run_config(path).monitor.q == 4

    def test_yaml_file(self, tmp_path):
        """Test a .yaml file is read with the YAML parser."""
        path = tmp_path / "run.yaml"
        path.write_text(
            "solver: {n: 8, t_end: 0.1, initial_condition: shear}\n"
            f"monitor: {{theta: 1, q: 4}}\nrun: {{output_dir: {tmp_path}}}\n",
            encoding="utf-8",
        )
        cfg = load_run_config(path)

        assert cfg.solver.grid.n == 8
        assert cfg.monitor.p == 8
