# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Tests for registry.py constants registry files."""

import pytest

from pv_regularity_lab.errors import FormatError
from pv_regularity_lab.registry import (
    ConstantsRegistry,
    format_registry,
    parse_registry,
    read_registry,
    read_registry_or_default,
    registry_config_hash,
    write_registry,
)


class TestParseRegistry:
    """Test suite for parse_registry."""

    def test_defaults_are_one(self):
        """Test names not given keep the unit default."""
        registry = parse_registry("# empty\n\nC_holder_corpus = 2.5\n")

        assert registry.C_holder_corpus == 2.5
        assert registry.C_sobolev_corpus == 1.0
        assert registry.mu_gronwall == 1.0

    def test_interp_sobolev_product(self):
        """Test the combined interpolation-Sobolev constant."""
        registry = parse_registry("C_interp_corpus = 3\nC_sobolev_corpus = 0.5\n")
        assert registry.interp_sobolev == pytest.approx(1.5)

    @pytest.mark.parametrize(
        ("text", "message"),
        [
            ("C_holder_corpus 2", "expected 'name = value'"),
            ("C_unknown = 2", "unknown"),
            ("C_holder_corpus = 2\nC_holder_corpus = 3", "twice"),
            ("C_holder_corpus = big", "not a number"),
        ],
    )
    def test_malformed_lines(self, text, message):
        """Test FormatError messages for malformed registries."""
        with pytest.raises(FormatError, match=message):
            parse_registry(text)

    def test_line_number_is_reported(self):
        """Test the offending line number appears in the message."""
        with pytest.raises(FormatError, match="line 3"):
            parse_registry("# header\nC_holder_corpus = 1\nbogus = 2\n")

    @pytest.mark.parametrize("value", ["0", "-1", "nan", "inf"])
    def test_non_positive_constants(self, value):
        """Test constants must be positive and finite."""
        with pytest.raises(FormatError, match="positive"):
            parse_registry(f"C_riesz_corpus = {value}\n")


class TestRegistryFiles:
    """Test suite for writing and reading registry files."""

    def test_round_trip_with_hash(self, tmp_path):
        """Test a written registry reads back with its hash header."""
        registry = ConstantsRegistry(C_holder_corpus=1.25, C_riesz_corpus=0.75, c_gronwall=2.0)
        path = write_registry(registry, tmp_path / "sub" / "constants.txt", config_hash="ab" * 32)
        text = path.read_text(encoding="utf-8")

        assert read_registry(path) == registry
        assert registry_config_hash(text) == "ab" * 32
        assert text.splitlines()[0] == f"# config_hash = {'ab' * 32}"

    def test_float_values_survive_exactly(self):
        """Test repr formatting keeps every bit of the constants."""
        registry = ConstantsRegistry(C_holder_corpus=0.1 + 0.2)
        assert parse_registry(format_registry(registry)).C_holder_corpus == 0.1 + 0.2

    def test_no_hash_header(self):
        """Test registries without a header report no hash."""
        assert registry_config_hash(format_registry(ConstantsRegistry())) is None

    def test_missing_file(self, tmp_path):
        """Test FileNotFoundError for a missing registry."""
        with pytest.raises(FileNotFoundError):
            read_registry(tmp_path / "missing.txt")

    def test_default_when_absent(self, tmp_path):
        """Test unit constants are used when there is no registry."""
        assert read_registry_or_default(tmp_path / "missing.txt") == ConstantsRegistry()
        assert read_registry_or_default(None) == ConstantsRegistry()
