# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Tests for logger.py: package loggers, the PVLAB_DEBUG switch and set_package_log_level."""

import logging

from pv_regularity_lab.logger import get_logger, set_package_log_level, setup_logger


class TestSetupLogger:
    """Test suite for setup_logger level selection and handler wiring."""

    def test_info_without_debug_switch(self, monkeypatch):
        """Test INFO is chosen when neither a level nor PVLAB_DEBUG is set."""
        monkeypatch.delenv("PVLAB_DEBUG", raising=False)
        logger = setup_logger("pv_regularity_lab.tests.default_level")

        assert logger.level == logging.INFO
        assert logger.handlers

    def test_explicit_levels(self):
        """Test DEBUG and WARNING level names are honoured."""
        assert setup_logger("pv_regularity_lab.tests.debug", level="DEBUG").level == logging.DEBUG
        assert setup_logger("pv_regularity_lab.tests.warning", level="warning").level == logging.WARNING

    def test_unknown_level_name(self):
        """Test an unknown level name falls back to INFO."""
        logger = setup_logger("pv_regularity_lab.tests.unknown_level", level="LOUD")

        assert logger.level == logging.INFO

    def test_debug_switch_from_environment(self, monkeypatch):
        """Test PVLAB_DEBUG=true selects DEBUG when no level is given."""
        monkeypatch.setenv("PVLAB_DEBUG", "true")
        logger = setup_logger("pv_regularity_lab.tests.env_debug")

        assert logger.level == logging.DEBUG

    def test_debug_switch_other_values(self, monkeypatch):
        """Test PVLAB_DEBUG values other than true leave INFO in place."""
        monkeypatch.setenv("PVLAB_DEBUG", "1")
        logger = setup_logger("pv_regularity_lab.tests.env_other")

        assert logger.level == logging.INFO

    def test_explicit_level_wins_over_environment(self, monkeypatch):
        """Test an explicit level overrides PVLAB_DEBUG."""
        monkeypatch.setenv("PVLAB_DEBUG", "true")
        logger = setup_logger("pv_regularity_lab.tests.env_override", level="ERROR")

        assert logger.level == logging.ERROR

    def test_records_stay_in_the_package(self):
        """Test package records do not reach the root logger."""
        assert setup_logger("pv_regularity_lab.tests.propagation").propagate is False

    def test_single_stdout_handler(self):
        """Test repeated setup keeps one handler."""
        setup_logger("pv_regularity_lab.tests.handlers")
        logger = setup_logger("pv_regularity_lab.tests.handlers")

        assert len(logger.handlers) == 1

    def test_bare_message_format(self):
        """Test progress lines are rendered without prefixes."""
        logger = setup_logger("pv_regularity_lab.tests.format")
        record = logging.LogRecord("x", logging.INFO, __file__, 1, "-> 3 snapshots", None, None)

        assert logger.handlers[0].formatter.format(record) == "-> 3 snapshots"


class TestGetLogger:
    """Test suite for get_logger."""

    def test_module_logger(self, monkeypatch):
        """Test a module logger is a Logger at the environment's default level."""
        monkeypatch.delenv("PVLAB_DEBUG", raising=False)
        logger = get_logger("pv_regularity_lab.tests.module")

        assert isinstance(logger, logging.Logger)
        assert logger.level == logging.INFO


class TestSetPackageLogLevel:
    """Test suite for set_package_log_level."""

    def test_applies_to_package_loggers_only(self):
        """Test package loggers change level while others are left alone."""
        package_logger = get_logger("pv_regularity_lab.tests.package_level")
        other_logger = setup_logger("unrelated.package_level", level="INFO")

        set_package_log_level("WARNING")
        try:
            assert package_logger.level == logging.WARNING
            assert other_logger.level == logging.INFO
        finally:
            set_package_log_level("INFO")

    def test_reaches_loggers_created_at_import(self):
        """Test the solver's module logger follows a run's log level."""
        from pv_regularity_lab import solver

        set_package_log_level("DEBUG")
        try:
            assert solver.logger.level == logging.DEBUG
        finally:
            set_package_log_level("INFO")
