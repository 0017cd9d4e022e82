# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Console loggers for the pv_regularity_lab package.

Every module logs through ``get_logger(__name__)``; records go to stdout as the
bare message so the ``[OK]`` / ``[FAIL]`` markers and ``-> `` progress lines read
like a transcript. ``PVLAB_DEBUG=true`` lowers new loggers to DEBUG, and a run
configuration's ``run.log_level`` reaches loggers created at import time through
``set_package_log_level``.
"""

import logging
import os
import sys

from .lab_config import ENV_PVLAB_DEBUG, PACKAGE_LOGGER_PREFIX


def setup_logger(name: str, level: str | None = None) -> logging.Logger:
    """Return the named logger with a single stdout handler attached.

    Args:
        name: Logger name, normally the module's __name__
        level: Level name; unknown names fall back to INFO. Without it PVLAB_DEBUG decides

    Returns:
        The configured logger, which does not propagate to the root logger
    """
    logger = logging.getLogger(name)

    if level:
        logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    elif os.getenv(ENV_PVLAB_DEBUG, "false").lower() == "true":
        logger.setLevel(logging.DEBUG)
    else:
        logger.setLevel(logging.INFO)

    # Repeated imports reuse the existing handler
    if not logger.handlers:
        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setLevel(logging.DEBUG)
        console_handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(console_handler)

    logger.propagate = False
    return logger


def get_logger(name: str) -> logging.Logger:
    """Module-level logger at the environment's default level."""
    return setup_logger(name)


def set_package_log_level(level: str) -> None:
    """Apply a log level to every pv_regularity_lab logger created so far.

    Loggers outside the package keep their level.

    Args:
        level: Level name (DEBUG, INFO, WARNING, ERROR, CRITICAL)
    """
    resolved = getattr(logging, level.upper(), logging.INFO)
    for name, candidate in logging.Logger.manager.loggerDict.items():
        if name.startswith(PACKAGE_LOGGER_PREFIX) and isinstance(candidate, logging.Logger):
            candidate.setLevel(resolved)
