# rdphase/utils/logging.py

import logging
import sys
from typing import Optional, TextIO

ROOT_LOGGER = "rdphase"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def get_logger(name: str) -> logging.Logger:
    """Returns a logger placed under the `rdphase` namespace."""
    if name == ROOT_LOGGER or name.startswith(ROOT_LOGGER + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_LOGGER}.{name}")


def configure_logging(
    level: int = logging.WARNING, stream: Optional[TextIO] = None
) -> logging.Logger:
    """
    Installs a single stream handler on the package logger.

    Calling it again replaces the previous handler, so the CLI can reconfigure
    verbosity per invocation.
    """
    logger = logging.getLogger(ROOT_LOGGER)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return logger


def reset_logging() -> None:
    """Removes handlers installed by `configure_logging`. Used by tests."""
    logger = logging.getLogger(ROOT_LOGGER)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.setLevel(logging.NOTSET)
    logger.propagate = True
