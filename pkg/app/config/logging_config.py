"""
Logging configuration module.
This module sets up the handlers used by the CLI and the API.
"""
import logging
import sys

from app.config.settings import LOG_LEVEL

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level=None):
    """
    Configure the root logger to write to standard error.

    Standard output is reserved for results, so every diagnostic goes to stderr.

    Args:
        level (str | int, optional): Logging level; defaults to RELDEP_LOG_LEVEL

    Returns:
        logging.Logger: The configured root logger
    """
    if level is None:
        level = LOG_LEVEL
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.WARNING

    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_reldep", False):
            root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._reldep = True
    root.addHandler(handler)
    root.setLevel(level)
    return root
