"""Logging verbosity from the PAINTERLY_LOG environment variable."""

import logging
import os

_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def configure_logging() -> None:
    name = os.environ.get("PAINTERLY_LOG", "warn").strip().lower()
    level = _LEVELS.get(name, logging.WARNING)
    logging.basicConfig(level=level,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
