"""Package loggers: one stream handler on ``ringcore``, module loggers propagate to it."""

from __future__ import annotations

import logging
from typing import Optional

from .config import get_settings

PACKAGE_LOGGER = "ringcore"
LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


def _package_root() -> logging.Logger:
    root = logging.getLogger(PACKAGE_LOGGER)
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
        root.addHandler(handler)
        root.propagate = False
        root.setLevel(get_settings().log_level)
    return root


def configure_logging(name: Optional[str] = None) -> logging.Logger:
    """Logger for ``name`` (a ``ringcore.*`` module) routed through the package handler."""

    root = _package_root()
    if not name or name == PACKAGE_LOGGER:
        return root
    if not name.startswith(PACKAGE_LOGGER + "."):
        # ``python -m ringcore.cli`` runs as __main__
        name = f"{PACKAGE_LOGGER}.{name}"
    return logging.getLogger(name)


def set_package_level(level: str) -> None:
    """Change the level of every ringcore logger at once, e.g. from ``--log-level``."""

    _package_root().setLevel(level.strip().upper())
