"""Shared pytest setup: source-tree imports and an environment free of RINGCORE_* overrides."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parents[1] / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    from ringcore.config import get_settings

    for name in list(os.environ):
        if name.startswith("RINGCORE_"):
            monkeypatch.delenv(name)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
