"""Shared fixtures: locations of the bundled reference measurements."""

from pathlib import Path

import pytest

PKG_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def paper_data() -> Path:
    path = PKG_ROOT / "paper-data"
    assert path.is_dir(), f"reference-measurement directory missing: {path}"
    return path
