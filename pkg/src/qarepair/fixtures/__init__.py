"""Offline fixtures shipped with the package."""

from pathlib import Path

FIXTURE_DIR = Path(__file__).parent


def fixture_path(*parts: str) -> Path:
    return FIXTURE_DIR.joinpath(*parts)
