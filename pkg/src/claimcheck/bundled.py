"""Paths to the bundled synthetic corpus and scripted provider responses."""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path


def bundled_corpus_path() -> Path:
    """60 synthetic claims, 20 per label, for offline end-to-end runs."""
    return Path(str(files("claimcheck").joinpath("data", "synthetic_corpus.json")))


def bundled_mock_script_path() -> Path:
    """Scripted model and fact-check responses matching the bundled corpus."""
    return Path(str(files("claimcheck").joinpath("data", "mock_providers.json")))
