from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from unitloc.convert import default_registry
from unitloc.quantity import Lexicon


@pytest.fixture(scope="session")
def lexicon() -> Lexicon:
    return Lexicon.default()


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def mtokm(registry):
    return registry["mtokm"]


@pytest.fixture(scope="session")
def ftoc(registry):
    return registry["ftoc"]
