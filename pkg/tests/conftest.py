from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from regeval.jurisdiction import JurisdictionRegistry


@pytest.fixture(scope="session")
def registry() -> JurisdictionRegistry:
    return JurisdictionRegistry.default()
