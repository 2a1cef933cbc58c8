import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from ofisp.core import fig1_instance

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).parent / "data"


@pytest.fixture
def fig1():
    return fig1_instance()


@pytest.fixture
def round_midi() -> Path:
    return DATA / "frere_jacques_round.mid"
