import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from microrl.sim import ScenarioSpec
from microrl.units import GOLIATH, MARINE, ZEALOT, ZERGLING

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

CLASSES = {"goliath": GOLIATH, "zealot": ZEALOT, "zergling": ZERGLING, "marine": MARINE}


def make_spec(own, enemy, *, name="t", width=64.0, height=64.0, **kw):
    """``own``/``enemy``: lists of (class, (x, y))."""
    return ScenarioSpec(name, width, height, tuple(own), tuple(enemy), **kw)


@pytest.fixture
def g3z6():
    from microrl.scenarios import bundled_scenario
    return bundled_scenario("g3_vs_z6")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
