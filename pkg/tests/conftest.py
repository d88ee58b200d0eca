import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=300)
settings.load_profile(os.environ.get("GENUSFLOW_HYPOTHESIS", "default"))


@pytest.fixture(scope="session")
def torus_shrinker():
    from genusflow.shrinker import find_torus_shrinker
    return find_torus_shrinker()


@pytest.fixture(scope="session")
def shrinker_family(torus_shrinker):
    from genusflow.grid import FamilySpec
    return FamilySpec(torus_shrinker.profile.resampled(1 / 256), -0.1, 0.1)
