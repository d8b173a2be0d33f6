import os

import pytest
from hypothesis import HealthCheck, settings

from mdvnizk import protocol as proto
from mdvnizk.rng import make_rng

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

LAM = 32


@pytest.fixture(scope="session")
def keys():
    """One honest crs and verifier key pair shared by protocol-level tests."""
    rng = make_rng(2024, "tests-keys")
    crs = proto.setup(LAM, rng, rounds=16)
    pvk, svk = proto.vsetup(crs, rng)
    return crs, pvk, svk


@pytest.fixture(scope="session")
def sim_keys():
    rng = make_rng(2025, "tests-sim-keys")
    crs, td = proto.sim_setup(LAM, rng, rounds=16)
    pvk, svk = proto.vsetup(crs, rng)
    return crs, td, pvk, svk
