import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from burgers_trap.driver import InitialSet, RunConfig, integrate_period, prepare, reference_solve
from burgers_trap.forcing import example2

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def k32_config() -> RunConfig:
    """The desk-scale containment run: example 2, k=32, 512 steps, 8 leading modes."""
    return RunConfig(example2(), k=32, steps_per_period=512, leading_count=8,
                     initial=InitialSet(leading_radius=0.12, tail_radius=0.005))


@pytest.fixture(scope="session")
def k32_run():
    cfg = k32_config()
    setup = prepare(cfg)
    result = integrate_period(cfg, setup)
    ref = reference_solve(cfg, alpha0=setup.basis.B @ setup.reference_beta0, B=setup.basis.B)
    return cfg, setup, result, ref


@pytest.fixture(scope="session")
def k16_run():
    # 8 leading modes put lambda_8 * dt outside the stability region of the
    # 4th order Taylor step at 256 steps, so 6 are integrated here
    cfg = RunConfig(example2(), k=16, steps_per_period=256, leading_count=6)
    setup = prepare(cfg)
    result = integrate_period(cfg, setup)
    ref = reference_solve(cfg, alpha0=setup.basis.B @ setup.reference_beta0, B=setup.basis.B)
    return cfg, setup, result, ref


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
