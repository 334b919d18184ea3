from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from antijam.params import EnvParams, JammerConfig, Scenario

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def toy_env() -> EnvParams:
    """D=1, E=2, one arrival every slot, one ambient unit every slot, no miss detection."""
    return EnvParams(D=1, E=2, K=1, lam=1.0, p_e=1.0, e_v=1, d_hat_a=2, d_hat_de=1, p_miss=0.0,
                     d_max=1, e_harvest=(0, 1, 1, 2), d_backscatter=(0, 1, 1, 1), d_rate=(1, 1, 0))


def toy_jammer() -> JammerConfig:
    """Always attacks, always at power level 2."""
    return JammerConfig(x=(0.0, 0.0, 1.0, 0.0), P_avg=10.0)


@pytest.fixture
def toy() -> Scenario:
    return Scenario(toy_env(), toy_jammer())


@pytest.fixture
def default_scenario() -> Scenario:
    return Scenario()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def quiet_uniforms(**overrides) -> np.ndarray:
    """A uniform row with no arrival, no ambient harvest, no miss detection and no attack."""
    from antijam.kernels import envk

    u = np.full(envk.N_UNIFORMS, 0.999999)
    u[envk.U_JAM] = 0.0
    names = {"jam": envk.U_JAM, "miss": envk.U_MISS, "arr": envk.U_ARR, "amb": envk.U_AMB,
             "explore": envk.U_EXPLORE, "pick": envk.U_PICK}
    for k, v in overrides.items():
        u[names[k]] = v
    return u
