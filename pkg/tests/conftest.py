import numpy as np
import pytest

import searchgap as sg
from searchgap import simulate as sim

#: validation data-generating processes (natives-like and migrants-like)
NATIVES = sg.SegmentParams.from_values(lam=0.07, delta=0.005, mu=60.0, sigma=10.0,
                                       p_min=50.0, alpha=2.1)
MIGRANTS = sg.SegmentParams.from_values(lam=0.13, delta=0.016, mu=45.0, sigma=10.0,
                                        p_min=40.0, alpha=2.1)

U_NATIVES = 0.1214
U_MIGRANTS = 0.1838


@pytest.fixture(scope="session")
def natives_eq():
    return sg.solve_equilibrium(NATIVES)


@pytest.fixture(scope="session")
def migrants_eq():
    return sg.solve_equilibrium(MIGRANTS)


def make_sample(eq, n_total, seed, replicate=0, censor_horizon=None):
    """One model-composition flow sample."""
    rng = sim.replicate_rng(seed, replicate)
    n_u, n_e = sim.split_sample_size(eq, n_total, rng)
    cfg = sim.SimConfig(n_unemployed=n_u, n_employed=n_e, seed=seed,
                        segment=eq.params, censor_horizon=censor_horizon)
    return sim.generate_flow_sample(cfg, eq, replicate=replicate)


@pytest.fixture(scope="session")
def natives_sample(natives_eq):
    return make_sample(natives_eq, 2000, seed=424242)


@pytest.fixture(scope="session")
def migrants_sample(migrants_eq):
    return make_sample(migrants_eq, 2000, seed=424242)
