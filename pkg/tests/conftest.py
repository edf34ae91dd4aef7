import time

import numpy as np
import pytest

from chemorepel.dynamics import SchemeConfig, State, params_for_initial, simulate
from chemorepel.grid import Field, build_grid, random_cosine_field


def perturbed_state(grid, amplitude, seed=7, c_offset=0.1, max_wavenumber=3):
    rng = np.random.default_rng(seed)
    f1 = random_cosine_field(grid, rng, max_wavenumber, 1.0)
    f2 = random_cosine_field(grid, rng, max_wavenumber, 1.0)
    rho = Field(grid, 1.0 + amplitude * f1)
    c = Field(grid, 1.0 + c_offset + amplitude * f2)
    return State(rho=rho, c=c, t=0.0)


@pytest.fixture(scope="session")
def box_run():
    """64^2 box, 1e4 steps at dt=1e-3 with a probe every step.

    Shared by the mass-conservation, mean-c law and Lyapunov monotonicity
    checks; the perturbation is resolved (wavenumbers <= 3) and the initial
    c-mean sits off equilibrium. Returns (trajectory, wall_seconds).
    """
    g = build_grid(2, (1.0, 1.0), (64, 64))
    state = perturbed_state(g, amplitude=0.05)
    params = params_for_initial(state.rho)
    scheme = SchemeConfig(dt=1e-3)
    t0 = time.perf_counter()
    traj = simulate(state, params, scheme, 10.0, probe_every=1,
                    energy_detail=False)
    return traj, time.perf_counter() - t0


@pytest.fixture(scope="session")
def rate_run():
    """Small-amplitude 64^2 run used for the nonlinear decay-rate checks.

    Returns (trajectory, wall_seconds).
    """
    g = build_grid(2, (1.0, 1.0), (64, 64))
    state = perturbed_state(g, amplitude=1e-2)
    params = params_for_initial(state.rho)
    scheme = SchemeConfig(dt=1e-3)
    t0 = time.perf_counter()
    traj = simulate(state, params, scheme, 1.5, probe_every=2,
                    energy_detail=False)
    return traj, time.perf_counter() - t0
