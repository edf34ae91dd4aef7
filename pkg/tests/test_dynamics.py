import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.sparse.linalg import spsolve

from chemorepel.dynamics import (NumericBlowup, Params, PositivityLoss,
                                 SchemeConfig, State, drift_flux,
                                 from_reduced, params_for_initial,
                                 reduced_form, simulate, step,
                                 sweep_distances)
from chemorepel.grid import (Field, build_grid, divergence_faces,
                             laplacian_matrix, random_cosine_field)


def make_state(g, rho_vals, c_vals, t=0.0):
    return State(Field(g, rho_vals), Field(g, c_vals), t)


def random_state(g, seed, base=1.0, amp=0.2):
    rng = np.random.default_rng(seed)
    rho = base + amp * random_cosine_field(g, rng, 3, 1.0)
    c = base + amp * random_cosine_field(g, rng, 3, 1.0)
    return make_state(g, rho, c)


def test_params_validation():
    with pytest.raises(ValueError):
        Params(chi=0.0)
    with pytest.raises(ValueError):
        Params(gamma=-1.0)
    with pytest.raises(ValueError):
        Params(eps=-0.1)


def test_params_for_initial_eps_range_message():
    g = build_grid(1, (1.0,), (16,))
    rho = Field(g, np.full(g.shape, 2.0))
    with pytest.raises(ValueError, match=r"\(0, 0.5\]"):
        params_for_initial(rho, eps=0.6)
    p = params_for_initial(rho, eps=0.5)
    assert p.M == pytest.approx(2.0)


def test_scheme_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(dt=0.0)
    with pytest.raises(ValueError):
        SchemeConfig(dt=1e-3, drift_discretization="quick")
    with pytest.raises(ValueError):
        SchemeConfig(dt=1e-3, linear_solver_tol=1e-3)


def test_drift_flux_log_sensitivity_profile():
    # rho = 1, c = e^x: the continuum flux chi (rho/c) c_x is 1; faces read
    # sinh(h)/h, so the discrete flux is uniform with an O(h^2) offset
    g = build_grid(1, (1.0,), (64,))
    h = g.spacing[0]
    x = g.cell_centers(0)
    s = make_state(g, np.ones(g.shape), np.exp(x))
    F = drift_flux(s, Params(M=1.0))[0]
    assert F[0] == F[-1] == 0.0
    np.testing.assert_allclose(F[1:-1], np.sinh(h) / h, rtol=1e-13)
    assert F[1:-1].mean() == pytest.approx(1.0, abs=1e-4)  # h^2/6 = 4.1e-5


def test_drift_flux_upwind_uses_high_c_donor():
    g = build_grid(1, (1.0,), (4,))
    rho = np.array([1.0, 2.0, 3.0, 4.0])
    c = np.array([1.0, 2.0, 3.0, 4.0])  # increasing: donor is the right cell
    s = make_state(g, rho, c)
    F = drift_flux(s, Params(M=1.0), discretization="upwind")[0]
    h = g.spacing[0]
    expected = (rho[1:] / c[1:]) * np.diff(c) / h
    np.testing.assert_allclose(F[1:-1], expected, rtol=1e-14)


def test_step_matches_sparse_solve_oracle():
    # increment-form modal solves vs assembling (I - dt L) and spsolve
    g = build_grid(2, (1.0, 1.0), (16, 16))
    s = random_state(g, 11)
    params = params_for_initial(s.rho)
    dt = 1e-2
    s1 = step(s, params, SchemeConfig(dt=dt))

    L = laplacian_matrix(g)
    eye = sp.identity(g.cell_count, format="csr")
    rhs = s.rho.values + dt * divergence_faces(
        g, drift_flux(s, params, "central"))
    rho1 = spsolve((eye - dt * L).tocsc(), rhs.ravel())
    c1 = spsolve((params.gamma * eye + dt * (eye - L)).tocsc(),
                 params.gamma * s.c.values.ravel() + dt * rho1)
    np.testing.assert_allclose(s1.rho.values.ravel(), rho1, atol=1e-11)
    np.testing.assert_allclose(s1.c.values.ravel(), c1, atol=1e-11)


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=20, deadline=None)
def test_one_step_mass_exact(seed):
    g = build_grid(2, (1.0, 1.0), (12, 12))
    s = random_state(g, seed)
    params = params_for_initial(s.rho)
    s1 = step(s, params, SchemeConfig(dt=5e-3))
    m0 = s.rho.values.sum() * g.cell_volume
    m1 = s1.rho.values.sum() * g.cell_volume
    assert abs(m1 - m0) <= 1e-14 * abs(m0)


@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([0.5, 1.0, 2.0]))
@settings(max_examples=20, deadline=None)
def test_one_step_cbar_recurrence(seed, gamma):
    g = build_grid(1, (1.0,), (32,))
    s = random_state(g, seed)
    params = params_for_initial(s.rho, gamma=gamma)
    dt = 2e-3
    s1 = step(s, params, SchemeConfig(dt=dt))
    cbar = s.c.values.mean()
    rhobar = s.rho.values.mean()
    want = (cbar + (dt / gamma) * rhobar) / (1.0 + dt / gamma)
    assert s1.c.values.mean() == pytest.approx(want, rel=1e-14)


def test_reduced_roundtrip():
    g = build_grid(2, (1.0, 1.0), (8, 8))
    s = random_state(g, 3)
    params = params_for_initial(s.rho)
    u, v = reduced_form(s, params)
    back = from_reduced(u, v, params, t=s.t)
    np.testing.assert_allclose(back.rho.values, s.rho.values, atol=1e-15)
    np.testing.assert_allclose(back.c.values, s.c.values, atol=1e-15)
    assert abs(u.values.mean()) < 1e-14


def test_simulate_initial_validation():
    g = build_grid(1, (1.0,), (16,))
    bad_rho = make_state(g, -np.ones(g.shape), np.ones(g.shape))
    with pytest.raises(ValueError):
        simulate(bad_rho, Params(M=1.0), SchemeConfig(dt=1e-3), 0.01)
    bad_c = make_state(g, np.ones(g.shape), np.zeros(g.shape))
    with pytest.raises(ValueError):
        simulate(bad_c, Params(M=1.0), SchemeConfig(dt=1e-3), 0.01)


def test_simulate_aborts_on_non_finite():
    g = build_grid(1, (1.0,), (16,))
    c = np.ones(g.shape)
    c[3] = np.nan
    s = make_state(g, np.ones(g.shape), c)
    traj = simulate(s, Params(M=1.0), SchemeConfig(dt=1e-3), 0.1)
    assert traj.aborted
    assert "non-finite" in traj.abort_reason


def test_simulate_aborts_on_c_floor():
    # rho = 0.1 pulls cbar below the floor; fixed dt has to stop
    g = build_grid(1, (1.0,), (16,))
    s = make_state(g, 0.1 * np.ones(g.shape), 0.6 * np.ones(g.shape))
    traj = simulate(s, params_for_initial(s.rho),
                    SchemeConfig(dt=0.05, c_floor=0.5), 20.0)
    assert traj.aborted
    assert "floor" in traj.abort_reason
    assert traj.final_state.t < 20.0


def test_step_volume_filling_cap():
    g = build_grid(1, (1.0,), (16,))
    s = make_state(g, 1.5 * np.ones(g.shape), np.ones(g.shape))
    with pytest.raises(PositivityLoss, match="cap"):
        step(s, Params(eps=1.0, M=1.5), SchemeConfig(dt=1e-3))


def test_simulate_probe_count_and_times():
    g = build_grid(1, (1.0,), (32,))
    s = random_state(g, 5)
    traj = simulate(s, params_for_initial(s.rho), SchemeConfig(dt=1e-3), 0.1,
                    probe_every=10)
    assert len(traj.records) == 11  # t=0 plus every 10th of 100 steps
    assert traj.times[0] == 0.0
    assert traj.times[-1] == pytest.approx(0.1, rel=1e-10)
    assert not traj.aborted
    assert traj.final_dt == 1e-3


def test_trajectory_series_accessor():
    g = build_grid(1, (1.0,), (32,))
    s = random_state(g, 6)
    traj = simulate(s, params_for_initial(s.rho), SchemeConfig(dt=1e-3), 0.02,
                    energy_detail=True)
    E = traj.series("E")
    assert E.shape == (21,)
    assert np.all(np.isfinite(traj.series("D2")[1:]))


def test_sweep_distances_validation_and_shape():
    g = build_grid(1, (1.0,), (32,))
    s = random_state(g, 7, base=1.0, amp=0.3)
    p0 = params_for_initial(s.rho)
    zeta = 1.0 / s.rho.values.max()
    p1 = params_for_initial(s.rho, eps=0.5 * zeta)
    with pytest.raises(ValueError):
        sweep_distances(s, [p0], SchemeConfig(dt=1e-3), 0.05)
    with pytest.raises(ValueError):
        sweep_distances(s, [p0, p1], SchemeConfig(dt=1e-3, dt_adapt=True), 0.05)
    times, dists = sweep_distances(s, [p0, p1], SchemeConfig(dt=1e-3), 0.05,
                                   probe_every=5)
    assert dists.shape == (1, len(times))
    assert dists[0, 0] == 0.0  # shared initial data
    assert dists[0, -1] > 0.0  # eps changes the flow
