import numpy as np
import pytest

from chemorepel.dynamics import (SchemeConfig, State, params_for_initial,
                                 simulate)
from chemorepel.energy import (audit_energy_identity, boundary_term,
                               default_kappa0, dissipation,
                               dissipation_time_integral, energy,
                               exp_weighted_dissipation, normal_flux_of_gradsq,
                               report)
from chemorepel.grid import Field, build_grid, lambda1, random_cosine_field


def const_state(g, rho_val, c_val):
    return State(Field(g, np.full(g.shape, float(rho_val))),
                 Field(g, np.full(g.shape, float(c_val))), 0.0)


def small_run(t_end=0.05, dt=1e-3, seed=9):
    g = build_grid(2, (1.0, 1.0), (24, 24))
    rng = np.random.default_rng(seed)
    rho = Field(g, 1.0 + 0.2 * random_cosine_field(g, rng, 2, 1.0))
    c = Field(g, 1.1 + 0.2 * random_cosine_field(g, rng, 2, 1.0))
    s = State(rho, c, 0.0)
    return simulate(s, params_for_initial(s.rho), SchemeConfig(dt=dt), t_end)


def test_energy_constant_states():
    g = build_grid(2, (1.0, 1.0), (8, 8))
    # rho = c = 1: both entropies and the gradient term vanish
    assert energy(const_state(g, 1.0, 1.0), 0.0) == pytest.approx(0.0, abs=1e-14)
    # rho = 2, eps = 1/4: 2 log 2 + 4 (1/2) log(1/2) = 0 exactly
    assert energy(const_state(g, 2.0, 1.0), 0.25) == pytest.approx(0.0, abs=1e-13)
    # eps = 0 drops the volume-filling entropy
    assert energy(const_state(g, 2.0, 1.0), 0.0) == pytest.approx(
        2.0 * np.log(2.0), rel=1e-13)


def test_energy_entropy_extension_at_zero():
    g = build_grid(1, (1.0,), (8,))
    rho = np.linspace(0.0, 1.0, 8)  # a genuine zero cell
    s = State(Field(g, rho), Field(g, np.ones(8)), 0.0)
    assert np.isfinite(energy(s, 0.0))
    # cap cell rho = 1/eps is the mirror-image extension
    s2 = const_state(g, 2.0, 1.0)
    assert np.isfinite(energy(s2, 0.5))


def test_energy_validation():
    g = build_grid(1, (1.0,), (8,))
    with pytest.raises(ValueError):
        energy(const_state(g, -1.0, 1.0), 0.0)
    with pytest.raises(ValueError):
        energy(const_state(g, 1.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        energy(const_state(g, 3.0, 1.0), 0.5)  # rho > 1/eps


def test_energy_eps_expansion():
    # E_eps = E_0 - mass + (eps/2) int rho^2 + O(eps^2)
    g = build_grid(1, (1.0,), (64,))
    rng = np.random.default_rng(4)
    rho = Field(g, 1.0 + 0.3 * random_cosine_field(g, rng, 3, 1.0))
    s = State(rho, Field(g, np.ones(g.shape)), 0.0)
    mass = rho.values.mean()
    half_l2 = 0.5 * (rho.values ** 2).mean()
    e0 = energy(s, 0.0)
    for eps in (1e-2, 1e-3, 1e-4):
        lead = (energy(s, eps) - e0 + mass) / eps
        assert lead == pytest.approx(half_l2, rel=30.0 * eps)


def test_dissipation_signs_and_frozen_profile():
    # rho = 1, c = e^x: D2 = 0 (log c affine), D3 ~ 1/2, D4 ~ (e-1)/2
    g = build_grid(1, (1.0,), (128,))
    x = g.cell_centers(0)
    s = State(Field(g, np.ones(g.shape)), Field(g, np.exp(x)), 0.0)
    D1, D2, D3, D4 = dissipation(s, 0.0)
    assert D1 == pytest.approx(0.0, abs=1e-14)
    assert D2 == pytest.approx(0.0, abs=1e-12)
    assert D3 == pytest.approx(0.5, rel=1e-3)
    assert D4 == pytest.approx((np.e - 1.0) / 2.0, rel=1e-3)


def test_dissipation_d1_infinite_when_mobility_degenerates():
    # the zero cell must carry a nonzero central gradient, so approach it
    # monotonically rather than as an isolated dip
    g = build_grid(1, (1.0,), (16,))
    rho = np.concatenate([[2.0, 1.0], np.zeros(14)])
    s = State(Field(g, rho), Field(g, np.ones(16)), 0.0)
    assert dissipation(s, 0.0)[0] == np.inf
    # at the volume-filling cap the same happens through 1 - eps rho
    rho2 = np.concatenate([[1.0, 1.5], np.full(14, 2.0)])
    s2 = State(Field(g, rho2), Field(g, np.ones(16)), 0.0)
    assert dissipation(s2, 0.5)[0] == np.inf


def test_dissipation_d1_zero_over_zero_limit():
    g = build_grid(1, (1.0,), (16,))
    s = State(Field(g, np.zeros(16)), Field(g, np.ones(16)), 0.0)
    assert dissipation(s, 0.0)[0] == 0.0


def test_normal_flux_quadratic_oracle():
    # phi = 1 + x^2: every stencil involved is exact, so the flux reduces to
    # 4 / phi(last cell) with phi evaluated half a cell in from the wall
    g = build_grid(1, (1.0,), (64,))
    h = g.spacing[0]
    x = g.cell_centers(0)
    B = normal_flux_of_gradsq(g, 1.0 + x ** 2)
    assert B == pytest.approx(4.0 / (2.0 - h + h * h / 4.0), rel=1e-12)
    assert B == pytest.approx(2.0, abs=2.2 * h)


def test_normal_flux_vanishes_on_even_profiles():
    # cos(pi x) meets the wall with zero slope in |grad phi|^2's derivative
    # only to O(h); the one-sided stencils see O(h^2) cell noise divided by h
    g = build_grid(1, (1.0,), (256,))
    x = g.cell_centers(0)
    B = normal_flux_of_gradsq(g, 2.0 + 0.1 * np.cos(np.pi * x))
    assert abs(B) < 1e-4


def test_boundary_term_validates_positivity():
    g = build_grid(1, (1.0,), (16,))
    with pytest.raises(ValueError):
        boundary_term(const_state(g, 1.0, 0.0))


def test_report_bundles_fields():
    g = build_grid(1, (1.0,), (32,))
    s = const_state(g, 1.0, 1.0)
    r = report(s, 0.0)
    assert r.E == pytest.approx(0.0, abs=1e-14)
    assert (r.D1, r.D2, r.D3, r.D4) == (0.0, 0.0, 0.0, 0.0)
    assert r.B == 0.0


def test_audit_requires_unit_constants():
    traj = small_run(t_end=0.01)
    traj.params.chi = 2.0
    with pytest.raises(ValueError, match="unchecked"):
        audit_energy_identity(traj)
    traj.params.chi = 1.0
    traj.params.gamma = 2.0
    with pytest.raises(ValueError, match="unchecked"):
        audit_energy_identity(traj)


def test_audit_requires_detail_and_uniform_probes():
    g = build_grid(1, (1.0,), (32,))
    rng = np.random.default_rng(2)
    rho = Field(g, 1.0 + 0.2 * random_cosine_field(g, rng, 2, 1.0))
    s = State(rho, Field(g, np.ones(g.shape)), 0.0)
    traj = simulate(s, params_for_initial(s.rho), SchemeConfig(dt=1e-3), 0.02,
                    energy_detail=False)
    with pytest.raises(ValueError, match="detail"):
        audit_energy_identity(traj)


def test_audit_on_decaying_run():
    traj = small_run()
    res = audit_energy_identity(traj)
    assert res.monotone
    assert res.max_scaled_increment <= 1e-8
    # centered dE/dt vs midpoint dissipation: largest through the initial
    # fast transient, then decays with the state
    assert res.max_residual < 0.2
    late = np.nanmax(np.abs(res.residuals[20:]))
    assert late < 0.3 * res.max_residual
    assert np.isnan(traj.records[0].residual)
    assert np.isfinite(traj.records[1].residual)


def test_default_kappa0():
    g = build_grid(2, (1.0, 1.0), (64, 64))
    assert default_kappa0(g) == 0.5  # lambda1 ~ 9.87 > 1
    g2 = build_grid(1, (10.0,), (32,))
    assert default_kappa0(g2) == pytest.approx(0.5 * lambda1(g2), rel=1e-14)
    assert default_kappa0(g2) < 0.5


def test_exp_weighted_matches_quadratic_oracle():
    traj = small_run(t_end=0.03)
    kappa0 = 0.37
    got = exp_weighted_dissipation(traj, kappa0)
    ts = traj.times
    w = (traj.series("D1") + traj.series("D2") + 2 * traj.series("D3")
         + 2 * traj.series("D4"))
    sup = 0.0
    for j in range(1, len(ts)):
        acc = 0.0
        for i in range(1, j + 1):
            dt = ts[i] - ts[i - 1]
            fa = np.exp(-kappa0 * (ts[j] - ts[i - 1])) * w[i - 1]
            fb = np.exp(-kappa0 * (ts[j] - ts[i])) * w[i]
            acc += 0.5 * dt * (fa + fb)
        sup = max(sup, acc)
    assert got == pytest.approx(sup, rel=1e-11)


def test_dissipation_integral_levels_off():
    traj = small_run(t_end=1.0, dt=2e-3)
    ts, I = dissipation_time_integral(traj)
    assert np.all(np.diff(I) >= -1e-15)
    n = len(ts)
    first_half = I[n // 2] - I[0]
    second_half = I[-1] - I[n // 2]
    assert second_half < 0.05 * first_half
