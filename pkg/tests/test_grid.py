import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chemorepel.grid import (Field, apply_laplacian, build_grid, cosine_series,
                             divergence_faces, from_cosine_modes,
                             gradient_faces, inner, integrate, lambda1,
                             laplacian_matrix, modal_eigenvalues, neumann_eigs,
                             random_cosine_field, to_cosine_modes)
from chemorepel.norms import grad_sq_integral


def test_build_grid_validation():
    with pytest.raises(ValueError):
        build_grid(4, (1.0,) * 4, (8,) * 4)
    with pytest.raises(ValueError):
        build_grid(1, (1.0,), (1,))
    with pytest.raises(ValueError):
        build_grid(2, (1.0, -1.0), (8, 8))
    with pytest.raises(ValueError):
        build_grid(3, (1.0,) * 3, (512,) * 3)  # 2^27 cells > cap


def test_lambda1_n4_frozen():
    # 32 (1 - cos(pi/4)) = 32 - 16 sqrt(2)
    g = build_grid(1, (1.0,), (4,))
    assert lambda1(g) == pytest.approx(9.372583002030478, abs=1e-13)
    assert lambda1(g) == pytest.approx(32.0 - 16.0 * np.sqrt(2.0), rel=1e-15)


def test_closed_form_matches_dense_oracle():
    g = build_grid(2, (1.0, 2.0), (5, 3))
    cf = neumann_eigs(g, 15, method="closed_form")
    dn = neumann_eigs(g, 15, method="dense")
    assert cf[0] == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(cf, dn, rtol=0, atol=1e-10)


def test_square_grid_lambda1_multiplicity_two():
    g = build_grid(2, (1.0, 1.0), (8, 8))
    lam = neumann_eigs(g, 3)
    assert lam[1] == pytest.approx(lam[2], rel=1e-14)
    assert lam[1] > 1e-10


def test_lambda1_second_order_in_h():
    # lam1(h) = pi^2 - pi^4 h^2 / 12 + O(h^4) on the unit interval
    errs = []
    for n in (32, 64, 128):
        g = build_grid(1, (1.0,), (n,))
        errs.append(np.pi ** 2 - lambda1(g))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.02)
    assert errs[2] == pytest.approx(np.pi ** 4 / 12.0 / 128 ** 2, rel=0.01)


def test_anisotropic_lambda1_uses_long_axis():
    g = build_grid(2, (2.0, 1.0), (32, 32))
    g1 = build_grid(1, (2.0,), (32,))
    assert lambda1(g) == pytest.approx(lambda1(g1), rel=1e-14)


def test_mode_transform_roundtrip_and_diagonalization():
    g = build_grid(2, (1.0, 1.5), (16, 12))
    rng = np.random.default_rng(3)
    vals = rng.standard_normal(g.shape)
    back = from_cosine_modes(g, to_cosine_modes(g, vals))
    np.testing.assert_allclose(back, vals, atol=1e-13)
    # -lap acts diagonally on DCT-II coefficients
    f = Field(g, vals)
    lhs = to_cosine_modes(g, -apply_laplacian(g, f).values)
    rhs = np.asarray(modal_eigenvalues(g)) * to_cosine_modes(g, vals)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_cosine_series_is_discrete_eigenfunction():
    g = build_grid(1, (1.0,), (32,))
    coef = np.zeros(4)
    coef[3] = 1.0
    f = Field(g, cosine_series(g, coef))
    lam = (2.0 / g.spacing[0] ** 2) * (1.0 - np.cos(3 * np.pi / 32))
    np.testing.assert_allclose(-apply_laplacian(g, f).values, lam * f.values,
                               atol=1e-10)


def test_gradient_divergence_adjointness():
    # sum_cells f div(F) vol = -sum_faces F (df across face) h_perp for zero
    # boundary flux; checked through the assembled matrix symmetry instead
    g = build_grid(2, (1.0, 1.0), (6, 7))
    A = laplacian_matrix(g).toarray()
    np.testing.assert_allclose(A, A.T, atol=1e-12)


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=25, deadline=None)
def test_laplacian_integrates_to_zero(seed):
    g = build_grid(2, (1.0, 1.0), (12, 10))
    rng = np.random.default_rng(seed)
    f = Field(g, rng.standard_normal(g.shape))
    assert abs(integrate(g, apply_laplacian(g, f))) < 1e-12


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=25, deadline=None)
def test_laplacian_self_adjoint(seed):
    g = build_grid(2, (1.0, 2.0), (9, 8))
    rng = np.random.default_rng(seed)
    f = Field(g, rng.standard_normal(g.shape))
    w = Field(g, rng.standard_normal(g.shape))
    assert inner(g, apply_laplacian(g, f), w) == pytest.approx(
        inner(g, f, apply_laplacian(g, w)), abs=1e-9)


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=25, deadline=None)
def test_seminorm_equals_modal_sum(seed):
    # int |grad f|^2 (face form) = sum_m lam(m) fhat(m)^2 vol
    g = build_grid(2, (1.0, 1.0), (16, 16))
    rng = np.random.default_rng(seed)
    f = Field(g, rng.standard_normal(g.shape))
    fh = to_cosine_modes(g, f.values)
    modal = float(np.sum(np.asarray(modal_eigenvalues(g)) * fh ** 2)) \
        * g.cell_volume
    assert grad_sq_integral(f) == pytest.approx(modal, rel=1e-10, abs=1e-12)


def test_divergence_of_gradient_is_laplacian():
    g = build_grid(3, (1.0, 1.0, 1.0), (6, 5, 4))
    rng = np.random.default_rng(0)
    f = Field(g, rng.standard_normal(g.shape))
    lap = divergence_faces(g, gradient_faces(g, f))
    np.testing.assert_allclose(lap, apply_laplacian(g, f).values, atol=1e-12)


def test_random_cosine_field_mean_zero_and_sup():
    g = build_grid(2, (1.0, 1.0), (32, 32))
    rng = np.random.default_rng(5)
    v = random_cosine_field(g, rng, 3, 0.25)
    assert abs(np.mean(v)) < 1e-13
    assert np.abs(v).max() == pytest.approx(0.25, rel=1e-12)
