"""Local form matrices: kernels, exactness, skew-symmetry, definiteness."""

import numpy as np
import pytest

from vemflow.forms import (
    CoefficientModel,
    local_a_h,
    local_b,
    local_c_F,
    local_c_N_skew,
    local_d_h,
    local_frak_a_h,
    local_frak_c_skew,
    local_rhs_temperature,
    local_rhs_velocity,
    pressure_mean_vector,
)
from vemflow.polybasis import polygon_quadrature
from conftest import sample_kernels, unit_square_kernel

from test_projection import scalar_dofs_of, velocity_dofs_of

UNIT_COEFFS = CoefficientModel(
    nu=lambda t: np.ones_like(np.asarray(t, dtype=float)),
    kappa=lambda t: np.ones_like(np.asarray(t, dtype=float)),
    r=3.0,
)

KERNELS = sample_kernels(40, seed=21)


def test_coefficient_model_validates_exponent():
    ok = lambda t: np.ones_like(np.asarray(t, dtype=float))
    for bad in (2.5, 4.5):
        with pytest.raises(ValueError):
            CoefficientModel(nu=ok, kappa=ok, r=bad)
    CoefficientModel(nu=ok, kappa=ok, r=3.5)  # boundary-inclusive


def test_a_h_vanishes_on_translations():
    for k in KERNELS[:10]:
        T0 = np.zeros(k.n_dofs_T)
        A = local_a_h(k, T0, UNIT_COEFFS)
        v = velocity_dofs_of(k, lambda x, y: 1.0 + 0 * x, lambda x, y: 2.0 + 0 * x)
        assert np.allclose(A @ v, 0.0, atol=1e-12)


def test_a_h_polynomial_exactness():
    """For v = w = m_(1,0) e1, a_h equals int |grad v|^2 = |E|/h^2."""
    k = unit_square_kernel()
    A = local_a_h(k, np.zeros(k.n_dofs_T), UNIT_COEFFS)
    h, c = k.h, k.centroid

    def fx(x, y):
        return (x - c[0]) / h

    v = velocity_dofs_of(k, fx, lambda x, y: 0.0 * x)
    assert v @ A @ v == pytest.approx(k.area / h**2, rel=1e-12)


def test_a_h_spsd_with_variable_viscosity():
    rng = np.random.default_rng(0)
    nu = CoefficientModel(nu=lambda t: 1.0 + t**2, kappa=lambda t: 1.0 + 0 * t, r=3.0)
    for k in KERNELS[:10]:
        T = rng.standard_normal(k.n_dofs_T)
        A = local_a_h(k, T, nu)
        assert np.allclose(A, A.T, atol=1e-12)
        w = np.linalg.eigvalsh(A)
        assert w.min() >= -1e-10 * abs(w.max())


def test_frak_a_h_polynomial_exactness():
    k = unit_square_kernel()
    A = local_frak_a_h(k, np.zeros(k.n_dofs_T), UNIT_COEFFS)
    h, c = k.h, k.centroid
    q = scalar_dofs_of(k, lambda x, y: ((x - c[0]) / h) ** 2)
    # grad = (2(x-cx)/h^2, 0): integral over the unit square
    rule = polygon_quadrature(k.verts, k.centroid, 6)
    want = rule.weights @ (2 * (rule.points[:, 0] - c[0]) / h**2) ** 2
    assert q @ A @ q == pytest.approx(want, rel=1e-12)
    const = scalar_dofs_of(k, lambda x, y: 1.0 + 0 * x)
    assert np.allclose(A @ const, 0.0, atol=1e-12)


def test_skew_forms_are_skew():
    rng = np.random.default_rng(1)
    for k in KERNELS[:15]:
        z = rng.standard_normal(k.n_dofs_V)
        C = local_c_N_skew(k, z)
        assert np.linalg.norm(C + C.T) <= 1e-12 * max(np.linalg.norm(C), 1e-30)
        for _ in range(3):
            v = rng.standard_normal(k.n_dofs_V)
            quad = v @ C @ v
            assert abs(quad) <= 1e-12 * np.linalg.norm(C) * (v @ v)
        u = rng.standard_normal(k.n_dofs_V)
        Ct = local_frak_c_skew(k, u)
        assert np.linalg.norm(Ct + Ct.T) <= 1e-12 * max(np.linalg.norm(Ct), 1e-30)


def test_convection_zero_for_zero_advection():
    for k in KERNELS[:5]:
        assert np.allclose(local_c_N_skew(k, np.zeros(k.n_dofs_V)), 0.0)
        assert np.allclose(local_frak_c_skew(k, np.zeros(k.n_dofs_V)), 0.0)


def test_c_N_skew_matches_dense_quadrature_on_polynomials():
    """Polynomial z, v, w: the matrix reproduces 0.5(c(z;v,w) - c(z;w,v))."""
    k = unit_square_kernel()
    z = velocity_dofs_of(k, lambda x, y: y * x, lambda x, y: -(y**2) / 2,
                         div=lambda x, y: 0.0 * x)
    C = local_c_N_skew(k, z)
    v = velocity_dofs_of(k, lambda x, y: -y, lambda x, y: x)
    w = velocity_dofs_of(k, lambda x, y: x**2 - y**2, lambda x, y: -2 * x * y,
                         div=lambda x, y: 0.0 * x)
    rule = polygon_quadrature(k.verts, k.centroid, 10)
    x, y = rule.points[:, 0], rule.points[:, 1]
    zv = np.array([y * x, -(y**2) / 2])
    vv = np.array([-y, x])
    gv = np.array([[0 * x, -1 + 0 * x], [1 + 0 * x, 0 * x]])
    wv = np.array([x**2 - y**2, -2 * x * y])
    gw = np.array([[2 * x, -2 * y], [-2 * y, -2 * x]])

    def conv(gA, B, C_):
        # int [gA z] . C with gA the gradient of A
        out = 0.0
        for i in range(2):
            out += rule.weights @ (
                (gA[i][0] * zv[0] + gA[i][1] * zv[1]) * C_[i]
            )
        return out

    want = 0.5 * (conv(gw, zv, vv) - conv(gv, zv, wv))
    assert v @ C @ w == pytest.approx(want, rel=1e-11)


def test_c_F_constant_weight_is_scaled_mass():
    """r = 4 and constant z: weight |z|^2 is constant, matrix = |z|^2 d_h."""
    for k in KERNELS[:5]:
        z = velocity_dofs_of(k, lambda x, y: 3.0 + 0 * x, lambda x, y: 4.0 + 0 * x)
        M = local_c_F(k, z, 4.0)
        D = local_d_h(k)
        assert np.allclose(M, 25.0 * D, atol=1e-10 * np.abs(M).max())
        assert np.allclose(local_c_F(k, np.zeros(k.n_dofs_V), 3.0), 0.0)


def test_c_F_matches_refined_quadrature():
    """r = 3, polynomial z with polynomial magnitude: refined-rule oracle.

    z = x^2 (0.6, 0.8) has |z| = x^2 exactly, so the nonlinear weight stays
    polynomial and the dense rule is a genuine independent oracle.
    """
    k = unit_square_kernel()
    z = velocity_dofs_of(k, lambda x, y: 0.6 * x**2, lambda x, y: 0.8 * x**2,
                         div=lambda x, y: 1.2 * x)
    M = local_c_F(k, z, 3.0)
    v = velocity_dofs_of(k, lambda x, y: -y, lambda x, y: x)
    w = velocity_dofs_of(k, lambda x, y: x, lambda x, y: -y,
                         div=lambda x, y: 0.0 * x)
    fine = polygon_quadrature(k.verts, k.centroid, 24)
    x, y = fine.points[:, 0], fine.points[:, 1]
    want = fine.weights @ (x**2 * ((-y) * x + x * (-y)))
    assert v @ M @ w == pytest.approx(want, rel=1e-9)


def test_d_h_and_c_F_spsd():
    rng = np.random.default_rng(2)
    for k in KERNELS[:15]:
        D = local_d_h(k)
        assert np.allclose(D, D.T, atol=1e-13)
        assert np.linalg.eigvalsh(D).min() >= -1e-11 * np.abs(D).max()
        z = rng.standard_normal(k.n_dofs_V)
        M = local_c_F(k, z, 3.5)
        assert np.allclose(M, M.T, atol=1e-12 * max(np.abs(M).max(), 1.0))
        assert np.linalg.eigvalsh(M).min() >= -1e-11 * np.abs(M).max()


def test_d_h_constant_fields():
    for k in KERNELS[:5]:
        v = velocity_dofs_of(k, lambda x, y: 2.0 + 0 * x, lambda x, y: -1.0 + 0 * x)
        w = velocity_dofs_of(k, lambda x, y: 0.5 + 0 * x, lambda x, y: 3.0 + 0 * x)
        D = local_d_h(k)
        assert v @ D @ w == pytest.approx(k.area * (2 * 0.5 + (-1) * 3), rel=1e-11)


def test_b_matrix_exact():
    for k in KERNELS[:10]:
        B = local_b(k)
        # divergence-free polynomial: zero column
        v = velocity_dofs_of(k, lambda x, y: -y, lambda x, y: x)
        assert np.allclose(B @ v, 0.0, atol=1e-11)
        # v = (x, 0): b(v, m_0) = -|E|
        v = velocity_dofs_of(k, lambda x, y: x, lambda x, y: 0.0 * x,
                             div=lambda x, y: 1.0 + 0 * x)
        assert (B @ v)[0] == pytest.approx(-k.area, rel=1e-11)


def test_rhs_vectors():
    for k in KERNELS[:5]:
        zf = local_rhs_velocity(k, lambda x, y: (0.0 * x, 0.0 * x))
        assert np.allclose(zf, 0.0)
        # constant source pairs with the mean of the projected basis
        f = local_rhs_velocity(k, lambda x, y: (1.0 + 0 * x, 0.0 * x))
        v = velocity_dofs_of(k, lambda x, y: 1.0 + 0 * x, lambda x, y: 0.0 * x)
        assert f @ v == pytest.approx(k.area, rel=1e-12)
        g = local_rhs_temperature(k, lambda x, y: 2.0 + 0 * x)
        s = scalar_dofs_of(k, lambda x, y: 1.0 + 0 * x)
        assert g @ s == pytest.approx(2.0 * k.area, rel=1e-12)


def test_pressure_mean_vector():
    for k in KERNELS[:5]:
        m = pressure_mean_vector(k)
        assert m[0] == pytest.approx(k.area, rel=1e-12)
