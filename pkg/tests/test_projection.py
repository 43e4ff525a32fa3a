"""Element projector matrices: reproduction, orthogonality, normalization."""

import numpy as np
import pytest

from vemflow.polybasis import polygon_quadrature
from conftest import sample_kernels, unit_square_kernel


def scalar_dofs_of(k, f):
    """Temperature DOF vector of a closure (point values + cell average)."""
    out = np.empty(k.n_dofs_T)
    pts = np.vstack([k.verts, 0.5 * (k.verts + np.roll(k.verts, -1, axis=0))])
    out[: 2 * k.nv] = f(pts[:, 0], pts[:, 1])
    rule = polygon_quadrature(k.verts, k.centroid, 8)
    out[2 * k.nv] = rule.weights @ f(rule.points[:, 0], rule.points[:, 1]) / k.area
    return out


def velocity_dofs_of(k, fx, fy, div=None):
    """Velocity DOF vector (point values + scaled divergence moments)."""
    out = np.zeros(k.n_dofs_V)
    pts = np.vstack([k.verts, 0.5 * (k.verts + np.roll(k.verts, -1, axis=0))])
    sx, sy, sd = k.vdof_slices()
    out[sx] = fx(pts[:, 0], pts[:, 1])
    out[sy] = fy(pts[:, 0], pts[:, 1])
    if div is not None:
        rule = polygon_quadrature(k.verts, k.centroid, 8)
        d = div(rule.points[:, 0], rule.points[:, 1])
        m1 = (rule.points - k.centroid) / k.h
        out[sd] = (k.h / k.area) * np.array(
            [rule.weights @ (d * m1[:, 0]), rule.weights @ (d * m1[:, 1])]
        )
    return out


KERNELS_200 = sample_kernels(200, seed=11)


@pytest.mark.parametrize("a", range(6))
def test_scalar_projectors_reproduce_quadratics(a):
    """Every degree-<=2 monomial passes through PiN_T and Pi0_T unchanged."""
    for k in KERNELS_200:
        want = np.zeros(6)
        want[a] = 1.0
        dofs = k.D_T[:, a]
        assert np.allclose(k.PiN_T @ dofs, want, atol=1e-11)
        assert np.allclose(k.Pi0_T @ dofs, want, atol=1e-11)


def test_vector_projectors_reproduce_quadratics():
    """Each monomial in either component is reproduced by PiN_V and Pi0_V."""
    for k in KERNELS_200[:40]:
        for a in range(12):
            dofs = k.D_V[:, a]
            want = np.zeros(12)
            want[a] = 1.0
            assert np.allclose(k.PiN_V @ dofs, want, atol=1e-11)
            assert np.allclose(k.Pi0_V @ dofs, want, atol=1e-11)


def test_divergence_reconstruction_exact_on_polynomials():
    for k in KERNELS_200[:40]:
        h = k.h
        cx, cy = k.centroid

        def fx(x, y):
            return x**2 - 2 * x * y

        def fy(x, y):
            return y**2 + 3 * x

        def dv(x, y):
            return 2 * x - 2 * y + 2 * y

        dofs = velocity_dofs_of(k, fx, fy, div=dv)
        d = k.div_V @ dofs  # degree-1 coefficients over the scaled basis
        # div = 2x: constant term 2*cx, slopes (2h, 0) in scaled variables
        assert np.allclose(d, [2 * cx, 2 * h, 0.0], atol=1e-10 * max(1, 1 / h))


def test_rigid_rotation_gradient():
    """v = (-y, x): zero divergence, constant skew gradient."""
    for k in KERNELS_200[:40]:
        dofs = velocity_dofs_of(k, lambda x, y: -y, lambda x, y: x)
        assert np.allclose(k.div_V @ dofs, 0.0, atol=1e-11)
        xi = np.array([(k.Xi[c] @ dofs)[0] for c in range(4)])
        assert np.allclose(xi, [0.0, -1.0, 1.0, 0.0], atol=1e-11)
        for c in range(4):
            assert np.allclose((k.Xi[c] @ dofs)[1:], 0.0, atol=1e-11)


def test_l2_orthogonality_scalar():
    """(q, v - Pi0 v) = 0 for q in P2, checked by quadrature.

    For polynomial data the residual is testable pointwise; for arbitrary
    DOF vectors the one independently known moment is the cell average DOF,
    which the projection must preserve.
    """
    rng = np.random.default_rng(5)
    for k in KERNELS_200[:50]:
        rule = k.rule
        vals2 = k.basis2.eval(rule.points)
        coeff = rng.standard_normal(6)
        dofs = k.D_T @ coeff  # DOFs of a known quadratic
        proj = k.Pi0_T @ dofs
        v = vals2 @ coeff
        pv = vals2 @ proj
        scale = np.abs(v).max() + 1.0
        for b in range(6):
            q = vals2[:, b]
            assert abs(rule.weights @ (q * (v - pv))) <= 1e-10 * scale
        # arbitrary virtual function: mean of the projection = mean DOF
        dofs = rng.standard_normal(k.n_dofs_T)
        proj = k.Pi0_T @ dofs
        mean = (rule.weights @ (vals2 @ proj)) / k.area
        assert mean == pytest.approx(dofs[2 * k.nv], abs=1e-10)


def test_gradient_projection_orthogonality():
    """(Q, grad v - Xi v) = 0 for matrix polys Q when v is quadratic."""
    rng = np.random.default_rng(6)
    for k in KERNELS_200[:30]:
        rule = k.rule
        vals1 = k.basis1.eval(rule.points)
        gx2, gy2 = k.basis2.grad_matrices()
        vals2 = k.basis2.eval(rule.points)
        coeffs = rng.standard_normal(12)
        dofs = k.D_V @ coeffs
        grads = [
            vals2 @ (gx2 @ coeffs[:6]),
            vals2 @ (gy2 @ coeffs[:6]),
            vals2 @ (gx2 @ coeffs[6:]),
            vals2 @ (gy2 @ coeffs[6:]),
        ]
        for _ in range(5):
            Q = rng.standard_normal((4, 3))
            resid = 0.0
            for c in range(4):
                xi = vals1 @ (k.Xi[c] @ dofs)
                resid += rule.weights @ ((vals1 @ Q[c]) * (grads[c] - xi))
            assert abs(resid) <= 1e-11 * (np.abs(coeffs).max() + 1.0)


def test_h1_projector_boundary_mean_normalization():
    """The H1 projection preserves the boundary mean of the trace.

    The trace of a virtual function is the edgewise quadratic through the
    endpoint and midpoint values, so its boundary integral is Simpson-exact
    and computable for any DOF vector.
    """
    from vemflow.polybasis import edge_quadrature

    rng = np.random.default_rng(7)
    for k in KERNELS_200[:50]:
        edges = np.roll(k.verts, -1, axis=0) - k.verts
        lengths = np.linalg.norm(edges, axis=1)
        perimeter = lengths.sum()

        def trace_integral(point_vals):
            # Simpson on each edge: endpoints + midpoint
            out = 0.0
            for e in range(k.nv):
                f0 = point_vals[e]
                f1 = point_vals[(e + 1) % k.nv]
                fm = point_vals[k.nv + e]
                out += lengths[e] * (f0 + 4.0 * fm + f1) / 6.0
            return out

        dofs = rng.standard_normal(k.n_dofs_T)
        proj = k.PiN_T @ dofs
        bi_p = 0.0
        for e in range(k.nv):
            rule = edge_quadrature(k.verts[e], k.verts[(e + 1) % k.nv], 3)
            bi_p += rule.weights @ (k.basis2.eval(rule.points) @ proj)
        assert abs(trace_integral(dofs) - bi_p) <= 1e-11 * perimeter * (
            np.abs(dofs).max() + 1.0
        )

        # same normalization componentwise for the velocity projector
        vdofs = rng.standard_normal(k.n_dofs_V)
        sx, sy, _ = k.vdof_slices()
        projv = k.PiN_V @ vdofs
        for comp, sl in ((0, sx), (1, sy)):
            bi_p = 0.0
            coeffs = projv[6 * comp : 6 * comp + 6]
            for e in range(k.nv):
                rule = edge_quadrature(k.verts[e], k.verts[(e + 1) % k.nv], 3)
                bi_p += rule.weights @ (k.basis2.eval(rule.points) @ coeffs)
            assert abs(trace_integral(vdofs[sl]) - bi_p) <= 1e-11 * perimeter * (
                np.abs(vdofs).max() + 1.0
            )


def test_stabilization_matrices_spsd():
    for k in KERNELS_200[:50]:
        for S in (k.stab_T, k.stab_V):
            assert np.allclose(S, S.T, atol=1e-12)
            assert np.linalg.eigvalsh(S).min() >= -1e-12


def test_stabilization_vanishes_on_polynomials():
    k = unit_square_kernel()
    for a in range(6):
        assert np.allclose(k.stab_T @ k.D_T[:, a], 0.0, atol=1e-12)
    for a in range(12):
        assert np.allclose(k.stab_V @ k.D_V[:, a], 0.0, atol=1e-12)
