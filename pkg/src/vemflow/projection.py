"""Element-local projector matrices for the order-2 scheme.

Everything here is a dense matrix acting on local DOF vectors:

scalar space (temperature), local DOFs
    [values at vertices | values at edge midpoints | cell average]
vector space (velocity), local DOFs
    [x at vertices | x at midpoints | y at vertices | y at midpoints |
     two scaled divergence moments]

The projectors are computed exactly (up to round-off) from the DOFs alone:
boundary integrals use the quadratic edge traces that the vertex + midpoint
values determine, interior moments come from the moment DOFs, and every
other volume term is reduced to those by integration by parts.
"""

from __future__ import annotations

import warnings

import numpy as np
from numpy.linalg import solve

from .polybasis import (
    ScaledMonomialBasis,
    edge_quadrature,
    poly_mass_matrix,
    polygon_quadrature,
)

K = 2  # polynomial order of the scheme; the DOF layout below is k=2 only
ASSEMBLY_DEGREE = 2 * K + 2  # polygon-rule exactness used for all forms
COND_WARN = 1e12

# graded-lex positions used throughout (degree-3 basis):
# 0:(0,0) 1:(1,0) 2:(0,1) 3:(2,0) 4:(1,1) 5:(0,2) 6..9: degree 3


class ElementKernel:
    """All per-element projector matrices and cached quadrature data.

    Pure function of the element geometry; built once per mesh and reused
    across Picard iterations.
    """

    def __init__(self, verts: np.ndarray, area: float, centroid, diameter: float):
        self.verts = np.asarray(verts, dtype=float)
        self.nv = len(self.verts)
        self.area = float(area)
        self.centroid = np.asarray(centroid, dtype=float)
        self.h = float(diameter)

        self.n_dofs_T = 2 * self.nv + 1
        self.n_dofs_V = 4 * self.nv + 2

        self.basis3 = ScaledMonomialBasis(self.centroid, self.h, 3)
        self.basis2 = self.basis3.subbasis(2)
        self.basis1 = self.basis3.subbasis(1)
        self.rule = polygon_quadrature(self.verts, self.centroid, ASSEMBLY_DEGREE)
        self.H3 = poly_mass_matrix(self.basis3, self.rule)
        self.H2 = self.H3[:6, :6]
        self.H1 = self.H3[:3, :3]

        self._edge_geometry()
        self._boundary_matrices()
        self._scalar_projectors()
        self._vector_projectors()
        self._quad_caches()

    # -- geometry -----------------------------------------------------------

    def _edge_geometry(self):
        v = self.verts
        nxt = np.roll(v, -1, axis=0)
        self.edge_len = np.linalg.norm(nxt - v, axis=1)
        tang = (nxt - v) / self.edge_len[:, None]
        self.edge_normal = np.column_stack([tang[:, 1], -tang[:, 0]])
        self.edge_mid = 0.5 * (v + nxt)
        self.perimeter = float(self.edge_len.sum())

    # -- boundary trace integrals --------------------------------------------

    def _boundary_matrices(self):
        """Mb[a, j] = integral over the element boundary of (trace of the
        j-th scalar point DOF's shape) times m_a, for m_a up to degree 3;
        Mbn[i] is the same weighted by the i-th normal component.

        Columns cover the 2*nv point DOFs (vertices then midpoints); the
        interior-moment column is zero.  Quadratic Lagrange traces times a
        cubic monomial need a degree-5 edge rule; 4 Gauss points give 7.
        """
        nb = 2 * self.nv
        dim3 = self.basis3.dim
        Mb = np.zeros((dim3, nb))
        Mbn = [np.zeros((dim3, nb)), np.zeros((dim3, nb))]
        for e in range(self.nv):
            a_id, b_id = e, (e + 1) % self.nv
            rule = edge_quadrature(self.verts[a_id], self.verts[b_id], 4)
            t = np.linalg.norm(rule.points - self.verts[a_id], axis=1) / self.edge_len[e]
            lag = np.column_stack(
                [(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)]
            )
            mvals = self.basis3.eval(rule.points)  # (nq, dim3)
            cols = [a_id, b_id, self.nv + e]
            block = mvals.T @ (rule.weights[:, None] * lag)  # (dim3, 3)
            for loc, col in enumerate(cols):
                Mb[:, col] += block[:, loc]
                Mbn[0][:, col] += block[:, loc] * self.edge_normal[e, 0]
                Mbn[1][:, col] += block[:, loc] * self.edge_normal[e, 1]
        self.Mb = Mb
        self.Mbn = Mbn

    def _point_dof_coords(self):
        return np.vstack([self.verts, self.edge_mid])

    # -- scalar space ---------------------------------------------------------

    def _scalar_projectors(self):
        nT = self.n_dofs_T
        gx2, gy2 = self.basis2.grad_matrices()
        G = gx2.T @ self.H2 @ gx2 + gy2.T @ self.H2 @ gy2
        # boundary-mean row fixes the constant mode
        G[0, :] = self._boundary_integral_of_monomials()

        B = np.zeros((6, nT))
        B[0, : 2 * self.nv] = self.Mb[0, :]  # integral of the trace
        for a in range(1, 6):
            # grad(m_a) . n paired with the trace, minus Laplacian volume term
            ga = np.array([gx2[:, a], gy2[:, a]])  # coeffs of the two derivs
            B[a, : 2 * self.nv] = (
                ga[0, :3] @ self.Mbn[0][:3, :] + ga[1, :3] @ self.Mbn[1][:3, :]
            )
            lap = self._laplacian_constant(a)
            if lap != 0.0:
                B[a, 2 * self.nv] -= lap * self.area  # cell average DOF
        self._check_cond(G, "scalar H1 projector")
        self.PiN_T = solve(G, B)  # (6, nT): coefficients of the H1 projection

        # L2 projection onto P2: the degree-0 moment is a DOF, the rest comes
        # from the enhancement constraint (moments match the H1 projection)
        C = self.H2 @ self.PiN_T
        C[0, :] = 0.0
        C[0, 2 * self.nv] = self.area
        self.Pi0_T = solve(self.H2, C)

        # L2 projection of the gradient onto [P1]^2, by parts
        self.Pi0grad_T = np.zeros((2, 3, nT))
        for i in range(2):
            rhs = np.zeros((3, nT))
            for b in range(3):  # m_b in M1
                rhs[b, : 2 * self.nv] = self.Mbn[i][b, :]
                d = self._const_derivative(b, i)
                if d != 0.0:
                    rhs[b, 2 * self.nv] -= d * self.area
            self.Pi0grad_T[i] = solve(self.H1, rhs)

        # DOFs of a P2 polynomial (needed by the stabilization)
        D = np.zeros((nT, 6))
        D[: 2 * self.nv, :] = self.basis2.eval(self._point_dof_coords())
        D[2 * self.nv, :] = self.H2[0, :] / self.area
        self.D_T = D
        self.stab_T = self._stab(D, self.Pi0_T)

    def _boundary_integral_of_monomials(self):
        """Row of boundary integrals of m_a, a in M2 (exact edge Gauss)."""
        out = np.zeros(6)
        for e in range(self.nv):
            rule = edge_quadrature(self.verts[e], self.verts[(e + 1) % self.nv], 3)
            out += rule.weights @ self.basis2.eval(rule.points)
        return out

    def _laplacian_constant(self, a):
        """Laplacian of degree-<=2 member a (a constant), as a float."""
        a1, a2 = self.basis2.members[a]
        val = 0.0
        if a1 >= 2:
            val += a1 * (a1 - 1) / self.h**2
        if a2 >= 2:
            val += a2 * (a2 - 1) / self.h**2
        return val

    def _const_derivative(self, b, i):
        """d/dx_i of degree-<=1 member b (a constant)."""
        b1, b2 = self.basis1.members[b]
        if i == 0:
            return b1 / self.h
        return b2 / self.h

    @staticmethod
    def _stab(D, Pi0):
        """dofi-dofi stabilization matrix of (I - interpolation of Pi0)."""
        M = np.eye(D.shape[0]) - D @ Pi0
        return M.T @ M

    def _check_cond(self, A, what):
        c = np.linalg.cond(A)
        if c > COND_WARN:
            warnings.warn(f"ill-conditioned local system for {what}: cond={c:.2e}")

    # -- vector space ---------------------------------------------------------

    def vdof_slices(self):
        nb = 2 * self.nv
        return slice(0, nb), slice(nb, 2 * nb), slice(2 * nb, 2 * nb + 2)

    def _vector_projectors(self):
        nv, nb, N = self.nv, 2 * self.nv, self.n_dofs_V
        sx, sy, sd = self.vdof_slices()
        h, area = self.h, self.area
        gx3, gy3 = self.basis3.grad_matrices()

        # divergence polynomial (coefficients over M1): the constant part from
        # the boundary flux, the linear part from the scaled moment DOFs
        bdry_flux = np.zeros((self.basis3.dim, N))  # rows: integral (v.n) m_a
        bdry_flux[:, sx] = self.Mbn[0]
        bdry_flux[:, sy] = self.Mbn[1]
        rhs = np.zeros((3, N))
        rhs[0] = bdry_flux[0]
        rhs[1, sd.start] = area / h
        rhs[2, sd.start + 1] = area / h
        self.div_V = solve(self.H1, rhs)  # (3, N)

        # moments of v against gradients of M3 members: by parts
        # (v, grad m_a) = -(div v, m_a) + boundary flux
        self.grad_moments = -self.H3[:, :3] @ self.div_V + bdry_flux  # (10, N)

        # zeroth moments of each component: int v_i = h * (v, grad m_{e_i})
        self.m0 = h * self.grad_moments[1:3, :]  # (2, N)

        # H1 projection, componentwise (Laplacians of P2 are constants)
        gx2, gy2 = self.basis2.grad_matrices()
        G = gx2.T @ self.H2 @ gx2 + gy2.T @ self.H2 @ gy2
        G[0, :] = self._boundary_integral_of_monomials()
        self.PiN_V = np.zeros((12, N))
        for comp, scomp in ((0, sx), (1, sy)):
            B = np.zeros((6, N))
            B[0, scomp] = self.Mb[0, :]
            for a in range(1, 6):
                B[a, scomp] = (
                    gx2[:3, a] @ self.Mbn[0][:3, :] + gy2[:3, a] @ self.Mbn[1][:3, :]
                )
                lap = self._laplacian_constant(a)
                if lap != 0.0:
                    B[a, :] -= lap * self.m0[comp, :]
            self.PiN_V[6 * comp : 6 * comp + 6, :] = solve(G, B)

        # enhancement moments (v, m_perp m_b) with the centered, scaled
        # rotational weight m_perp = ((y - yE)/h, -(x - xE)/h): the space is
        # built so these coincide with the moments of the H1 projection
        q2 = self.basis2.eval(self.rule.points)
        w = self.rule.weights
        m1_vals = self.basis1.eval(self.rule.points)  # (nq, 3)
        pin_x = q2 @ self.PiN_V[:6, :]  # (nq, N) values of the projection
        pin_y = q2 @ self.PiN_V[6:, :]
        mperp_x = m1_vals[:, 2]  # (y - yE)/h
        mperp_y = -m1_vals[:, 1]  # -(x - xE)/h
        pm = np.zeros((3, N))
        for b in range(3):
            pm[b] = (w * m1_vals[:, b]) @ (
                mperp_x[:, None] * pin_x + mperp_y[:, None] * pin_y
            )
        self.perp_moments = pm

        # L2 projection onto [P2]^2 via the span
        # {grad m_p, p in M3 |p|>=1} + {perp * m_b, b in M1}
        span2 = np.zeros((12, 12))
        for col, p in enumerate(range(1, 10)):
            span2[:6, col] = gx3[:6, p]
            span2[6:, col] = gy3[:6, p]
        for col, b in enumerate(range(3)):
            # perp * m_b: x-comp m_(0,1)*m_b, y-comp -m_(1,0)*m_b
            b1, b2 = self.basis1.members[b]
            span2[self.basis2.index((b1, b2 + 1)), 9 + col] = 1.0
            span2[6 + self.basis2.index((b1 + 1, b2)), 9 + col] = -1.0
        self._check_cond(span2, "[P2]^2 decomposition")
        mu = np.vstack([self.grad_moments[1:10, :], pm])  # (12, N)
        M2 = np.zeros((12, 12))
        M2[:6, :6] = self.H2
        M2[6:, 6:] = self.H2
        self.Pi0_V = solve(M2, solve(span2.T, mu))  # (12, N)

        # L2 projection of the gradient onto 2x2 P1 matrices; component order
        # (dx v1, dy v1, dx v2, dy v2)
        self.Xi = np.zeros((4, 3, N))
        for i, scomp in ((0, sx), (1, sy)):
            for jdir in range(2):
                rhs = np.zeros((3, N))
                for b in range(3):
                    rhs[b, scomp] = self.Mbn[jdir][b, :]
                    d = self._const_derivative(b, jdir)
                    if d != 0.0:
                        rhs[b] -= d * self.m0[i]
                self.Xi[2 * i + jdir] = solve(self.H1, rhs)

        # DOFs of a [P2]^2 polynomial
        D = np.zeros((N, 12))
        pvals = self.basis2.eval(self._point_dof_coords())
        D[sx, :6] = pvals
        D[sy, 6:] = pvals
        for b in (1, 2):  # scaled moments of the divergence
            D[sd.start + b - 1, :6] = (h / area) * (self.H1[b, :] @ gx2[:3, :])
            D[sd.start + b - 1, 6:] = (h / area) * (self.H1[b, :] @ gy2[:3, :])
        self.D_V = D
        self.stab_V = self._stab(D, self.Pi0_V)

    # -- cached quadrature evaluations for the forms --------------------------

    def _quad_caches(self):
        q2 = self.basis2.eval(self.rule.points)
        q1 = q2[:, :3]
        self.qw = self.rule.weights
        self.qpts = self.rule.points
        # velocity: projected values and projected-gradient values at the rule
        self.pi0v_vals = (q2 @ self.Pi0_V[:6, :], q2 @ self.Pi0_V[6:, :])
        self.xi_vals = tuple(q1 @ self.Xi[c] for c in range(4))
        # temperature
        self.pi0t_vals = q2 @ self.Pi0_T
        self.pi0gradt_vals = (q1 @ self.Pi0grad_T[0], q1 @ self.Pi0grad_T[1])


def build_kernels(mesh) -> list[ElementKernel]:
    """One kernel per element; fails with the element id on degeneracy."""
    kernels = []
    for el in mesh.elements:
        try:
            kernels.append(
                ElementKernel(
                    mesh.element_vertices(el.id), el.area, el.centroid, el.diameter
                )
            )
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(
                f"singular local projector system on element {el.id}"
            ) from exc
    return kernels
