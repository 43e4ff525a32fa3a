"""Global assembly, saddle-point linear solves, and the fixed-point driver.

Each outer iteration freezes the nonlinear slots at the previous iterate,
solves the flow saddle-point system (with the pressure zero-mean constraint
imposed through a single Lagrange multiplier), then solves the temperature
system with the freshly computed velocity.  Iteration stops when the
Euclidean norm of the concatenated DOF increment drops below the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import forms
from .projection import build_kernels
from .space import DiscreteSolution, build_dof_maps


class SolverError(RuntimeError):
    pass


class PicardDivergenceError(SolverError):
    def __init__(self, message, log):
        super().__init__(message)
        self.log = log


def solve_linear(A: sp.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """Sparse direct solve with a residual check."""
    A = A.tocsc()
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SolverError(f"singular factorization: {exc}") from exc
    x = lu.solve(rhs)
    x += lu.solve(rhs - A @ x)  # one step of iterative refinement
    resid = np.linalg.norm(A @ x - rhs)
    scale = spla.norm(A) * np.linalg.norm(x) + np.linalg.norm(rhs)
    if resid > 1e-10 * scale:
        cond_est = np.abs(lu.U.diagonal())
        raise SolverError(
            f"linear solve residual {resid:.3e} exceeds tolerance; "
            f"diagonal ratio {cond_est.max() / max(cond_est.min(), 1e-300):.3e}"
        )
    return x


class CoupledAssembler:
    """Caches per-mesh data (kernels, layouts, static matrices, loads)."""

    def __init__(self, mesh, coeffs, f, g):
        self.mesh = mesh
        self.coeffs = coeffs
        self.kernels = build_kernels(mesh)
        self.u_layout, self.T_layout, self.p_layout = build_dof_maps(mesh)
        self.n_u = self.u_layout.n_dofs
        self.n_p = self.p_layout.n_dofs
        self.n_T = self.T_layout.n_dofs
        self.u_int = self.u_layout.interior()
        self.T_int = self.T_layout.interior()

        self.d_local = [forms.local_d_h(k) for k in self.kernels]
        self.b_local = [forms.local_b(k) for k in self.kernels]
        self.mean_local = [forms.pressure_mean_vector(k) for k in self.kernels]
        self.f_local = [forms.local_rhs_velocity(k, f) for k in self.kernels]
        self.g_local = [forms.local_rhs_temperature(k, g) for k in self.kernels]

    # -- flow step ------------------------------------------------------------

    def assemble_flow_system(self, T_prev, u_prev, u_bc=None):
        """Sparse system for (u, p, multiplier) with boundary DOFs eliminated."""
        rows, cols, vals = [], [], []
        rhs = np.zeros(self.n_u + self.n_p + 1)
        for el_id, k in enumerate(self.kernels):
            udofs = self.u_layout.element_dofs[el_id]
            pdofs = self.p_layout.element_dofs[el_id]
            T_loc = T_prev[self.T_layout.element_dofs[el_id]]
            z_loc = u_prev[udofs]
            K = (
                forms.local_a_h(k, T_loc, self.coeffs)
                + forms.local_c_N_skew(k, z_loc)
                + forms.local_c_F(k, z_loc, self.coeffs.r)
                + self.d_local[el_id]
            )
            B = self.b_local[el_id]
            iu, ju = np.meshgrid(udofs, udofs, indexing="ij")
            rows.append(iu.ravel())
            cols.append(ju.ravel())
            vals.append(K.ravel())
            ip, jp = np.meshgrid(self.n_u + pdofs, udofs, indexing="ij")
            rows.extend([ip.ravel(), jp.ravel()])
            cols.extend([jp.ravel(), ip.ravel()])
            vals.extend([B.ravel(), B.ravel()])
            mcol = np.full(3, self.n_u + self.n_p)
            rows.extend([self.n_u + pdofs, mcol])
            cols.extend([mcol, self.n_u + pdofs])
            vals.extend([self.mean_local[el_id], self.mean_local[el_id]])
            rhs[udofs] += self.f_local[el_id]
        n_tot = self.n_u + self.n_p + 1
        A = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n_tot, n_tot),
        ).tocsr()
        keep = np.concatenate(
            [self.u_int, self.n_u + np.arange(self.n_p + 1)]
        )
        if u_bc is not None and np.any(u_bc != 0.0):
            rhs = rhs - A @ np.concatenate([u_bc, np.zeros(self.n_p + 1)])
        return A[keep][:, keep], rhs[keep]

    def solve_flow(self, T_prev, u_prev, u_bc=None):
        A, rhs = self.assemble_flow_system(T_prev, u_prev, u_bc)
        x = solve_linear(A, rhs)
        u = np.zeros(self.n_u) if u_bc is None else u_bc.copy()
        u[self.u_int] = x[: len(self.u_int)]
        p = x[len(self.u_int) : len(self.u_int) + self.n_p]
        return u, p

    # -- temperature step ------------------------------------------------------

    def assemble_temperature_system(self, T_prev, u_new, T_bc=None):
        rows, cols, vals = [], [], []
        rhs = np.zeros(self.n_T)
        for el_id, k in enumerate(self.kernels):
            tdofs = self.T_layout.element_dofs[el_id]
            T_loc = T_prev[tdofs]
            u_loc = u_new[self.u_layout.element_dofs[el_id]]
            K = forms.local_frak_a_h(k, T_loc, self.coeffs) + forms.local_frak_c_skew(
                k, u_loc
            )
            it, jt = np.meshgrid(tdofs, tdofs, indexing="ij")
            rows.append(it.ravel())
            cols.append(jt.ravel())
            vals.append(K.ravel())
            rhs[tdofs] += self.g_local[el_id]
        A = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_T, self.n_T),
        ).tocsr()
        if T_bc is not None and np.any(T_bc != 0.0):
            rhs = rhs - A @ T_bc
        keep = self.T_int
        return A[keep][:, keep], rhs[keep]

    def solve_temperature(self, T_prev, u_new, T_bc=None):
        A, rhs = self.assemble_temperature_system(T_prev, u_new, T_bc)
        x = solve_linear(A, rhs)
        T = np.zeros(self.n_T) if T_bc is None else T_bc.copy()
        T[self.T_int] = x
        return T


@dataclass
class PicardLog:
    increments: list
    iterations: int


def picard_solve(
    mesh,
    coeffs,
    f,
    g,
    tol: float = 1e-6,
    max_iter: int = 100,
    u_bc=None,
    T_bc=None,
    assembler: CoupledAssembler | None = None,
):
    """Algorithm: alternating flow and temperature solves, zero initial guess.

    Returns the converged DiscreteSolution and the per-iteration increment
    norms (Euclidean norm over all eliminated-BC DOF values).
    """
    asm = assembler or CoupledAssembler(mesh, coeffs, f, g)
    u = np.zeros(asm.n_u) if u_bc is None else u_bc.copy()
    p = np.zeros(asm.n_p)
    T = np.zeros(asm.n_T) if T_bc is None else T_bc.copy()
    increments = []
    for it in range(1, max_iter + 1):
        u_new, p_new = asm.solve_flow(T, u, u_bc)
        T_new = asm.solve_temperature(T, u_new, T_bc)
        inc = np.sqrt(
            np.sum((u_new[asm.u_int] - u[asm.u_int]) ** 2)
            + np.sum((p_new - p) ** 2)
            + np.sum((T_new[asm.T_int] - T[asm.T_int]) ** 2)
        )
        increments.append(inc)
        u, p, T = u_new, p_new, T_new
        if inc <= tol:
            return (
                DiscreteSolution(u_dofs=u, p_dofs=p, T_dofs=T, mesh=mesh),
                PicardLog(increments=increments, iterations=it),
            )
    raise PicardDivergenceError(
        f"fixed-point iteration did not reach tol={tol} in {max_iter} iterations "
        f"(last increment {increments[-1]:.3e})",
        PicardLog(increments=increments, iterations=max_iter),
    )
