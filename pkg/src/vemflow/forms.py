"""Element-local assembly of the discrete forms.

All forms are evaluated through the projector matrices of an ElementKernel:
consistency terms integrate projected polynomials with the cached polygon
rule, stabilization terms are the dofi-dofi dot product on the complement of
the L2 projection.  The nonlinear slots (temperature-dependent coefficients,
convecting field, Forchheimer weight) are frozen at the previous Picard
iterate, so every function here returns a matrix or vector over local DOFs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .projection import ElementKernel


@dataclass
class CoefficientModel:
    """Temperature-dependent viscosity/diffusivity and Forchheimer exponent."""

    nu: Callable[[np.ndarray], np.ndarray]
    kappa: Callable[[np.ndarray], np.ndarray]
    r: float
    nu_bounds: tuple[float, float] = (0.0, np.inf)
    kappa_bounds: tuple[float, float] = (0.0, np.inf)

    def __post_init__(self):
        if not 3.0 <= self.r <= 4.0:
            raise ValueError(f"Forchheimer exponent r={self.r} outside [3, 4]")


def local_a_h(k: ElementKernel, T_loc: np.ndarray, coeffs: CoefficientModel):
    """Viscous velocity matrix: projected-gradient consistency + dofi-dofi."""
    nu_q = coeffs.nu(k.pi0t_vals @ T_loc)
    w = k.qw * nu_q
    A = np.zeros((k.n_dofs_V, k.n_dofs_V))
    for c in range(4):
        v = k.xi_vals[c]
        A += v.T @ (w[:, None] * v)
    T_mean = T_loc[2 * k.nv]  # cell average DOF = projection onto constants
    A += float(coeffs.nu(T_mean)) * k.stab_V
    return A


def local_frak_a_h(k: ElementKernel, T_loc: np.ndarray, coeffs: CoefficientModel):
    """Diffusion temperature matrix, scalar analogue of local_a_h."""
    kap_q = coeffs.kappa(k.pi0t_vals @ T_loc)
    w = k.qw * kap_q
    gx, gy = k.pi0gradt_vals
    A = gx.T @ (w[:, None] * gx) + gy.T @ (w[:, None] * gy)
    T_mean = T_loc[2 * k.nv]
    A += float(coeffs.kappa(T_mean)) * k.stab_T
    return A


def _projected_velocity_at_quad(k: ElementKernel, z_loc: np.ndarray):
    px, py = k.pi0v_vals
    return px @ z_loc, py @ z_loc


def local_c_N_skew(k: ElementKernel, z_loc: np.ndarray):
    """Skew-symmetrized convection matrix with the advecting field frozen."""
    zx, zy = _projected_velocity_at_quad(k, z_loc)
    px, py = k.pi0v_vals
    # C[i, j] = int [Xi(grad phi_j) z] . Pi0 phi_i
    C = np.zeros((k.n_dofs_V, k.n_dofs_V))
    w = k.qw
    C += px.T @ ((w * zx)[:, None] * k.xi_vals[0])
    C += px.T @ ((w * zy)[:, None] * k.xi_vals[1])
    C += py.T @ ((w * zx)[:, None] * k.xi_vals[2])
    C += py.T @ ((w * zy)[:, None] * k.xi_vals[3])
    return 0.5 * (C - C.T)


def local_c_F(k: ElementKernel, z_loc: np.ndarray, r: float):
    """Forchheimer matrix |Pi0 z|^(r-2) against projected velocities; SPSD."""
    zx, zy = _projected_velocity_at_quad(k, z_loc)
    wgt = k.qw * np.hypot(zx, zy) ** (r - 2.0)
    px, py = k.pi0v_vals
    return px.T @ (wgt[:, None] * px) + py.T @ (wgt[:, None] * py)


def local_frak_c_skew(k: ElementKernel, u_loc: np.ndarray):
    """Skew-symmetrized temperature convection with frozen velocity."""
    ux, uy = _projected_velocity_at_quad(k, u_loc)
    gx, gy = k.pi0gradt_vals
    pt = k.pi0t_vals
    w = k.qw
    C = pt.T @ ((w * ux)[:, None] * gx) + pt.T @ ((w * uy)[:, None] * gy)
    return 0.5 * (C - C.T)


def local_d_h(k: ElementKernel):
    """Zeroth-order drag: Gram matrix of the projected velocity basis."""
    px, py = k.pi0v_vals
    w = k.qw[:, None]
    return px.T @ (w * px) + py.T @ (w * py)


def local_b(k: ElementKernel):
    """Pressure-velocity coupling, exact: b[beta, i] = -int m_beta div phi_i."""
    return -k.H1 @ k.div_V


def local_rhs_velocity(k: ElementKernel, f):
    """Load vector (Pi0 f, phi_i) realized with the assembly rule.

    Pairing the raw source values with the projected test basis at the
    quadrature points equals pairing the projected source with the projected
    basis, by self-adjointness of the L2 projection at the rule level.
    """
    fx, fy = f(k.qpts[:, 0], k.qpts[:, 1])
    px, py = k.pi0v_vals
    return px.T @ (k.qw * fx) + py.T @ (k.qw * fy)


def local_rhs_temperature(k: ElementKernel, g):
    gq = g(k.qpts[:, 0], k.qpts[:, 1])
    return k.pi0t_vals.T @ (k.qw * gq)


def pressure_mean_vector(k: ElementKernel):
    """Integrals of the pressure monomials, for the zero-mean constraint."""
    return k.H1[:, 0].copy()
