"""Global DOF maps for velocity, temperature, and pressure, plus boundary
masks and DOF interpolation of analytic fields.

Global numbering (velocity): x then y at every vertex block, x then y at
every edge-midpoint block, then the two divergence moments per element.
Temperature: vertex values, edge-midpoint values, one cell average per
element.  Pressure: three monomial coefficients per element, discontinuous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polybasis import polygon_quadrature


@dataclass
class VelocityDofLayout:
    n_dofs: int
    element_dofs: list[np.ndarray]
    boundary_mask: np.ndarray

    def interior(self) -> np.ndarray:
        return np.nonzero(~self.boundary_mask)[0]


@dataclass
class TemperatureDofLayout:
    n_dofs: int
    element_dofs: list[np.ndarray]
    boundary_mask: np.ndarray

    def interior(self) -> np.ndarray:
        return np.nonzero(~self.boundary_mask)[0]


@dataclass
class PressureDofLayout:
    n_dofs: int
    element_dofs: list[np.ndarray]


def build_dof_maps(mesh):
    nv, ne, nel = mesh.n_vertices, mesh.n_edges, mesh.n_elements

    # velocity: per entity, x-dof then y-dof
    n_u = 2 * (nv + ne + nel)
    u_el = []
    t_el = []
    p_el = []
    for el in mesh.elements:
        loop = el.vertex_loop
        edges = el.edges
        ux_v = 2 * loop
        uy_v = 2 * loop + 1
        ux_e = 2 * nv + 2 * edges
        uy_e = 2 * nv + 2 * edges + 1
        div = 2 * (nv + ne) + np.array([2 * el.id, 2 * el.id + 1])
        u_el.append(
            np.concatenate([ux_v, ux_e, uy_v, uy_e, div]).astype(int)
        )
        t_el.append(
            np.concatenate([loop, nv + edges, [nv + ne + el.id]]).astype(int)
        )
        p_el.append(np.arange(3 * el.id, 3 * el.id + 3))

    u_mask = np.zeros(n_u, dtype=bool)
    t_mask = np.zeros(nv + ne + nel, dtype=bool)
    for v in mesh.boundary_vertices:
        u_mask[2 * v] = u_mask[2 * v + 1] = True
        t_mask[v] = True
    for e in mesh.boundary_edges:
        u_mask[2 * nv + 2 * e] = u_mask[2 * nv + 2 * e + 1] = True
        t_mask[nv + e] = True

    return (
        VelocityDofLayout(n_u, u_el, u_mask),
        TemperatureDofLayout(nv + ne + nel, t_el, t_mask),
        PressureDofLayout(3 * nel, p_el),
    )


@dataclass
class DiscreteSolution:
    u_dofs: np.ndarray
    p_dofs: np.ndarray
    T_dofs: np.ndarray
    mesh: object


# ---------------------------------------------------------------------------
# Interpolation of analytic fields into the DOFs


def interpolate_scalar(field, mesh, layout: TemperatureDofLayout) -> np.ndarray:
    """Vertex/midpoint values plus cell averages of a scalar closure."""
    nv, ne = mesh.n_vertices, mesh.n_edges
    out = np.zeros(layout.n_dofs)
    out[:nv] = field(mesh.vertices[:, 0], mesh.vertices[:, 1])
    mids = np.array([mesh.edge_midpoint(e) for e in range(ne)])
    out[nv : nv + ne] = field(mids[:, 0], mids[:, 1])
    for el in mesh.elements:
        rule = polygon_quadrature(
            mesh.element_vertices(el.id), el.centroid, 2 * 2 + 2
        )
        out[nv + ne + el.id] = (
            rule.weights @ field(rule.points[:, 0], rule.points[:, 1]) / el.area
        )
    return out


def interpolate_velocity(field, mesh, layout: VelocityDofLayout, div_field=None):
    """Point values plus the scaled divergence moments.

    `field(x, y)` returns the two components; `div_field` is the analytic
    divergence (defaults to zero, the divergence-free case).
    """
    nv, ne = mesh.n_vertices, mesh.n_edges
    out = np.zeros(layout.n_dofs)
    vx, vy = field(mesh.vertices[:, 0], mesh.vertices[:, 1])
    out[0 : 2 * nv : 2] = vx
    out[1 : 2 * nv : 2] = vy
    mids = np.array([mesh.edge_midpoint(e) for e in range(ne)])
    ex, ey = field(mids[:, 0], mids[:, 1])
    out[2 * nv : 2 * nv + 2 * ne : 2] = ex
    out[2 * nv + 1 : 2 * nv + 2 * ne : 2] = ey
    base = 2 * (nv + ne)
    if div_field is not None:
        for el in mesh.elements:
            rule = polygon_quadrature(
                mesh.element_vertices(el.id), el.centroid, 2 * 2 + 2
            )
            d = div_field(rule.points[:, 0], rule.points[:, 1])
            scale = el.diameter / el.area
            m1 = (rule.points - el.centroid) / el.diameter
            out[base + 2 * el.id] = scale * (rule.weights @ (d * m1[:, 0]))
            out[base + 2 * el.id + 1] = scale * (rule.weights @ (d * m1[:, 1]))
    return out


def apply_dirichlet(vec: np.ndarray, mask: np.ndarray, values=None) -> np.ndarray:
    """Overwrite constrained entries (zero unless explicit values given)."""
    out = vec.copy()
    out[mask] = 0.0 if values is None else values[mask]
    return out
