"""Scaled monomial bases, polynomial algebra, and quadrature on polygons and edges.

Every polynomial space used by the projectors and discrete forms is represented
as a coefficient vector over the scaled monomial basis of an element,

    m_a(x) = ((x - x_E) / h_E) ** a,   |a| <= n,

ordered graded-lexicographically: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
All matrices downstream depend on this ordering; it is fixed here and nowhere
else.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def monomial_exponents(degree: int) -> tuple[tuple[int, int], ...]:
    """Multi-indices (a1, a2) with a1 + a2 <= degree, graded lex order.

    Within each total degree d the first exponent decreases: (d,0), (d-1,1),
    ..., (0,d), i.e. the basis reads 1, x, y, x^2, xy, y^2, ...
    """
    if degree < 0:
        return ()
    out = []
    for d in range(degree + 1):
        for a2 in range(d + 1):
            out.append((d - a2, a2))
    return tuple(out)


def basis_dim(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2 if degree >= 0 else 0


class ScaledMonomialBasis:
    """The normalized monomials of degree <= n on one element."""

    def __init__(self, centroid, diameter: float, degree: int):
        self.centroid = np.asarray(centroid, dtype=float)
        self.diameter = float(diameter)
        self.degree = int(degree)
        self.members = monomial_exponents(self.degree)
        self.dim = len(self.members)
        self._index = {a: i for i, a in enumerate(self.members)}

    def index(self, alpha) -> int:
        return self._index[tuple(alpha)]

    def same_element(self, other: "ScaledMonomialBasis") -> bool:
        return (
            np.array_equal(self.centroid, other.centroid)
            and self.diameter == other.diameter
        )

    def eval(self, points) -> np.ndarray:
        """Values of every member at the given points, shape (npts, dim)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        xi = (pts[:, 0] - self.centroid[0]) / self.diameter
        eta = (pts[:, 1] - self.centroid[1]) / self.diameter
        vals = np.empty((pts.shape[0], self.dim))
        for i, (a1, a2) in enumerate(self.members):
            vals[:, i] = xi**a1 * eta**a2
        return vals

    def grad_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Matrices Gx, Gy with d/dx m_a = sum_b Gx[b, a] m_b (same basis).

        The 1/h_E factor of the derivative is included.  Column a of Gx holds
        the coefficients of the x-derivative of member a.
        """
        gx = np.zeros((self.dim, self.dim))
        gy = np.zeros((self.dim, self.dim))
        h = self.diameter
        for i, (a1, a2) in enumerate(self.members):
            if a1 > 0:
                gx[self._index[(a1 - 1, a2)], i] = a1 / h
            if a2 > 0:
                gy[self._index[(a1, a2 - 1)], i] = a2 / h
        return gx, gy

    def subbasis(self, degree: int) -> "ScaledMonomialBasis":
        return ScaledMonomialBasis(self.centroid, self.diameter, degree)


@dataclass
class PolyCoeffs:
    """A polynomial as a coefficient vector over a scaled monomial basis."""

    basis: ScaledMonomialBasis
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.basis.dim,):
            raise ValueError(
                f"coefficient length {self.coeffs.shape} does not match basis "
                f"dimension {self.basis.dim}"
            )

    def eval(self, points) -> np.ndarray:
        return self.basis.eval(points) @ self.coeffs

    def grad(self) -> tuple["PolyCoeffs", "PolyCoeffs"]:
        gx, gy = self.basis.grad_matrices()
        return (
            PolyCoeffs(self.basis, gx @ self.coeffs),
            PolyCoeffs(self.basis, gy @ self.coeffs),
        )


def multiply(p: PolyCoeffs, q: PolyCoeffs) -> PolyCoeffs:
    """Exact coefficient product; result lives on the degree-(np+nq) basis."""
    if not p.basis.same_element(q.basis):
        raise ValueError("operands live on different elements")
    out_basis = ScaledMonomialBasis(
        p.basis.centroid, p.basis.diameter, p.basis.degree + q.basis.degree
    )
    coeffs = np.zeros(out_basis.dim)
    for i, a in enumerate(p.basis.members):
        if p.coeffs[i] == 0.0:
            continue
        for j, b in enumerate(q.basis.members):
            if q.coeffs[j] == 0.0:
                continue
            coeffs[out_basis.index((a[0] + b[0], a[1] + b[1]))] += (
                p.coeffs[i] * q.coeffs[j]
            )
    return PolyCoeffs(out_basis, coeffs)


def divergence(px: PolyCoeffs, py: PolyCoeffs) -> PolyCoeffs:
    """Divergence of the vector field (px, py) on the shared basis."""
    if not px.basis.same_element(py.basis):
        raise ValueError("operands live on different elements")
    gx, _ = px.basis.grad_matrices()
    _, gy = py.basis.grad_matrices()
    return PolyCoeffs(px.basis, gx @ px.coeffs + gy @ py.coeffs)


# ---------------------------------------------------------------------------
# Quadrature


@dataclass
class QuadratureRule:
    points: np.ndarray  # (npts, 2) or (npts,) abscissae mapped to the edge
    weights: np.ndarray
    exactness_degree: int

    def integrate(self, fn) -> float:
        return float(self.weights @ fn(self.points))


@lru_cache(maxsize=None)
def _triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Rule on the reference triangle (0,0)-(1,0)-(0,1), exact to `degree`.

    Collapsed tensor Gauss-Legendre: under x = s, y = t(1-s) a polynomial of
    total degree d becomes degree <= d+1 in s (with the Jacobian) and <= d in
    t, so (d+2+1)//2 x (d+1+1)//2 points suffice.
    """
    ns = (degree + 3) // 2
    nt = (degree + 2) // 2
    xs, ws = np.polynomial.legendre.leggauss(ns)
    xt, wt = np.polynomial.legendre.leggauss(nt)
    # map [-1,1] -> [0,1]
    xs = 0.5 * (xs + 1.0)
    ws = 0.5 * ws
    xt = 0.5 * (xt + 1.0)
    wt = 0.5 * wt
    S, T = np.meshgrid(xs, xt, indexing="ij")
    WS, WT = np.meshgrid(ws, wt, indexing="ij")
    x = S.ravel()
    y = (T * (1.0 - S)).ravel()
    w = (WS * WT * (1.0 - S)).ravel()
    return np.column_stack([x, y]), w


def polygon_quadrature(vertices, centroid, degree: int) -> QuadratureRule:
    """Quadrature on a polygon star-shaped w.r.t. its centroid.

    Fan sub-triangulation from the centroid with a Gauss rule on each
    triangle that is exact to the requested total degree.
    """
    verts = np.asarray(vertices, dtype=float)
    c = np.asarray(centroid, dtype=float)
    ref_pts, ref_w = _triangle_rule(degree)
    pts_out = []
    w_out = []
    n = len(verts)
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        # affine map from reference triangle (c, a, b)
        jac = (a[0] - c[0]) * (b[1] - c[1]) - (b[0] - c[0]) * (a[1] - c[1])
        if jac <= 0.0:
            raise ValueError(
                "negative fan-triangle area: polygon not star-shaped "
                "with respect to its centroid"
            )
        pts = c + ref_pts[:, :1] * (a - c) + ref_pts[:, 1:2] * (b - c)
        pts_out.append(pts)
        w_out.append(ref_w * jac)
    return QuadratureRule(
        np.vstack(pts_out), np.concatenate(w_out), exactness_degree=degree
    )


def edge_quadrature(p0, p1, n_points: int) -> QuadratureRule:
    """Gauss-Legendre rule mapped to the segment p0-p1 (degree 2n-1)."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    x, w = np.polynomial.legendre.leggauss(n_points)
    t = 0.5 * (x + 1.0)
    length = float(np.linalg.norm(p1 - p0))
    pts = p0 + np.outer(t, p1 - p0)
    return QuadratureRule(pts, 0.5 * w * length, exactness_degree=2 * n_points - 1)


def poly_mass_matrix(basis: ScaledMonomialBasis, rule: QuadratureRule) -> np.ndarray:
    """H[a, b] = integral of m_a * m_b over the element.

    The rule must be exact to at least twice the basis degree; the result is
    then exact up to round-off and symmetric positive definite.
    """
    if rule.exactness_degree < 2 * basis.degree:
        raise ValueError("quadrature not exact enough for the mass matrix")
    vals = basis.eval(rule.points)
    H = (vals * rule.weights[:, None]).T @ vals
    return 0.5 * (H + H.T)
