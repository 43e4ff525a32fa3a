"""Polygonal meshes of the unit square: generation, validation, and I/O.

Six mesh families are shipped, selected by tag:

    quad            structured N x N squares
    triangle        each square split into two triangles
    hexagon         Voronoi cells of a regular hexagonal lattice (regular
                    hexagons in the interior, clipped cells at the boundary)
    distorted-quad  structured quads with a sinusoidal interior-vertex
                    perturbation of amplitude 0.1/N
    voronoi-cvt     Lloyd-relaxed Voronoi tessellation of N^2 seeds
    voronoi-random  unrelaxed Voronoi tessellation of N^2 seeds

All generators are deterministic given (family, N, seed) and produce
conforming meshes whose element areas sum to 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Voronoi, cKDTree

MESH_FAMILIES = (
    "quad",
    "triangle",
    "hexagon",
    "distorted-quad",
    "voronoi-cvt",
    "voronoi-random",
)

_MERGE_TOL = 1e-9


class MeshError(Exception):
    """Structural or format problem in a mesh."""


def polygon_area(verts: np.ndarray) -> float:
    """Signed shoelace area (positive for counter-clockwise loops)."""
    x = verts[:, 0]
    y = verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(verts: np.ndarray) -> np.ndarray:
    x = verts[:, 0]
    y = verts[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    area = 0.5 * float(np.sum(cross))
    cx = float(np.sum((x + np.roll(x, -1)) * cross)) / (6.0 * area)
    cy = float(np.sum((y + np.roll(y, -1)) * cross)) / (6.0 * area)
    return np.array([cx, cy])


def polygon_diameter(verts: np.ndarray) -> float:
    diff = verts[:, None, :] - verts[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2)).max())


@dataclass
class Element:
    id: int
    vertex_loop: np.ndarray  # ordered vertex ids, counter-clockwise
    area: float
    centroid: np.ndarray
    diameter: float
    edges: np.ndarray = field(default=None)  # ordered edge ids, set by the mesh


@dataclass
class Edge:
    id: int
    vertices: tuple[int, int]
    elements: tuple[int, ...]
    boundary: bool


class PolygonalMesh:
    """Immutable conforming polygonal mesh.

    Edge i of an element connects vertex_loop[i] to vertex_loop[i+1]; the
    element's `edges` array stores the global edge id for each such pair.
    """

    def __init__(self, vertices, loops, family_tag="custom", N=0, strict=True):
        self.vertices = np.asarray(vertices, dtype=float)
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("non-finite vertex coordinates")
        self.family_tag = family_tag
        self.N = N
        self.elements: list[Element] = []
        for eid, loop in enumerate(loops):
            loop = np.asarray(loop, dtype=int)
            pts = self.vertices[loop]
            area = polygon_area(pts)
            if area < 0.0:
                if strict:
                    raise MeshError(f"element {eid}: clockwise vertex loop")
                warnings.warn(f"element {eid}: reorienting clockwise loop")
                loop = loop[::-1]
                pts = self.vertices[loop]
                area = -area
            if area <= 0.0:
                raise MeshError(f"element {eid}: degenerate (area {area})")
            self.elements.append(
                Element(
                    id=eid,
                    vertex_loop=loop,
                    area=area,
                    centroid=polygon_centroid(pts),
                    diameter=polygon_diameter(pts),
                )
            )
        self._build_edges()
        self.h = max(e.diameter for e in self.elements)

    # -- topology -----------------------------------------------------------

    def _build_edges(self):
        edge_map: dict[tuple[int, int], list] = {}
        for el in self.elements:
            loop = el.vertex_loop
            n = len(loop)
            el.edges = np.empty(n, dtype=int)
            for i in range(n):
                a, b = int(loop[i]), int(loop[(i + 1) % n])
                if a == b:
                    raise MeshError(f"element {el.id}: repeated vertex {a} in loop")
                key = (a, b) if a < b else (b, a)
                edge_map.setdefault(key, []).append((el.id, i))
        self.edges: list[Edge] = []
        for eid, (key, users) in enumerate(sorted(edge_map.items())):
            if len(users) > 2:
                raise MeshError(f"edge {key} shared by more than two elements")
            for el_id, slot in users:
                self.elements[el_id].edges[slot] = eid
            self.edges.append(
                Edge(
                    id=eid,
                    vertices=key,
                    elements=tuple(el_id for el_id, _ in users),
                    boundary=len(users) == 1,
                )
            )
        self.boundary_edges = np.array(
            [e.id for e in self.edges if e.boundary], dtype=int
        )
        bverts = set()
        for e in self.edges:
            if e.boundary:
                bverts.update(e.vertices)
        self.boundary_vertices = np.array(sorted(bverts), dtype=int)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_midpoint(self, edge_id: int) -> np.ndarray:
        a, b = self.edges[edge_id].vertices
        return 0.5 * (self.vertices[a] + self.vertices[b])

    def element_vertices(self, el_id: int) -> np.ndarray:
        return self.vertices[self.elements[el_id].vertex_loop]

    def total_area(self) -> float:
        return sum(e.area for e in self.elements)

    def check_conformity(self):
        """Raise MeshError when an interior edge is hit by a hanging node.

        A hanging node shows up as single-sided interior edges; scan all of
        them first so the error can name the offending vertex when one of the
        edges is split by it.
        """
        tree = cKDTree(self.vertices)
        offenders = []
        for e in self.edges:
            if not e.boundary:
                continue
            a = self.vertices[e.vertices[0]]
            b = self.vertices[e.vertices[1]]
            mid = 0.5 * (a + b)
            on_box = (
                min(abs(mid[0]), abs(1.0 - mid[0]), abs(mid[1]), abs(1.0 - mid[1]))
                < 1e-9
            )
            if not on_box:
                offenders.append(e)
        if not offenders:
            return
        for e in offenders:
            a = self.vertices[e.vertices[0]]
            b = self.vertices[e.vertices[1]]
            mid = 0.5 * (a + b)
            length = np.linalg.norm(b - a)
            # look for a vertex splitting the edge
            for j in tree.query_ball_point(mid, 0.51 * length):
                if j in e.vertices:
                    continue
                p = self.vertices[j]
                t = np.dot(p - a, b - a) / length**2
                if 1e-9 < t < 1 - 1e-9:
                    ev = b - a
                    q = p - a
                    dist = abs(ev[0] * q[1] - ev[1] * q[0]) / length
                    if dist < 1e-9:
                        raise MeshError(
                            f"non-conforming mesh: hanging node {j} on edge "
                            f"{e.vertices}"
                        )
        raise MeshError(
            f"non-conforming mesh: interior edge {offenders[0].vertices} has "
            "a single adjacent element"
        )


@dataclass
class ShapeRegularityReport:
    rho_star_estimate: np.ndarray  # per-element inscribed radius / h_E
    min_edge_ratio: np.ndarray  # per-element min edge length / h_E
    flagged: np.ndarray  # element ids below the floor


def validate_mesh(mesh: PolygonalMesh, floor: float = 0.01) -> ShapeRegularityReport:
    """Per-element shape-regularity estimates.

    The inscribed radius is measured from the centroid (the shipped families
    are all star-shaped with respect to it); an inverted element or broken
    topology raises MeshError naming the element.
    """
    rho = np.empty(mesh.n_elements)
    edge_ratio = np.empty(mesh.n_elements)
    for el in mesh.elements:
        pts = mesh.vertices[el.vertex_loop]
        if polygon_area(pts) <= 0.0:
            raise MeshError(f"element {el.id}: inverted or degenerate")
        c = el.centroid
        n = len(pts)
        dmin = np.inf
        lmin = np.inf
        for i in range(n):
            a = pts[i]
            b = pts[(i + 1) % n]
            length = np.linalg.norm(b - a)
            lmin = min(lmin, length)
            # distance from centroid to the edge's supporting line (the
            # polygon is star-shaped w.r.t. c, so this bounds the inscribed
            # ball radius from below)
            e = b - a
            q = c - a
            dist = (e[0] * q[1] - e[1] * q[0]) / length
            if dist <= 0.0:
                raise MeshError(
                    f"element {el.id}: centroid outside or edge inverted"
                )
            dmin = min(dmin, dist)
        rho[el.id] = dmin / el.diameter
        edge_ratio[el.id] = lmin / el.diameter
    mesh.check_conformity()
    return ShapeRegularityReport(
        rho_star_estimate=rho,
        min_edge_ratio=edge_ratio,
        flagged=np.nonzero(rho < floor)[0],
    )


# ---------------------------------------------------------------------------
# Generators


def generate_mesh(family: str, N: int, seed: int | None = None) -> PolygonalMesh:
    """Generate a mesh of the unit square with about N elements per side."""
    if family not in MESH_FAMILIES:
        raise ValueError(f"unsupported mesh family {family!r}")
    if N < 1:
        raise ValueError("N must be >= 1")
    if family == "quad":
        mesh = _structured_quads(N)
    elif family == "triangle":
        mesh = _structured_triangles(N)
    elif family == "hexagon":
        if N < 2:
            raise ValueError("hexagonal tiling needs N >= 2")
        mesh = _hexagons(N)
    elif family == "distorted-quad":
        mesh = _distorted_quads(N)
    else:
        rng = np.random.default_rng(0 if seed is None else seed)
        seeds = rng.uniform(0.05 / N, 1.0 - 0.05 / N, size=(N * N, 2))
        iterations = 3 if family == "voronoi-cvt" else 0
        for _ in range(iterations):
            verts, loops = _bounded_voronoi(seeds)
            seeds = np.array(
                [polygon_centroid(verts[np.asarray(lp)]) for lp in loops]
            )
        verts, loops = _bounded_voronoi(seeds)
        mesh = PolygonalMesh(verts, loops, family_tag=family, N=N)
    total = mesh.total_area()
    if abs(total - 1.0) > 1e-10:
        raise MeshError(f"generated mesh covers area {total}, expected 1")
    return mesh


def _grid_vertices(N):
    xs = np.linspace(0.0, 1.0, N + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    return np.column_stack([X.ravel(), Y.ravel()])  # id = j*(N+1) + i


def _structured_quads(N):
    verts = _grid_vertices(N)
    loops = []
    for j in range(N):
        for i in range(N):
            v = j * (N + 1) + i
            loops.append([v, v + 1, v + N + 2, v + N + 1])
    return PolygonalMesh(verts, loops, family_tag="quad", N=N)


def _structured_triangles(N):
    verts = _grid_vertices(N)
    loops = []
    for j in range(N):
        for i in range(N):
            v = j * (N + 1) + i
            loops.append([v, v + 1, v + N + 2])
            loops.append([v, v + N + 2, v + N + 1])
    return PolygonalMesh(verts, loops, family_tag="triangle", N=N)


def _distorted_quads(N):
    verts = _grid_vertices(N)
    amp = 0.1 / N
    interior = (
        (verts[:, 0] > 1e-12)
        & (verts[:, 0] < 1 - 1e-12)
        & (verts[:, 1] > 1e-12)
        & (verts[:, 1] < 1 - 1e-12)
    )
    wob = amp * np.sin(2 * np.pi * verts[:, 0]) * np.sin(2 * np.pi * verts[:, 1])
    verts = verts.copy()
    verts[interior, 0] += wob[interior]
    verts[interior, 1] += wob[interior]
    loops = []
    for j in range(N):
        for i in range(N):
            v = j * (N + 1) + i
            loops.append([v, v + 1, v + N + 2, v + N + 1])
    return PolygonalMesh(verts, loops, family_tag="distorted-quad", N=N)


def _hexagons(N):
    """Voronoi cells of a hexagonal point lattice, clipped to the square.

    Interior cells are regular hexagons; cells along the boundary are the
    hexagons clipped by the square.  Lattice points that fall just outside
    the square are pulled barely inside so the mirror-based clipping stays
    well posed; the spacing guarantees at most one point per row enters each
    clamp zone, so no two seeds collide.
    """
    dx = 1.0 / N
    dy = dx * np.sqrt(3.0) / 2.0
    eps = 1e-3 * dx
    seeds = []
    j = 0
    while True:
        y = j * dy
        if y > 1.0 + 0.4 * dy:
            break
        y = min(max(y, eps), 1.0 - eps)
        off = 0.5 * dx if j % 2 else 0.0
        for i in range(-1, N + 2):
            x = i * dx + off
            if -0.4 * dx <= x <= 1.0 + 0.4 * dx:
                seeds.append((min(max(x, eps), 1.0 - eps), y))
        j += 1
    verts, loops = _bounded_voronoi(np.array(seeds))
    return PolygonalMesh(verts, loops, family_tag="hexagon", N=N)


def _bounded_voronoi(seeds: np.ndarray):
    """Voronoi cells of `seeds` clipped exactly to the unit square.

    Mirror trick: reflecting the seeds across each side makes every original
    cell bounded, with cell boundaries lying exactly on the square's sides.
    Near-duplicate Voronoi vertices are merged globally to keep the mesh
    conforming and free of degenerate short edges.
    """
    n = len(seeds)
    left = seeds * [-1.0, 1.0]
    right = seeds * [-1.0, 1.0] + [2.0, 0.0]
    bottom = seeds * [1.0, -1.0]
    top = seeds * [1.0, -1.0] + [0.0, 2.0]
    vor = Voronoi(np.vstack([seeds, left, right, bottom, top]))

    used = {}
    loops = []
    for i in range(n):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or len(region) < 3:
            raise MeshError("unbounded Voronoi cell; seed outside the square?")
        loop = []
        for v in region:
            if v not in used:
                used[v] = len(used)
            loop.append(used[v])
        pts = vor.vertices[region]
        if polygon_area(pts) < 0:
            loop = loop[::-1]
        loops.append(loop)
    verts = np.empty((len(used), 2))
    for old, new in used.items():
        verts[new] = vor.vertices[old]

    # snap to the box and merge coincident vertices
    for dim in (0, 1):
        verts[np.abs(verts[:, dim]) < _MERGE_TOL, dim] = 0.0
        verts[np.abs(verts[:, dim] - 1.0) < _MERGE_TOL, dim] = 1.0
    tree = cKDTree(verts)
    parent = np.arange(len(verts))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in tree.query_pairs(_MERGE_TOL):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(len(verts))])
    uniq, inverse = np.unique(roots, return_inverse=True)
    new_verts = verts[uniq]
    new_loops = []
    for loop in loops:
        out = []
        for v in loop:
            nv = int(inverse[v])
            if not out or out[-1] != nv:
                out.append(nv)
        if out[0] == out[-1]:
            out.pop()
        new_loops.append(out)
    # drop vertices that ended up unused
    used_ids = sorted({v for lp in new_loops for v in lp})
    remap = {v: i for i, v in enumerate(used_ids)}
    new_loops = [[remap[v] for v in lp] for lp in new_loops]
    return new_verts[used_ids], new_loops


# ---------------------------------------------------------------------------
# Interchange format: "polymesh 1" header, vertices, then element loops.


def save_mesh(mesh: PolygonalMesh, path):
    with open(path, "w") as fh:
        fh.write("polymesh 1\n")
        fh.write(f"vertices {mesh.n_vertices}\n")
        for i, (x, y) in enumerate(mesh.vertices):
            fh.write(f"{i} {x:.17g} {y:.17g}\n")
        fh.write(f"elements {mesh.n_elements}\n")
        for el in mesh.elements:
            ids = " ".join(str(int(v)) for v in el.vertex_loop)
            fh.write(f"{el.id} {len(el.vertex_loop)} {ids}\n")


def load_mesh(path, strict: bool = False) -> PolygonalMesh:
    def fail(lineno, msg):
        raise MeshError(f"{path}:{lineno}: {msg}")

    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "polymesh 1":
        fail(1, "expected header 'polymesh 1'")
    idx = 1
    head = lines[idx].split()
    if len(head) != 2 or head[0] != "vertices":
        fail(idx + 1, "expected 'vertices <n>'")
    n_verts = int(head[1])
    verts = np.empty((n_verts, 2))
    for k in range(n_verts):
        idx += 1
        parts = lines[idx].split()
        if len(parts) != 3:
            fail(idx + 1, "expected 'id x y'")
        vid = int(parts[0])
        if vid != k:
            fail(idx + 1, f"vertex ids must be dense, got {vid}")
        verts[k] = [float(parts[1]), float(parts[2])]
    idx += 1
    head = lines[idx].split()
    if len(head) != 2 or head[0] != "elements":
        fail(idx + 1, "expected 'elements <m>'")
    n_el = int(head[1])
    loops = []
    for k in range(n_el):
        idx += 1
        parts = lines[idx].split()
        if int(parts[0]) != k:
            fail(idx + 1, f"element ids must be dense, got {parts[0]}")
        cnt = int(parts[1])
        if len(parts) != 2 + cnt:
            fail(idx + 1, f"expected {cnt} vertex ids")
        loops.append([int(p) for p in parts[2:]])
    mesh = PolygonalMesh(verts, loops, family_tag="loaded", strict=strict)
    mesh.check_conformity()
    return mesh


def meshes_equal(a: PolygonalMesh, b: PolygonalMesh) -> bool:
    if a.n_vertices != b.n_vertices or a.n_elements != b.n_elements:
        return False
    if not np.array_equal(a.vertices, b.vertices):
        return False
    return all(
        np.array_equal(ea.vertex_loop, eb.vertex_loop)
        for ea, eb in zip(a.elements, b.elements)
    )
