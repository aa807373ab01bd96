"""Triangulations: topology, red refinement, patches and mesh generators.

Conventions used throughout the package:

* cells are stored counterclockwise; local edge ``i`` of a cell is the edge
  opposite local vertex ``i``, traversed from local vertex ``i+1`` to ``i+2``;
* a global edge runs from its lower vertex index to its higher one, with unit
  normal ``n = (t_y, -t_x)``; ``cell_edge_signs[c, i]`` is ``+1`` when that
  direction agrees with the counterclockwise traversal of cell ``c``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Invalid mesh input or a topological precondition that does not hold."""


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def signed_area(p0, p1, p2):
    """Signed area of the triangle ``(p0, p1, p2)``; positive if counterclockwise."""
    p0, p1, p2 = np.asarray(p0), np.asarray(p1), np.asarray(p2)
    u = p1 - p0
    v = p2 - p0
    return 0.5 * (u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])


@dataclass(frozen=True, eq=False)
class Triangulation:
    vertices: np.ndarray          # (nv, 2)
    cells: np.ndarray             # (nc, 3), counterclockwise
    edges: np.ndarray             # (ne, 2), lower index first, lexicographic
    cell_edges: np.ndarray        # (nc, 3), local edge i opposite local vertex i
    cell_edge_signs: np.ndarray   # (nc, 3), +1 / -1
    edge_cells: np.ndarray        # (ne, 2), second entry -1 on boundary edges
    boundary_vertices: np.ndarray  # (nv,) bool
    boundary_edges: np.ndarray     # (ne,) bool
    interior_cells: np.ndarray     # (nc,) bool, all three edges interior
    areas: np.ndarray              # (nc,)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def interior_vertex_ids(self):
        return np.flatnonzero(~self.boundary_vertices)

    @property
    def interior_edge_ids(self):
        return np.flatnonzero(~self.boundary_edges)

    @property
    def interior_cell_ids(self):
        return np.flatnonzero(self.interior_cells)

    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def h(self):
        """Mesh size: the longest edge."""
        return float(self.edge_lengths().max())

    def vertex_cells(self):
        """Incident cells of every vertex (lists, ascending cell index)."""
        if "vertex_cells" not in self._cache:
            out = [[] for _ in range(self.n_vertices)]
            for c, cell in enumerate(self.cells):
                for v in cell:
                    out[v].append(c)
            self._cache["vertex_cells"] = out
        return self._cache["vertex_cells"]

    def vertex_neighbors(self):
        if "vertex_neighbors" not in self._cache:
            out = [set() for _ in range(self.n_vertices)]
            for a, b in self.edges:
                out[a].add(int(b))
                out[b].add(int(a))
            self._cache["vertex_neighbors"] = [sorted(s) for s in out]
        return self._cache["vertex_neighbors"]

    def edge_index(self, a, b):
        """Global index of the edge joining vertices ``a`` and ``b``."""
        if "edge_lookup" not in self._cache:
            self._cache["edge_lookup"] = {
                (int(p), int(q)): e for e, (p, q) in enumerate(self.edges)}
        key = (min(a, b), max(a, b))
        try:
            return self._cache["edge_lookup"][key]
        except KeyError:
            raise MeshError(f"no edge between vertices {a} and {b}") from None

    def neighbor_across(self, c, local_edge):
        """Cell across local edge ``local_edge`` of cell ``c`` (or -1)."""
        e = self.cell_edges[c, local_edge]
        c0, c1 = self.edge_cells[e]
        return int(c1) if c0 == c else int(c0)

    def locate(self, point, tol=1e-12):
        """Index of a cell containing ``point`` (brute-force scan)."""
        p = np.asarray(point, dtype=float)
        x = self.vertices[self.cells]
        lam = _barycentric_all(x, p)
        inside = np.all(lam >= -tol, axis=1)
        hits = np.flatnonzero(inside)
        if len(hits) == 0:
            raise MeshError(f"point {tuple(p)} lies outside the mesh")
        return int(hits[0])


def _barycentric_all(x, p):
    # x: (nc, 3, 2) cell vertices, p: (2,)
    s = signed_area(x[:, 0], x[:, 1], x[:, 2])
    l0 = signed_area(p, x[:, 1], x[:, 2]) / s
    l1 = signed_area(x[:, 0], p, x[:, 2]) / s
    return np.stack([l0, l1, 1.0 - l0 - l1], axis=1)


def build_triangulation(vertices, cells, area_tol=1e-14):
    """Build a :class:`Triangulation` with all derived topology.

    Clockwise cells are reordered. Raises :class:`MeshError` on index
    errors, degenerate or duplicate cells and non-manifold edges.
    """
    V = np.asarray(vertices, dtype=float).reshape(-1, 2)
    C = np.array(cells, dtype=np.int64).reshape(-1, 3)
    if len(C) == 0:
        raise MeshError("a triangulation needs at least one cell")
    if not np.all(np.isfinite(V)):
        raise MeshError("vertex coordinates must be finite")
    if C.min() < 0 or C.max() >= len(V):
        raise MeshError("cell vertex index out of range")
    if np.any((C[:, 0] == C[:, 1]) | (C[:, 1] == C[:, 2]) | (C[:, 0] == C[:, 2])):
        raise MeshError("cell with repeated vertex")
    sorted_cells = np.sort(C, axis=1)
    if len(np.unique(sorted_cells, axis=0)) != len(C):
        raise MeshError("duplicate cell")

    area = signed_area(V[C[:, 0]], V[C[:, 1]], V[C[:, 2]])
    flip = area < 0
    C[flip] = C[flip][:, [0, 2, 1]]
    area = np.abs(area)
    scale = max(np.ptp(V[:, 0]), np.ptp(V[:, 1]), 1e-300) ** 2
    if np.any(area <= area_tol * scale):
        bad = int(np.flatnonzero(area <= area_tol * scale)[0])
        raise MeshError(f"degenerate cell {bad}")

    # local edge i joins local vertices i+1 and i+2
    a = C[:, [1, 2, 0]]
    b = C[:, [2, 0, 1]]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    pairs = np.stack([lo.ravel(), hi.ravel()], axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    cell_edges = inverse.reshape(-1, 3)
    signs = np.where(a < b, 1, -1).astype(np.int64)

    ne = len(edges)
    counts = np.bincount(inverse, minlength=ne)
    if counts.max() > 2:
        bad = int(np.argmax(counts))
        raise MeshError(f"non-manifold edge {tuple(edges[bad])}")
    edge_cells = -np.ones((ne, 2), dtype=np.int64)
    slot = np.zeros(ne, dtype=np.int64)
    owner = np.repeat(np.arange(len(C)), 3)
    for k, e in enumerate(inverse):
        edge_cells[e, slot[e]] = owner[k]
        slot[e] += 1
    # two cells sharing an edge must traverse it in opposite directions
    two = counts == 2
    sum_sign = np.zeros(ne, dtype=np.int64)
    np.add.at(sum_sign, inverse, signs.ravel())
    if np.any(sum_sign[two] != 0):
        raise MeshError("inconsistent orientation across an edge (mesh is not a 2-manifold)")

    boundary_edges = counts == 1
    boundary_vertices = np.zeros(len(V), dtype=bool)
    boundary_vertices[edges[boundary_edges].ravel()] = True
    interior_cells = ~np.any(boundary_edges[cell_edges], axis=1)

    return Triangulation(
        vertices=_frozen(V), cells=_frozen(C), edges=_frozen(edges),
        cell_edges=_frozen(cell_edges), cell_edge_signs=_frozen(signs),
        edge_cells=_frozen(edge_cells), boundary_vertices=_frozen(boundary_vertices),
        boundary_edges=_frozen(boundary_edges), interior_cells=_frozen(interior_cells),
        areas=_frozen(area))


def uniform_refine(tri):
    """Red refinement: every cell is split into four congruent children.

    New vertex numbering: the original vertices, then one midpoint per edge
    in edge order.
    """
    nv = tri.n_vertices
    mid = 0.5 * (tri.vertices[tri.edges[:, 0]] + tri.vertices[tri.edges[:, 1]])
    V = np.vstack([tri.vertices, mid])
    m = nv + tri.cell_edges  # midpoint of local edge i is opposite local vertex i
    a0, a1, a2 = tri.cells[:, 0], tri.cells[:, 1], tri.cells[:, 2]
    m0, m1, m2 = m[:, 0], m[:, 1], m[:, 2]
    children = np.stack([
        np.stack([a0, m2, m1], axis=1),
        np.stack([a1, m0, m2], axis=1),
        np.stack([a2, m1, m0], axis=1),
        np.stack([m0, m1, m2], axis=1),
    ], axis=1).reshape(-1, 3)
    return build_triangulation(V, children)


def refine(tri, times):
    for _ in range(times):
        tri = uniform_refine(tri)
    return tri


# --------------------------------------------------------------------------
# patches


@dataclass(frozen=True)
class VertexPatch:
    """Cells around an interior vertex, ordered counterclockwise.

    Cell ``cells[i]`` has vertices ``(center, rim[i-1], rim[i])``; spoke
    ``spokes[i]`` joins the center to ``rim[i]`` and separates ``cells[i]``
    from ``cells[i+1]``; ``rim_edges[i]`` is the edge of ``cells[i]``
    opposite the center. Indices are taken modulo ``m``.
    """
    center: int
    cells: tuple
    spokes: tuple
    rim: tuple
    rim_edges: tuple
    areas: tuple
    rim_points: np.ndarray
    center_point: np.ndarray

    @property
    def m(self):
        return len(self.cells)


@dataclass(frozen=True)
class CellPatch:
    """An interior cell and its three neighbours (``neighbors[j]`` across local edge ``j``)."""
    center: int
    neighbors: tuple
    center_area: float
    neighbor_areas: tuple


def vertex_patch(tri, v):
    if tri.boundary_vertices[v]:
        raise MeshError(f"vertex {v} is on the boundary; no closed patch")
    incident = tri.vertex_cells()[v]
    by_next = {}
    for c in incident:
        p = int(np.flatnonzero(tri.cells[c] == v)[0])
        nxt = int(tri.cells[c, (p + 1) % 3])
        by_next[nxt] = c
    start = min(incident)
    cells, rim = [], []
    c = start
    for _ in range(len(incident)):
        p = int(np.flatnonzero(tri.cells[c] == v)[0])
        prv = int(tri.cells[c, (p + 2) % 3])
        cells.append(c)
        rim.append(prv)
        c = by_next.get(prv)
        if c is None:
            raise MeshError(f"cells around vertex {v} do not close up")
    if c != start or len(set(cells)) != len(incident):
        raise MeshError(f"cells around vertex {v} do not form a single cycle")
    m = len(cells)
    if m < 3:
        raise MeshError(f"vertex {v} has fewer than three incident cells")
    spokes = tuple(tri.edge_index(v, rim[i]) for i in range(m))
    rim_edges = tuple(tri.edge_index(rim[i - 1], rim[i]) for i in range(m))
    return VertexPatch(
        center=int(v), cells=tuple(cells), spokes=spokes, rim=tuple(rim),
        rim_edges=rim_edges, areas=tuple(float(tri.areas[c]) for c in cells),
        rim_points=tri.vertices[list(rim)].copy(),
        center_point=tri.vertices[v].copy())


def cell_patch(tri, c):
    if not tri.interior_cells[c]:
        raise MeshError(f"cell {c} has a boundary edge; no interior cell patch")
    nbrs = tuple(tri.neighbor_across(c, j) for j in range(3))
    return CellPatch(center=int(c), neighbors=nbrs,
                     center_area=float(tri.areas[c]),
                     neighbor_areas=tuple(float(tri.areas[n]) for n in nbrs))


def patch_geometry(patch, i):
    """Coefficient attached to spoke ``i`` of a vertex patch.

    Equals ``d d sin(angle) / (2 (S_i + S_{i+1}))`` where the two rim edges
    meeting at ``rim[i]`` have lengths ``d`` and enclose ``angle``; evaluated
    as a signed triangle area, so reflex rim corners give negative values.
    """
    m = patch.m
    A = patch.rim_points
    tri_area = signed_area(A[(i - 1) % m], A[i % m], A[(i + 1) % m])
    return float(tri_area / (patch.areas[i % m] + patch.areas[(i + 1) % m]))


# --------------------------------------------------------------------------
# counts and layers


@dataclass(frozen=True)
class MeshCounts:
    n_vertices: int
    n_interior_vertices: int
    n_boundary_vertices: int
    n_edges: int
    n_interior_edges: int
    n_boundary_edges: int
    n_cells: int
    n_interior_cells: int
    layer: dict            # interior vertex -> layer index (1-based)
    number_of_layers: int
    assumption1: bool
    cell_identity: bool    # #T^i == 2 #X^i - 2
    euler: int             # #X - #E + #T
    boundary_boundary_edges: tuple  # interior edges with both endpoints on the boundary

    def as_dict(self):
        return {
            "vertices": self.n_vertices, "interior_vertices": self.n_interior_vertices,
            "boundary_vertices": self.n_boundary_vertices, "edges": self.n_edges,
            "interior_edges": self.n_interior_edges, "boundary_edges": self.n_boundary_edges,
            "cells": self.n_cells, "interior_cells": self.n_interior_cells,
            "layers": self.number_of_layers, "assumption1": self.assumption1,
            "interior_cells_identity": self.cell_identity, "euler": self.euler,
            "interior_edges_with_two_boundary_ends": len(self.boundary_boundary_edges),
        }


def counts_and_layers(tri):
    bv = tri.boundary_vertices
    be = tri.boundary_edges
    nbrs = [[] for _ in range(tri.n_vertices)]
    for e, (a, b) in enumerate(tri.edges):
        if not be[e]:
            nbrs[a].append(int(b))
            nbrs[b].append(int(a))
    layer = {}
    queue = deque()
    for v in np.flatnonzero(bv):
        for w in nbrs[v]:
            if not bv[w] and w not in layer:
                layer[w] = 1
                queue.append(w)
    while queue:
        v = queue.popleft()
        for w in nbrs[v]:
            if not bv[w] and w not in layer:
                layer[w] = layer[v] + 1
                queue.append(w)
    n_int = int((~bv).sum())
    assumption1 = all(any(not bv[w] for w in nbrs[v]) for v in np.flatnonzero(bv))
    n_int_cells = int(tri.interior_cells.sum())
    bb = tuple(int(e) for e in np.flatnonzero(~be)
               if bv[tri.edges[e, 0]] and bv[tri.edges[e, 1]])
    return MeshCounts(
        n_vertices=tri.n_vertices, n_interior_vertices=n_int,
        n_boundary_vertices=int(bv.sum()), n_edges=tri.n_edges,
        n_interior_edges=int((~be).sum()), n_boundary_edges=int(be.sum()),
        n_cells=tri.n_cells, n_interior_cells=n_int_cells,
        layer=layer, number_of_layers=max(layer.values(), default=0),
        assumption1=bool(assumption1), cell_identity=n_int_cells == 2 * n_int - 2,
        euler=tri.n_vertices - tri.n_edges + tri.n_cells,
        boundary_boundary_edges=bb)


# --------------------------------------------------------------------------
# generators

HEXAGON = np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 0.5], [1.0, 1.0],
                    [0.5, 1.0], [0.0, 0.5]])


def appendix_hexagon():
    """Six-cell fan on the unit square with two opposite corners cut off."""
    V = np.vstack([HEXAGON, [[0.5, 0.5]]])
    C = [(6, i, (i + 1) % 6) for i in range(6)]
    return build_triangulation(V, C)


def square_crisscross(n):
    """Unit square, ``n x n`` squares each split by both diagonals."""
    if n < 1:
        raise MeshError("n must be positive")
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g, indexing="xy")
    corners = np.stack([X.ravel(), Y.ravel()], axis=1)
    cg = (g[:-1] + g[1:]) / 2
    CX, CY = np.meshgrid(cg, cg, indexing="xy")
    centers = np.stack([CX.ravel(), CY.ravel()], axis=1)
    V = np.vstack([corners, centers])
    off = len(corners)
    cells = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10 = v00 + 1
            v01 = v00 + n + 1
            v11 = v01 + 1
            c = off + j * n + i
            cells += [(v00, v10, c), (v10, v11, c), (v11, v01, c), (v01, v00, c)]
    return build_triangulation(V, cells)


def square_diagonal_example():
    """Unit square on a 4x4 grid with one diagonal per square.

    Diagonals run along (1, 1) except in the top-left and bottom-right
    corner squares, which use the other diagonal so that no cell has two
    boundary edges.
    """
    n = 4
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g, indexing="xy")
    V = np.stack([X.ravel(), Y.ravel()], axis=1)
    cells = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10, v01 = v00 + 1, v00 + n + 1
            v11 = v01 + 1
            if (i, j) in ((0, n - 1), (n - 1, 0)):
                cells += [(v00, v10, v01), (v10, v11, v01)]
            else:
                cells += [(v00, v10, v11), (v00, v11, v01)]
    return build_triangulation(V, cells)


def perturbed(base, magnitude, seed, max_tries=50):
    """Move interior vertices randomly by at most ``magnitude`` times the
    shortest incident edge; deterministic for a given seed."""
    if not 0.0 <= magnitude < 0.3:
        raise MeshError("perturbation magnitude must lie in [0, 0.3)")
    rng = np.random.default_rng(seed)
    lengths = base.edge_lengths()
    local = np.full(base.n_vertices, np.inf)
    np.minimum.at(local, base.edges[:, 0], lengths)
    np.minimum.at(local, base.edges[:, 1], lengths)
    interior = base.interior_vertex_ids
    for _ in range(max_tries):
        r = magnitude * local[interior] * np.sqrt(rng.uniform(size=len(interior)))
        phi = rng.uniform(0.0, 2 * np.pi, size=len(interior))
        V = base.vertices.copy()
        V[interior, 0] += r * np.cos(phi)
        V[interior, 1] += r * np.sin(phi)
        x = V[base.cells]
        if np.all(signed_area(x[:, 0], x[:, 1], x[:, 2]) > 0):
            return build_triangulation(V, base.cells)
    raise MeshError("perturbation keeps inverting cells; lower the magnitude")


def generate_mesh(kind, n=2, base=None, magnitude=0.1, seed=0, refine_base=0):
    """Named generators: ``appendix_hexagon``, ``square_crisscross``,
    ``square_diagonal``, ``example2`` (once-refined hexagon) and
    ``perturbed`` (of ``base``, default the twice-refined hexagon)."""
    if kind == "appendix_hexagon":
        return appendix_hexagon()
    if kind == "square_crisscross":
        return square_crisscross(n)
    if kind == "square_diagonal":
        return square_diagonal_example()
    if kind == "example2":
        return uniform_refine(appendix_hexagon())
    if kind == "perturbed":
        if base is None:
            base = refine(appendix_hexagon(), 2)
        return perturbed(refine(base, refine_base), magnitude, seed)
    raise MeshError(f"unknown mesh kind {kind!r}")


# --------------------------------------------------------------------------
# text format


def write_mesh(tri, path):
    lines = [f"{tri.n_vertices} {tri.n_cells}"]
    lines += [f"{float(x)!r} {float(y)!r}" for x, y in tri.vertices]
    lines += [f"{a} {b} {c}" for a, b, c in tri.cells]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path):
    rows = []
    for raw in Path(path).read_text().splitlines():
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        rows.append(s.split())
    if not rows or len(rows[0]) != 2:
        raise MeshError(f"{path}: header must be 'nv nc'")
    nv, nc = int(rows[0][0]), int(rows[0][1])
    if len(rows) != 1 + nv + nc:
        raise MeshError(f"{path}: expected {nv} vertex and {nc} cell lines")
    V = np.array([[float(t) for t in r] for r in rows[1:1 + nv]])
    C = np.array([[int(t) for t in r] for r in rows[1 + nv:]], dtype=np.int64)
    return build_triangulation(V, C)
