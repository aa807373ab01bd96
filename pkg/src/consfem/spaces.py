"""Global finite element spaces built on the smoothed BDFM element.

The host space has three DOFs per interior edge (normal mean, first normal
moment, tangential mean, all against the global edge direction). Every
other velocity space here is a set of columns over those DOFs:

* the divergence-free kernel basis: one vertex function per interior vertex
  and one cell function per interior cell,
* the enriched-linear basis: one function per interior edge plus the cell
  functions,
* the continuous-tangential-mean P1 space: three functions per interior
  vertex.

Columns are assembled cell by cell from local pieces. Each column is checked
on the fly: the two cells sharing an edge must agree on its DOFs, and edges
on the rim of the support must carry zero DOFs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .local import (CellGeometry, NM, coef_div, edge_dofs, generator_w_edge,
                    generator_w_pair, generator_y_pair, monomial_values,
                    p2minus_spanning, potential_w_edge, potential_w_pair,
                    sbdfm_dual)
from .mesh import MeshError, counts_and_layers, patch_geometry, signed_area, vertex_patch
from .quadrature import edge_rule, triangle_rule


class SpaceError(ValueError):
    """A space cannot be built on this mesh (precondition failure)."""


class BasisConsistencyError(RuntimeError):
    """A constructed column is not a member of the host space."""


# --------------------------------------------------------------------------
# per-cell data


@dataclass(frozen=True, eq=False)
class CellData:
    geoms: list
    basis: np.ndarray      # (nc, 9, NM, 2) dual to the globally oriented DOFs
    to_span: np.ndarray    # (nc, 9, 9) DOFs -> coefficients of p2minus_spanning
    gen_dofs: np.ndarray   # (nc, 9, 9) generator x DOF: w_edge 0..2, w_pair 0..2, y 0..2
    span_dofs: np.ndarray  # (nc, 9, 9) spanning field x DOF


GEN_W_EDGE, GEN_W_PAIR, GEN_Y = 0, 3, 6


def cell_data(tri):
    if "cell_data" in tri._cache:
        return tri._cache["cell_data"]
    nc = tri.n_cells
    geoms = [CellGeometry.of(tri, c) for c in range(nc)]
    basis = np.empty((nc, 9, NM, 2))
    to_span = np.empty((nc, 9, 9))
    gen = np.empty((nc, 9, 9))
    span = np.empty((nc, 9, 9))
    for c, g in enumerate(geoms):
        s = tri.cell_edge_signs[c]
        basis[c], to_span[c] = sbdfm_dual(g, s)
        G = np.stack([generator_w_edge(g, i).coef for i in range(3)]
                     + [generator_w_pair(g, i).coef for i in range(3)]
                     + [generator_y_pair(g, i).coef for i in range(3)])
        gen[c] = edge_dofs(G, g, s)
        span[c] = edge_dofs(p2minus_spanning(g), g, s)
    out = CellData(geoms, basis, to_span, gen, span)
    tri._cache["cell_data"] = out
    return out


# --------------------------------------------------------------------------
# DOF map


@dataclass(frozen=True, eq=False)
class DofMap:
    tri: object
    edge_dofs: np.ndarray   # (ne, 3), -1 on boundary edges
    cell_dofs: np.ndarray   # (nc, 9), -1 where constrained to zero
    cell_signs: np.ndarray  # (nc, 3)

    @property
    def ndofs(self):
        return int(self.edge_dofs.max() + 1) if self.edge_dofs.size else 0

    def local_values(self, x):
        """(nc, 9) local DOF values of a free coefficient vector ``x``."""
        xx = np.append(np.asarray(x, dtype=float), 0.0)
        return xx[self.cell_dofs]


def build_sbdfm_space(tri):
    """Edge-major numbering over interior edges; boundary DOFs are fixed to zero."""
    if "dofmap" in tri._cache:
        return tri._cache["dofmap"]
    ed = -np.ones((tri.n_edges, 3), dtype=np.int64)
    interior = tri.interior_edge_ids
    ed[interior] = 3 * np.arange(len(interior))[:, None] + np.arange(3)[None, :]
    cd = ed[tri.cell_edges].reshape(tri.n_cells, 9)
    dm = DofMap(tri, ed, cd, tri.cell_edge_signs.copy())
    tri._cache["dofmap"] = dm
    return dm


# --------------------------------------------------------------------------
# combination matrices


@dataclass(frozen=True, eq=False)
class CombinationMatrix:
    """Columns of a derived basis in host DOF coordinates.

    ``potentials`` is filled for divergence-free bases only: per column a
    dict ``cell -> (w-weights (6,), constant)`` describing the scalar stream
    function whose curl is the column.
    """
    matrix: sp.csc_matrix
    labels: list
    potentials: list | None = field(default=None, repr=False)

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, x):
        return self.matrix @ x

    def column(self, j):
        return self.matrix[:, j].toarray().ravel()

    def export_coo(self, path):
        m = self.matrix.tocoo()
        order = np.lexsort((m.row, m.col))
        with open(path, "w") as fh:
            fh.write(f"# {m.shape[0]} {m.shape[1]} {m.nnz}\n")
            for k in order:
                fh.write(f"{m.row[k]} {m.col[k]} {m.data[k]!r}\n")


def _assemble_column(tri, dm, pieces, label, tol=1e-9):
    """Merge per-cell local DOF vectors into one global column.

    ``pieces`` maps cell -> (9,) local DOFs. Raises if the pieces disagree on
    a shared edge or leave nonzero DOFs on the rim of the support.
    """
    seen = {}
    scale = max(float(np.abs(v).max()) for v in pieces.values())
    scale = max(scale, 1e-300)
    for c, loc in pieces.items():
        for j in range(3):
            e = int(tri.cell_edges[c, j])
            val = loc[3 * j:3 * j + 3]
            if e in seen:
                if np.abs(seen[e][1] - val).max() > tol * scale:
                    raise BasisConsistencyError(
                        f"{label}: cells {seen[e][0]} and {c} disagree on edge {e}: "
                        f"{seen[e][1]} vs {val}")
                seen[e] = (seen[e][0], val, 2)
            else:
                seen[e] = (c, val, 1)
    rows, vals = [], []
    for e, (c, val, count) in seen.items():
        if count == 1 and np.abs(val).max() > tol * scale:
            raise BasisConsistencyError(
                f"{label}: nonzero DOFs {val} on edge {e} at the rim of the support")
        if count == 2:
            for j in range(3):
                if val[j] != 0.0:
                    rows.append(dm.edge_dofs[e, j])
                    vals.append(val[j])
    return np.array(rows, dtype=np.int64), np.array(vals)


def _stack(dm, columns, labels, potentials=None):
    rows = np.concatenate([r for r, _ in columns]) if columns else np.zeros(0, dtype=np.int64)
    vals = np.concatenate([v for _, v in columns]) if columns else np.zeros(0)
    cols = np.concatenate([np.full(len(r), k) for k, (r, _) in enumerate(columns)]) \
        if columns else np.zeros(0, dtype=np.int64)
    M = sp.csc_matrix((vals, (rows, cols)), shape=(dm.ndofs, len(columns)))
    M.sum_duplicates()
    M.sort_indices()
    return CombinationMatrix(M, labels, potentials)


def _local_index(tri, c, v):
    hit = np.flatnonzero(tri.cells[c] == v)
    if len(hit) != 1:
        raise MeshError(f"vertex {v} is not in cell {c}")
    return int(hit[0])


def _edge_local(tri, c, e):
    hit = np.flatnonzero(tri.cell_edges[c] == e)
    if len(hit) != 1:
        raise MeshError(f"edge {e} is not in cell {c}")
    return int(hit[0])


def _opposite(tri, c, a, b):
    """Local index of the vertex of ``c`` that is neither ``a`` nor ``b``."""
    return 3 - _local_index(tri, c, a) - _local_index(tri, c, b)


class _Pieces:
    """Per-cell generator weights, accumulated (coinciding cells simply add)."""

    def __init__(self):
        self.w = {}
        self.const = {}

    def add(self, c, gen, coeff):
        c = int(c)
        if c not in self.w:
            self.w[c] = np.zeros(9)
            self.const[c] = 0.0
        self.w[c][gen] += coeff

    def local_dofs(self, data):
        return {c: w @ data.gen_dofs[c] for c, w in self.w.items()}

    def potential(self):
        return {c: (w[:6].copy(), self.const[c]) for c, w in self.w.items()}


def _require_assumption1(tri):
    counts = counts_and_layers(tri)
    if not counts.assumption1:
        raise SpaceError("every boundary vertex must be connected to an interior vertex")
    return counts


def vertex_function_pieces(tri, v):
    """Generator weights of the divergence-free vertex function of ``v``."""
    patch = vertex_patch(tri, v)
    m = patch.m
    coeff = [patch_geometry(patch, i) for i in range(m)]
    P = _Pieces()
    for i in range(m):
        c = patch.cells[i]
        # spoke i is opposite rim[i-1], spoke i-1 opposite rim[i]
        P.add(c, GEN_W_EDGE + _local_index(tri, c, patch.rim[i - 1]), coeff[i])
        P.add(c, GEN_W_EDGE + _local_index(tri, c, patch.rim[i]), coeff[i - 1])
        P.add(c, GEN_W_PAIR + _local_index(tri, c, v), 1.0)
    return P


def cell_function_pieces(tri, c0):
    """Generator weights of the divergence-free function of interior cell ``c0``."""
    if not tri.interior_cells[c0]:
        raise SpaceError(f"cell {c0} has a boundary edge")
    S0 = tri.areas[c0]
    P = _Pieces()
    for j in range(3):
        e = tri.cell_edges[c0, j]
        cj = tri.neighbor_across(c0, j)
        Sj = tri.areas[cj]
        P.add(cj, GEN_W_EDGE + _edge_local(tri, cj, e), Sj / (Sj + S0))
        P.add(c0, GEN_W_EDGE + j, (Sj - 2.0 * S0) / (3.0 * (Sj + S0)))
        P.add(c0, GEN_W_PAIR + j, 1.0 / 3.0)
    P.const[int(c0)] = -1.0 / 3.0
    return P


def build_kernel_basis(tri, check_assumption=True):
    """Divergence-free basis: vertex functions first (ascending vertex),
    then cell functions (ascending cell)."""
    if check_assumption:
        _require_assumption1(tri)
    dm = build_sbdfm_space(tri)
    data = cell_data(tri)
    cols, labels, pots = [], [], []
    for v in tri.interior_vertex_ids:
        P = vertex_function_pieces(tri, int(v))
        cols.append(_assemble_column(tri, dm, P.local_dofs(data), f"vertex {v}"))
        labels.append(("vertex", int(v)))
        pots.append(P.potential())
    for c in tri.interior_cell_ids:
        P = cell_function_pieces(tri, int(c))
        cols.append(_assemble_column(tri, dm, P.local_dofs(data), f"cell {c}"))
        labels.append(("cell", int(c)))
        pots.append(P.potential())
    return _stack(dm, cols, labels, pots)


# --------------------------------------------------------------------------
# edge functions


@dataclass(frozen=True)
class EdgeFrame:
    """Labelled neighbourhood of an interior edge ``A1 -> A3``.

    ``T1 = (A1, A2, A3)`` lies to the right of the edge and ``T2 = (A1, A3,
    A4)`` to the left; ``T3, T4, T5, T6`` lie across ``A1A2, A1A4, A3A4,
    A2A3`` (``-1`` across boundary edges).
    """
    edge: int
    A: tuple      # (A1, A2, A3, A4) vertex ids
    T: tuple      # (T1, ..., T6)
    sign: int     # +1 if A1 is the lower-index endpoint


def edge_frame(tri, e):
    a, b = (int(x) for x in tri.edges[e])
    ba, bb = tri.boundary_vertices[a], tri.boundary_vertices[b]
    if tri.boundary_edges[e]:
        raise SpaceError(f"edge {e} is a boundary edge")
    if ba and bb:
        raise SpaceError(
            f"interior edge {e} joins two boundary vertices; refine the mesh once")
    A1, A3 = (b, a) if ba else (a, b)
    c0, c1 = (int(x) for x in tri.edge_cells[e])
    T1 = T2 = None
    for c in (c0, c1):
        p = _local_index(tri, c, A1)
        if int(tri.cells[c, (p + 1) % 3]) == A3:
            T2 = c
        else:
            T1 = c
    A2 = int(tri.cells[T1, _opposite(tri, T1, A1, A3)])
    A4 = int(tri.cells[T2, _opposite(tri, T2, A1, A3)])

    def across(c, p, q):
        return tri.neighbor_across(c, _edge_local(tri, c, tri.edge_index(p, q)))

    T3 = across(T1, A1, A2)
    T4 = across(T2, A1, A4)
    T5 = across(T2, A3, A4)
    T6 = across(T1, A2, A3)
    return EdgeFrame(e, (A1, A2, A3, A4), (T1, T2, T3, T4, T5, T6), 1 if A1 == a else -1)


def edge_function_pieces(tri, e):
    """Generator weights of the edge function oriented from ``A1`` to ``A3``.

    Its divergence is ``1/S1`` on ``T1`` and ``-1/S2`` on ``T2``.
    """
    fr = edge_frame(tri, e)
    A1, A2, A3, A4 = fr.A
    T1, T2, T3, T4, T5, T6 = fr.T
    X = tri.vertices
    S = {c: float(tri.areas[c]) for c in fr.T if c >= 0}
    S1, S2 = S[T1], S[T2]

    def w_edge(c, p, q):
        return GEN_W_EDGE + _opposite(tri, c, p, q)

    def at(c, v, base):
        return base + _local_index(tri, c, v)

    c3 = signed_area(X[A2], X[A3], X[A4]) / (S1 + S2)
    P = _Pieces()
    if tri.boundary_vertices[A3]:
        S3, S4 = S[T3], S[T4]
        k2 = np.dot(X[A1] - X[A2], X[A3] - X[A2]) / np.dot(X[A3] - X[A2], X[A3] - X[A2])
        k4 = np.dot(X[A1] - X[A4], X[A3] - X[A4]) / np.dot(X[A3] - X[A4], X[A3] - X[A4])
        P.add(T3, w_edge(T3, A1, A2), S3 / (S3 + S1))
        P.add(T1, at(T1, A1, GEN_Y), 1.0)
        P.add(T1, at(T1, A1, GEN_W_PAIR), k2)
        P.add(T1, w_edge(T1, A1, A2), S3 / (S3 + S1))
        P.add(T1, w_edge(T1, A1, A3), c3 - 1.0)
        P.add(T2, at(T2, A1, GEN_Y), -1.0)
        P.add(T2, at(T2, A1, GEN_W_PAIR), k4)
        P.add(T2, w_edge(T2, A1, A4), S4 / (S4 + S2))
        P.add(T2, w_edge(T2, A1, A3), c3 - 1.0)
        P.add(T4, w_edge(T4, A1, A4), S4 / (S4 + S2))
    else:
        S3, S4, S5, S6 = S[T3], S[T4], S[T5], S[T6]
        c1 = signed_area(X[A4], X[A1], X[A2]) / (S1 + S2)
        d2 = np.dot(X[A3] - X[A1], X[A3] - X[A1])
        k3 = np.dot(X[A2] - X[A3], X[A1] - X[A3]) / d2
        k1 = np.dot(X[A4] - X[A1], X[A3] - X[A1]) / d2
        mid = (c3 - c1) / 2.0
        P.add(T3, w_edge(T3, A1, A2), S3 / (2 * (S3 + S1)))
        P.add(T4, w_edge(T4, A1, A4), S4 / (2 * (S4 + S2)))
        P.add(T1, w_edge(T1, A1, A2), S3 / (2 * (S3 + S1)) - 1.0)
        P.add(T1, w_edge(T1, A2, A3), 1.0 - S6 / (2 * (S6 + S1)))
        P.add(T1, w_edge(T1, A1, A3), mid)
        P.add(T1, at(T1, A2, GEN_W_PAIR), k3 - 0.5)
        P.add(T1, at(T1, A1, GEN_W_PAIR), 0.5)
        P.add(T1, at(T1, A3, GEN_W_PAIR), -0.5)
        P.add(T1, at(T1, A2, GEN_Y), 1.0)
        P.add(T2, w_edge(T2, A1, A4), S4 / (2 * (S4 + S2)) - 1.0)
        P.add(T2, w_edge(T2, A3, A4), 1.0 - S5 / (2 * (S5 + S2)))
        P.add(T2, w_edge(T2, A1, A3), mid)
        P.add(T2, at(T2, A4, GEN_W_PAIR), 0.5 - k1)
        P.add(T2, at(T2, A1, GEN_W_PAIR), 0.5)
        P.add(T2, at(T2, A3, GEN_W_PAIR), -0.5)
        P.add(T2, at(T2, A4, GEN_Y), -1.0)
        P.add(T5, w_edge(T5, A3, A4), -S5 / (2 * (S5 + S2)))
        P.add(T6, w_edge(T6, A2, A3), -S6 / (2 * (S6 + S1)))
    return fr, P


def build_el_basis(tri, check_assumption=True):
    """Enriched-linear basis: edge functions (ascending interior edge, each
    oriented from its lower-index endpoint, i.e. multiplied by the frame
    sign) followed by the cell functions of :func:`build_kernel_basis`."""
    if check_assumption:
        _require_assumption1(tri)
    dm = build_sbdfm_space(tri)
    data = cell_data(tri)
    cols, labels = [], []
    for e in tri.interior_edge_ids:
        fr, P = edge_function_pieces(tri, int(e))
        r, v = _assemble_column(tri, dm, P.local_dofs(data), f"edge {e}")
        cols.append((r, fr.sign * v))
        labels.append(("edge", int(e)))
    for c in tri.interior_cell_ids:
        P = cell_function_pieces(tri, int(c))
        cols.append(_assemble_column(tri, dm, P.local_dofs(data), f"cell {c}"))
        labels.append(("cell", int(c)))
    return _stack(dm, cols, labels)


# --------------------------------------------------------------------------
# piecewise-linear space with continuous tangential means


def _patch_p1_modes(tri, v, data, dm):
    """Nullspace of the bubble coefficients over the spoke DOFs of patch ``v``.

    Returns (spoke edges, modes (3m, k)) in spoke-DOF coordinates.
    """
    patch = vertex_patch(tri, v)
    m = patch.m
    spoke_pos = {e: i for i, e in enumerate(patch.spokes)}
    C = np.zeros((3 * m, 3 * m))
    for i, c in enumerate(patch.cells):
        sel = np.zeros((9, 3 * m))
        for j in range(3):
            e = int(tri.cell_edges[c, j])
            if e in spoke_pos:
                k = spoke_pos[e]
                sel[3 * j:3 * j + 3, 3 * k:3 * k + 3] = np.eye(3)
        C[3 * i:3 * i + 3] = data.to_span[c][6:9] @ sel
    U, s, Vt = np.linalg.svd(C)
    tol = 1e-10 * max(s[0], 1e-300)
    null = Vt[np.sum(s > tol):].T
    return patch, null


def build_p1div_space(tri):
    """Three columns per interior vertex: ``l_A e_x``, ``l_A e_y`` and the
    remaining patch mode (orthogonal to the first two in DOF coordinates,
    scaled to unit max-norm with a positive largest entry)."""
    dm = build_sbdfm_space(tri)
    data = cell_data(tri)
    cols, labels = [], []
    for v in tri.interior_vertex_ids:
        v = int(v)
        hats = []
        for comp in range(2):
            pieces = {}
            for c in tri.vertex_cells()[v]:
                i = _local_index(tri, c, v)
                pieces[c] = data.span_dofs[c][2 * i + comp]
            r, val = _assemble_column(tri, dm, pieces, f"hat {v}/{comp}")
            cols.append((r, val))
            labels.append(("hat_x" if comp == 0 else "hat_y", v))
            hats.append(pieces)
        patch, null = _patch_p1_modes(tri, v, data, dm)
        if null.shape[1] != 3:
            raise SpaceError(
                f"vertex {v}: piecewise-linear patch space has dimension {null.shape[1]}, expected 3")
        H = np.zeros((3 * patch.m, 2))
        for k, e in enumerate(patch.spokes):
            c = patch.cells[k]
            j = _edge_local(tri, c, e)
            for comp in range(2):
                H[3 * k:3 * k + 3, comp] = hats[comp][c][3 * j:3 * j + 3]
        # component of the nullspace orthogonal to both hats
        Q, _ = np.linalg.qr(H)
        R = null - Q @ (Q.T @ null)
        U, s, _ = np.linalg.svd(R, full_matrices=False)
        mode = U[:, 0]
        mode = mode / mode[np.argmax(np.abs(mode))]
        rows, vals = [], []
        for k, e in enumerate(patch.spokes):
            for j in range(3):
                if mode[3 * k + j] != 0.0:
                    rows.append(dm.edge_dofs[e, j])
                    vals.append(mode[3 * k + j])
        cols.append((np.array(rows, dtype=np.int64), np.array(vals)))
        labels.append(("mode3", v))
    return _stack(dm, cols, labels)


def patch_p1_dimension(tri, v):
    """Dimension of the piecewise-linear space on the patch of ``v``."""
    _, null = _patch_p1_modes(tri, v, cell_data(tri), build_sbdfm_space(tri))
    return null.shape[1]


# --------------------------------------------------------------------------
# interpolation and evaluation


@dataclass(frozen=True, eq=False)
class FieldCoefficients:
    space: str
    values: np.ndarray


def edge_moments(tri, f, degree=19):
    """(ne, 3) DOF values of a callable field on every edge (global orientation)."""
    rule = edge_rule(degree)
    X = tri.vertices
    p, q = X[tri.edges[:, 0]], X[tri.edges[:, 1]]
    t = q - p
    L = np.hypot(t[:, 0], t[:, 1])
    t = t / L[:, None]
    n = np.stack([t[:, 1], -t[:, 0]], axis=1)
    s = rule.points
    pts = (p[:, None, :] * ((1 - s) / 2)[None, :, None]
           + q[:, None, :] * ((1 + s) / 2)[None, :, None])
    flat = pts.reshape(-1, 2)
    vals = np.asarray(f(flat[:, 0], flat[:, 1]), dtype=float).reshape(len(p), len(s), 2)
    vn = np.einsum("eqc,ec->eq", vals, n)
    vt = np.einsum("eqc,ec->eq", vals, t)
    out = np.empty((len(p), 3))
    out[:, 0] = vn @ rule.weights
    out[:, 1] = 3.0 * (vn * s[None, :]) @ rule.weights
    out[:, 2] = vt @ rule.weights
    return out


def interpolate(tri, dofmap, f, degree=19):
    """Canonical interpolant; boundary DOFs are dropped (homogeneous space)."""
    mom = edge_moments(tri, f, degree)
    interior = tri.interior_edge_ids
    x = np.zeros(dofmap.ndofs)
    x[dofmap.edge_dofs[interior].ravel()] = mom[interior].ravel()
    return FieldCoefficients("sbdfm", x)


def cell_coefs(tri, x, dofmap=None):
    """(nc, NM, 2) polynomial coefficients of a host-space field."""
    dm = dofmap or build_sbdfm_space(tri)
    loc = dm.local_values(x)
    return np.einsum("cb,cbmk->cmk", loc, cell_data(tri).basis)


def evaluate_field(tri, x, point, C=None):
    """Value and divergence of a field at ``point``.

    ``x`` are host coefficients, or derived coefficients when the
    combination matrix ``C`` is given.
    """
    if C is not None:
        x = C.matrix @ x
    c = tri.locate(point)
    dm = build_sbdfm_space(tri)
    data = cell_data(tri)
    loc = dm.local_values(x)[c]
    coef = np.einsum("b,bmk->mk", loc, data.basis[c])
    g = data.geoms[c]
    bary = g.to_barycentric(np.asarray(point, dtype=float))
    mv = monomial_values(bary)
    val = (mv @ coef)[0]
    div = (mv @ coef_div(coef[None], g)[0])[0]
    return val, div


@dataclass(frozen=True)
class MembershipReport:
    div_constancy: float
    normal_linearity: float
    continuity: float
    boundary: float

    def max_residual(self):
        return max(self.div_constancy, self.normal_linearity, self.continuity, self.boundary)


def verify_el_membership(tri, x):
    """Residuals of the enriched-linear membership criteria for a host field.

    (a) spread of the elementwise divergence, (b) quadratic part of the
    normal component on every edge, (c) jump of the edge DOFs between the two
    cells, (d) DOFs on boundary edges. Residuals are relative: (a) to the
    largest divergence (at least ``max|x| / h``), (b)-(d) to the largest DOF magnitude.
    """
    dm = build_sbdfm_space(tri)
    data = cell_data(tri)
    coefs = cell_coefs(tri, x, dm)
    rule = triangle_rule(6)
    mv = monomial_values(rule.points)
    div_res = 0.0
    div_max = 0.0
    lin_res = 0.0
    side = {}
    for c, g in enumerate(data.geoms):
        d = mv @ coef_div(coefs[c][None], g)[0]
        div_res = max(div_res, float(d.max() - d.min()))
        div_max = max(div_max, float(np.abs(d).max()))
        for i in range(3):
            b = g.edge_bary(i, [-1.0, 0.0, 1.0])
            vn = monomial_values(b) @ coefs[c] @ g.normals[i]
            lin_res = max(lin_res, abs(vn[1] - 0.5 * (vn[0] + vn[2])))
        dof = edge_dofs(coefs[c][None], g, tri.cell_edge_signs[c])[0]
        for j in range(3):
            side.setdefault(int(tri.cell_edges[c, j]), []).append(dof[3 * j:3 * j + 3])
    cont = 0.0
    bnd = 0.0
    for e, vals in side.items():
        if len(vals) == 2:
            cont = max(cont, float(np.abs(vals[0] - vals[1]).max()))
        else:
            bnd = max(bnd, float(np.abs(vals[0]).max()))
    scale = max(float(np.abs(x).max()) if len(x) else 0.0, 1e-300)
    # a divergence-free field has only rounding noise in div_max; measure
    # against the divergence a field of this size could have instead
    div_ref = max(div_max, scale / tri.h())
    return MembershipReport(div_res / div_ref, lin_res / scale,
                            cont / scale, bnd / scale)
