"""Sparse operators, loads and error norms for the host space and its reductions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .local import NM, monomial_values, potential_w_edge, potential_w_pair
from .quadrature import DATA_DEGREE, OPERATOR_DEGREE, triangle_rule
from .spaces import (build_el_basis, build_kernel_basis, build_p1div_space,
                     build_sbdfm_space, cell_data)

PAIRS = ("sbdfm-p1", "el-p0", "p1-p0")


# --------------------------------------------------------------------------
# element matrices


def _basis_at(tri, rule):
    """Values (nc, 9, nq, 2), gradients (nc, 9, nq, 2, 2) and divergences
    (nc, 9, nq) of the host basis at the points of ``rule``."""
    data = cell_data(tri)
    mv = monomial_values(rule.points)
    D = np.stack([g.cart_diff for g in data.geoms])           # (nc, 2, NM, NM)
    vals = np.einsum("qm,cbmk->cbqk", mv, data.basis)
    dcoef = np.einsum("cdmn,cbnk->cbdmk", D, data.basis)       # d/dx_d of component k
    grads = np.einsum("qm,cbdmk->cbqkd", mv, dcoef)
    div = grads[..., 0, 0] + grads[..., 1, 1]
    return vals, grads, div


def element_matrices(tri):
    """Cellwise gradgrad, mass, div-P1 and div-P0 matrices (cached)."""
    if "element_matrices" in tri._cache:
        return tri._cache["element_matrices"]
    rule = triangle_rule(OPERATOR_DEGREE)
    vals, grads, div = _basis_at(tri, rule)
    w = rule.weights[None, :] * tri.areas[:, None]              # (nc, nq)
    K = np.einsum("cq,caqkd,cbqkd->cab", w, grads, grads)
    M = np.einsum("cq,caqk,cbqk->cab", w, vals, vals)
    lam = rule.points                                          # (nq, 3)
    B1 = np.einsum("cq,qi,cbq->cib", w, lam, div)
    B0 = np.einsum("cq,cbq->cb", w, div)[:, None, :]
    out = dict(gradgrad=K, mass=M, div_p1=B1, div_p0=B0)
    tri._cache["element_matrices"] = out
    return out


def _scatter(rows, cols, blocks, shape):
    r = np.broadcast_to(rows[:, :, None], blocks.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], blocks.shape).ravel()
    v = blocks.ravel()
    keep = (r >= 0) & (c >= 0)
    A = sp.coo_matrix((v[keep], (r[keep], c[keep])), shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def pressure_dofs(tri, kind):
    nc = tri.n_cells
    if kind == "p1":
        return np.arange(3 * nc).reshape(nc, 3)
    if kind == "p0":
        return np.arange(nc)[:, None]
    raise ValueError(f"unknown pressure space {kind!r}")


def assemble(tri, kind, pressure="p1"):
    """Host-space operator.

    ``kind`` is one of ``gradgrad``, ``mass`` (velocity x velocity), ``div``
    (pressure rows x velocity columns, entries ``int div(v) q``) or
    ``pressure_mass``. Pressures are discontinuous, ``p1`` per cell in the
    barycentric basis or ``p0``.
    """
    dm = build_sbdfm_space(tri)
    n = dm.ndofs
    if kind in ("gradgrad", "mass"):
        E = element_matrices(tri)[kind]
        return _scatter(dm.cell_dofs, dm.cell_dofs, E, (n, n))
    P = pressure_dofs(tri, pressure)
    npres = P.size
    if kind == "div":
        E = element_matrices(tri)["div_" + pressure]
        return _scatter(P, dm.cell_dofs, E, (npres, n))
    if kind == "pressure_mass":
        return pressure_mass(tri, pressure)
    raise ValueError(f"unknown operator kind {kind!r}")


def pressure_mass(tri, kind):
    S = tri.areas
    if kind == "p0":
        return sp.diags(S).tocsr()
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    P = pressure_dofs(tri, "p1")
    return _scatter(P, P, S[:, None, None] * local[None], (P.size, P.size))


def pressure_means(tri, kind):
    """Row vector ``r`` with ``r @ p`` the integral of the pressure ``p``."""
    if kind == "p0":
        return tri.areas.copy()
    return np.repeat(tri.areas / 3.0, 3)


# --------------------------------------------------------------------------
# reductions


def reduce(op, C, D=None):
    """``C^T op C`` (or ``C^T op D``); ``C``/``D`` are combination matrices,
    sparse matrices or ``None`` for the identity."""
    def mat(X):
        return None if X is None else getattr(X, "matrix", X)
    Cm, Dm = mat(C), mat(D)
    if Dm is None:
        Dm = Cm
    R = op if Dm is None else op @ Dm
    if Cm is not None:
        R = Cm.T @ R
    return sp.csr_matrix(R)


def reduce_rect(B, C):
    """Reduce only the velocity (column) side of a pressure x velocity operator."""
    return sp.csr_matrix(B @ getattr(C, "matrix", C))


def reduce_load(v, C):
    return getattr(C, "matrix", C).T @ v


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """Operators of a (velocity, pressure) pair.

    Velocity operators live on the pair's velocity space; ``C`` maps those
    coefficients to host coefficients (``None`` means the host itself).
    """
    tri: object
    pair: str
    pressure: str
    A: sp.csr_matrix
    M: sp.csr_matrix
    B: sp.csr_matrix
    Mp: sp.csr_matrix
    C: object

    def to_host(self, x):
        return x if self.C is None else self.C.matrix @ x

    def load(self, f, degree=DATA_DEGREE):
        b = assemble_load(self.tri, f, degree)
        return b if self.C is None else reduce_load(b, self.C)


def velocity_space(tri, pair):
    if pair == "sbdfm-p1":
        return None, "p1"
    if pair == "el-p0":
        return build_el_basis(tri), "p0"
    if pair == "p1-p0":
        return build_p1div_space(tri), "p0"
    raise ValueError(f"unknown pair {pair!r}; choose from {PAIRS}")


def assemble_system(tri, pair):
    C, pk = velocity_space(tri, pair)
    A = assemble(tri, "gradgrad")
    M = assemble(tri, "mass")
    B = assemble(tri, "div", pk)
    if C is not None:
        A, M, B = reduce(A, C), reduce(M, C), reduce_rect(B, C)
    return AssembledSystem(tri, pair, pk, A, M, B, pressure_mass(tri, pk), C)


# --------------------------------------------------------------------------
# loads


def _physical_points(tri, rule):
    X = tri.vertices[tri.cells]                                 # (nc, 3, 2)
    return np.einsum("qi,cik->cqk", rule.points, X)


def _eval_field(f, pts, ncomp):
    flat = pts.reshape(-1, 2)
    v = np.asarray(f(flat[:, 0], flat[:, 1]), dtype=float)
    if ncomp == 1:
        return np.broadcast_to(v, (len(flat),)).reshape(pts.shape[:2])
    return v.reshape(pts.shape[:2] + (ncomp,))


def assemble_load(tri, f, degree=DATA_DEGREE):
    """Host load ``int f . phi_b`` for a callable ``f(x, y) -> (n, 2)``."""
    dm = build_sbdfm_space(tri)
    rule = triangle_rule(degree)
    vals, _, _ = _basis_at(tri, rule)
    F = _eval_field(f, _physical_points(tri, rule), 2)
    w = rule.weights[None, :] * tri.areas[:, None]
    loc = np.einsum("cq,cqk,cbqk->cb", w, F, vals)
    out = np.zeros(dm.ndofs)
    keep = dm.cell_dofs >= 0
    np.add.at(out, dm.cell_dofs[keep], loc[keep])
    return out


def _potential_table(tri):
    """(nc, NM, 7): coefficients of the six generator potentials and the constant."""
    data = cell_data(tri)
    T = np.zeros((tri.n_cells, NM, 7))
    for c, g in enumerate(data.geoms):
        for i in range(3):
            T[c, :, i] = potential_w_edge(g, i).coef
            T[c, :, 3 + i] = potential_w_pair(g, i).coef
        T[c, 0, 6] = 1.0
    return T


def potential_load(tri, K, g, degree=DATA_DEGREE):
    """``int g zeta`` for every column of a kernel basis ``K`` (its stream functions)."""
    if K.potentials is None:
        raise ValueError("combination matrix carries no stream functions")
    rule = triangle_rule(degree)
    G = _eval_field(g, _physical_points(tri, rule), 1)
    mv = monomial_values(rule.points)
    w = rule.weights[None, :] * tri.areas[:, None]
    I = np.einsum("cq,cq,qm,cmj->cj", w, G, mv, _potential_table(tri))
    out = np.zeros(len(K.potentials))
    for k, pot in enumerate(K.potentials):
        out[k] = sum(wts @ I[c, :6] + const * I[c, 6] for c, (wts, const) in pot.items())
    return out


def potential_values(tri, K, x, bary_points):
    """Values (nc, nq) of the stream function ``sum_k x_k zeta_k``."""
    coef = np.zeros((tri.n_cells, 7))
    for k, pot in enumerate(K.potentials):
        if x[k] == 0.0:
            continue
        for c, (wts, const) in pot.items():
            coef[c, :6] += x[k] * wts
            coef[c, 6] += x[k] * const
    poly = np.einsum("cmj,cj->cm", _potential_table(tri), coef)
    return poly @ monomial_values(bary_points).T


# --------------------------------------------------------------------------
# errors


@dataclass(frozen=True)
class ErrorReport:
    h1: float       # broken H1 seminorm of the velocity error
    l2: float       # L2 norm of the velocity error
    div_l2: float   # L2 norm of div of the discrete field

    def as_dict(self):
        return dict(h1=self.h1, l2=self.l2, div_l2=self.div_l2)


def error_norms(tri, x, u=None, grad_u=None, degree=DATA_DEGREE):
    """Cellwise quadrature norms of ``u - u_h`` for a host field ``x``.

    ``u(x, y) -> (n, 2)`` and ``grad_u(x, y) -> (n, 2, 2)`` (``[comp, deriv]``);
    either may be ``None`` (treated as zero).
    """
    dm = build_sbdfm_space(tri)
    rule = triangle_rule(degree)
    vals, grads, div = _basis_at(tri, rule)
    loc = dm.local_values(x)
    uh = np.einsum("cb,cbqk->cqk", loc, vals)
    guh = np.einsum("cb,cbqkd->cqkd", loc, grads)
    dh = np.einsum("cb,cbq->cq", loc, div)
    pts = _physical_points(tri, rule)
    w = rule.weights[None, :] * tri.areas[:, None]
    eu = uh if u is None else uh - _eval_field(u, pts, 2)
    if grad_u is None:
        eg = guh
    else:
        flat = pts.reshape(-1, 2)
        G = np.asarray(grad_u(flat[:, 0], flat[:, 1]), dtype=float).reshape(pts.shape[:2] + (2, 2))
        eg = guh - G
    h1 = np.sqrt(np.einsum("cq,cqkd->", w, eg ** 2))
    l2 = np.sqrt(np.einsum("cq,cqk->", w, eu ** 2))
    dl2 = np.sqrt(np.einsum("cq,cq->", w, dh ** 2))
    return ErrorReport(float(h1), float(l2), float(dl2))


def pressure_error(tri, p, kind, exact=None, degree=DATA_DEGREE):
    """L2 norm of ``p_exact - p_h`` for a discontinuous pressure."""
    rule = triangle_rule(degree)
    P = np.asarray(p, dtype=float).reshape(tri.n_cells, -1)
    ph = P[:, 0][:, None] * np.ones(len(rule.weights)) if kind == "p0" else P @ rule.points.T
    if exact is not None:
        ph = ph - _eval_field(exact, _physical_points(tri, rule), 1)
    w = rule.weights[None, :] * tri.areas[:, None]
    return float(np.sqrt(np.sum(w * ph ** 2)))


def elementwise_divergence(tri, x, points_per_cell=None):
    """Divergence of a host field at the operator quadrature points, (nc, nq)."""
    rule = triangle_rule(OPERATOR_DEGREE)
    _, _, div = _basis_at(tri, rule)
    return np.einsum("cb,cbq->cq", build_sbdfm_space(tri).local_values(x), div)


# --------------------------------------------------------------------------
# patch check


def patch_divergence_matrix(tri, v):
    """Divergence against piecewise-P1 pressures on the patch of ``v``,
    restricted to the spoke DOFs (rim DOFs are zero).

    Returns ``(B, dofs)``: ``B`` has shape (3m, 3m) and ``dofs`` lists the
    global DOF index of each column.
    """
    from .mesh import vertex_patch
    patch = vertex_patch(tri, v)
    dm = build_sbdfm_space(tri)
    E = element_matrices(tri)["div_p1"]
    dofs = np.concatenate([dm.edge_dofs[e] for e in patch.spokes])
    pos = {int(d): k for k, d in enumerate(dofs)}
    B = np.zeros((3 * patch.m, len(dofs)))
    for i, c in enumerate(patch.cells):
        for b in range(9):
            g = int(dm.cell_dofs[c, b])
            if g in pos:
                B[3 * i:3 * i + 3, pos[g]] += E[c, :, b]
    return B, dofs


# --------------------------------------------------------------------------
# export


def export_matrix(A, path):
    A = sp.coo_matrix(A)
    order = np.lexsort((A.col, A.row))
    with open(path, "w") as fh:
        fh.write(f"# {A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for k in order:
            fh.write(f"{A.row[k]} {A.col[k]} {A.data[k]!r}\n")


def export_vector(v, path):
    np.savetxt(path, np.asarray(v), fmt="%.17g")
