"""Polynomials on one triangle in barycentric coordinates.

A scalar polynomial is a coefficient vector over the barycentric monomials
``l1^a l2^b l3^c`` with ``a + b + c <= 3`` (the representation is not unique
since ``l1 + l2 + l3 = 1``, which is harmless). Vector polynomials carry one
such vector per Cartesian component. Derivatives use the constant gradients
of the barycentric coordinates, so ``curl``/``div`` are exact coefficient
maps.

Local numbering is zero-based: vertex ``i``, edge ``i`` opposite it, and
the edge runs counterclockwise from vertex ``i+1`` to vertex ``i+2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .quadrature import OPERATOR_DEGREE, edge_rule, triangle_rule

MAX_DEGREE = 3
MONOMIALS = [(a, b, d - a - b) for d in range(MAX_DEGREE + 1)
             for a in range(d, -1, -1) for b in range(d - a, -1, -1)]
INDEX = {m: k for k, m in enumerate(MONOMIALS)}
NM = len(MONOMIALS)


def _diff_tables():
    # DIFF[i] maps coefficients of p to those of dp/dl_i
    D = np.zeros((3, NM, NM))
    for k, m in enumerate(MONOMIALS):
        for i in range(3):
            if m[i] > 0:
                r = list(m)
                r[i] -= 1
                D[i, INDEX[tuple(r)], k] += m[i]
    return D


DIFF = _diff_tables()
_EXP = np.array(MONOMIALS)


def monomial_values(bary):
    """(nq, NM) values of all monomials at barycentric points."""
    bary = np.atleast_2d(bary)
    return np.prod(bary[:, None, :] ** _EXP[None, :, :], axis=2)


class DegreeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CellGeometry:
    x: np.ndarray  # (3, 2) counterclockwise vertices

    @classmethod
    def of(cls, tri, c):
        return cls(np.asarray(tri.vertices[tri.cells[c]], dtype=float))

    @cached_property
    def area(self):
        x = self.x
        return 0.5 * ((x[1, 0] - x[0, 0]) * (x[2, 1] - x[0, 1])
                      - (x[1, 1] - x[0, 1]) * (x[2, 0] - x[0, 0]))

    @cached_property
    def edge_vectors(self):
        x = self.x
        return np.array([x[(i + 2) % 3] - x[(i + 1) % 3] for i in range(3)])

    @cached_property
    def lengths(self):
        return np.linalg.norm(self.edge_vectors, axis=1)

    @cached_property
    def tangents(self):
        return self.edge_vectors / self.lengths[:, None]

    @cached_property
    def normals(self):
        t = self.tangents
        return np.stack([t[:, 1], -t[:, 0]], axis=1)

    @cached_property
    def grads(self):
        """Gradients of the barycentric coordinates, (3, 2)."""
        return -self.normals * (self.lengths / (2.0 * self.area))[:, None]

    @cached_property
    def cart_diff(self):
        """(2, NM, NM): coefficient maps for d/dx and d/dy."""
        return np.einsum("ik,iab->kab", self.grads, DIFF)

    def to_cartesian(self, bary):
        return np.atleast_2d(bary) @ self.x

    def to_barycentric(self, pts):
        pts = np.atleast_2d(pts)
        x = self.x
        l1 = ((pts - x[0]) @ self.grads[1])
        l2 = ((pts - x[0]) @ self.grads[2])
        return np.stack([1.0 - l1 - l2, l1, l2], axis=1)

    def edge_bary(self, i, s):
        """Barycentric points on edge ``i`` for parameters ``s`` in [-1, 1]."""
        s = np.asarray(s, dtype=float)
        b = np.zeros((len(s), 3))
        b[:, (i + 1) % 3] = (1.0 - s) / 2.0
        b[:, (i + 2) % 3] = (1.0 + s) / 2.0
        return b


@dataclass(frozen=True, eq=False)
class ScalarPolyBary:
    geom: CellGeometry
    coef: np.ndarray  # (NM,)

    @classmethod
    def const(cls, geom, value):
        c = np.zeros(NM)
        c[0] = value
        return cls(geom, c)

    @classmethod
    def lam(cls, geom, i):
        c = np.zeros(NM)
        e = [0, 0, 0]
        e[i] = 1
        c[INDEX[tuple(e)]] = 1.0
        return cls(geom, c)

    def __add__(self, other):
        if np.isscalar(other):
            other = ScalarPolyBary.const(self.geom, other)
        return ScalarPolyBary(self.geom, self.coef + other.coef)

    __radd__ = __add__

    def __neg__(self):
        return ScalarPolyBary(self.geom, -self.coef)

    def __sub__(self, other):
        return self + (-other if not np.isscalar(other) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return ScalarPolyBary(self.geom, self.coef * other)
        out = np.zeros(NM)
        for k1 in np.flatnonzero(self.coef):
            for k2 in np.flatnonzero(other.coef):
                m = tuple(p + q for p, q in zip(MONOMIALS[k1], MONOMIALS[k2]))
                if sum(m) > MAX_DEGREE:
                    raise DegreeError("product exceeds degree 3")
                out[INDEX[m]] += self.coef[k1] * other.coef[k2]
        return ScalarPolyBary(self.geom, out)

    __rmul__ = __mul__

    def __call__(self, bary):
        return monomial_values(bary) @ self.coef

    def dx(self, k):
        return ScalarPolyBary(self.geom, self.geom.cart_diff[k] @ self.coef)

    def grad(self, bary):
        mv = monomial_values(bary)
        return np.stack([mv @ (self.geom.cart_diff[k] @ self.coef) for k in range(2)], axis=1)

    def hessian(self, bary):
        mv = monomial_values(bary)
        D = self.geom.cart_diff
        H = np.empty((len(mv), 2, 2))
        for a in range(2):
            for b in range(2):
                H[:, a, b] = mv @ (D[a] @ (D[b] @ self.coef))
        return H

    def curl(self):
        """``(dq/dy, -dq/dx)``."""
        D = self.geom.cart_diff
        return LocalVectorPoly(self.geom, np.stack([D[1] @ self.coef, -(D[0] @ self.coef)], axis=1))

    def integrate(self, degree=OPERATOR_DEGREE):
        rule = triangle_rule(degree)
        return self.geom.area * rule.weights @ self(rule.points)


@dataclass(frozen=True, eq=False)
class LocalVectorPoly:
    geom: CellGeometry
    coef: np.ndarray  # (NM, 2)

    @classmethod
    def from_components(cls, p, q):
        return cls(p.geom, np.stack([p.coef, q.coef], axis=1))

    @classmethod
    def times_vector(cls, p, vec):
        return cls(p.geom, np.outer(p.coef, np.asarray(vec, dtype=float)))

    @classmethod
    def zero(cls, geom):
        return cls(geom, np.zeros((NM, 2)))

    def component(self, k):
        return ScalarPolyBary(self.geom, self.coef[:, k])

    def __add__(self, other):
        return LocalVectorPoly(self.geom, self.coef + other.coef)

    def __sub__(self, other):
        return LocalVectorPoly(self.geom, self.coef - other.coef)

    def __neg__(self):
        return LocalVectorPoly(self.geom, -self.coef)

    def __mul__(self, s):
        return LocalVectorPoly(self.geom, self.coef * s)

    __rmul__ = __mul__

    def __call__(self, bary):
        return monomial_values(bary) @ self.coef

    def div(self):
        D = self.geom.cart_diff
        return ScalarPolyBary(self.geom, D[0] @ self.coef[:, 0] + D[1] @ self.coef[:, 1])

    def rot(self):
        D = self.geom.cart_diff
        return ScalarPolyBary(self.geom, D[0] @ self.coef[:, 1] - D[1] @ self.coef[:, 0])

    def jacobian(self, bary):
        """(nq, 2, 2) with entry [q, component, derivative]."""
        return coef_grads(self.coef[None], self.geom, bary)[0]


# --------------------------------------------------------------------------
# vectorised helpers over stacks of coefficient arrays (nb, NM, 2)


def coef_values(coefs, bary):
    return np.einsum("qm,bmc->bqc", monomial_values(bary), coefs)


def coef_grads(coefs, geom, bary):
    mv = monomial_values(bary)
    d = np.einsum("kmn,bnc->bkmc", geom.cart_diff, coefs)
    return np.einsum("qm,bkmc->bqck", mv, d)


def coef_div(coefs, geom):
    D = geom.cart_diff
    return np.einsum("mn,bn->bm", D[0], coefs[..., 0]) + np.einsum("mn,bn->bm", D[1], coefs[..., 1])


# --------------------------------------------------------------------------
# generators


def _others(i):
    return (i + 1) % 3, (i + 2) % 3


def potential_w_edge(geom, i):
    j, k = _others(i)
    L = [ScalarPolyBary.lam(geom, r) for r in range(3)]
    return L[j] * L[k] * (3.0 * L[i] - 1.0)


def potential_w_pair(geom, i):
    li = ScalarPolyBary.lam(geom, i)
    return li * li


def generator_w_edge(geom, i):
    """``curl(l_j l_k (3 l_i - 1))``; its DOFs vanish on the two edges other than ``i``."""
    return potential_w_edge(geom, i).curl()


def generator_w_pair(geom, i):
    """``curl(l_i^2)``; its DOFs vanish on edge ``i`` (the edge opposite vertex ``i``)."""
    return potential_w_pair(geom, i).curl()


def generator_y_pair(geom, i):
    """``-(2/|e_i|) l_i n_i``; divergence ``1/area``."""
    li = ScalarPolyBary.lam(geom, i)
    return LocalVectorPoly.times_vector(li, -(2.0 / geom.lengths[i]) * geom.normals[i])


# --------------------------------------------------------------------------
# degrees of freedom


def edge_dofs(coefs, geom, signs=(1, 1, 1)):
    """Edge moments of a stack of polynomial fields.

    Returns ``(nb, 9)`` ordered edge-major ``[normal mean, first normal
    moment, tangential mean]``, measured against the edge direction
    ``signs[i] * t_i``; the first moment uses the weight ``3 s`` with ``s``
    running from -1 to 1 along that direction.
    """
    rule = edge_rule(5)
    out = np.empty(coefs.shape[:-2] + (9,))
    for i in range(3):
        sg = signs[i]
        vals = np.einsum("qm,...mc->...qc", monomial_values(geom.edge_bary(i, rule.points)), coefs)
        n = sg * geom.normals[i]
        t = sg * geom.tangents[i]
        vn = vals @ n
        out[..., 3 * i] = vn @ rule.weights
        out[..., 3 * i + 1] = 3.0 * (vn * (sg * rule.points)) @ rule.weights
        out[..., 3 * i + 2] = (vals @ t) @ rule.weights
    return out


def local_dof_values(geom, v, signs=(1, 1, 1), degree=11):
    """DOF values of a :class:`LocalVectorPoly` or of a callable ``f(x, y) -> (n, 2)``."""
    if isinstance(v, LocalVectorPoly):
        return edge_dofs(v.coef, geom, signs)
    rule = edge_rule(degree)
    out = np.empty(9)
    for i in range(3):
        sg = signs[i]
        pts = geom.to_cartesian(geom.edge_bary(i, rule.points))
        vals = np.asarray(v(pts[:, 0], pts[:, 1]), dtype=float).reshape(len(pts), 2)
        vn = vals @ (sg * geom.normals[i])
        out[3 * i] = vn @ rule.weights
        out[3 * i + 1] = 3.0 * (vn * sg * rule.points) @ rule.weights
        out[3 * i + 2] = (vals @ (sg * geom.tangents[i])) @ rule.weights
    return out


def p2minus_spanning(geom):
    """Nine fields spanning the local velocity space: ``l_i e_x``,
    ``l_i e_y`` and the tangential edge bubbles ``l_j l_k t_i``."""
    F = np.zeros((9, NM, 2))
    for i in range(3):
        e = [0, 0, 0]
        e[i] = 1
        F[2 * i, INDEX[tuple(e)], 0] = 1.0
        F[2 * i + 1, INDEX[tuple(e)], 1] = 1.0
    for i in range(3):
        j, k = _others(i)
        e = [0, 0, 0]
        e[j] = e[k] = 1
        F[6 + i, INDEX[tuple(e)], :] = geom.tangents[i]
    return F


def sbdfm_dual(geom, signs=(1, 1, 1)):
    """Coefficients ``(9, NM, 2)`` of the basis dual to :func:`edge_dofs`
    with the given edge orientation, and the map from DOFs to the
    coefficients of :func:`p2minus_spanning` (``(9, 9)``)."""
    F = p2minus_spanning(geom)
    D = edge_dofs(F, geom, signs).T  # D[dof, f]
    Dinv = np.linalg.inv(D)
    return np.einsum("fb,fmc->bmc", Dinv, F), Dinv


def sbdfm_nodal_basis(geom):
    """Nodal basis for the locally oriented functionals
    ``(mean v.n_i, mean v.n_i (l_j - l_k), mean v.t_i)``, ``j, k = i+1, i+2``.

    Returned as a list of nine :class:`LocalVectorPoly` ordered edge-major.
    Relative to the global DOFs of an edge with orientation sign ``sigma``,
    these moments are scaled by ``(sigma, -1/3, sigma)``.
    """
    coefs, _ = sbdfm_dual(geom)
    scale = np.tile([1.0, -3.0, 1.0], 3)
    return [LocalVectorPoly(geom, coefs[b] * scale[b]) for b in range(9)]


def local_to_global_scale(signs):
    """Per-DOF factors turning locally oriented moments into global ones."""
    return np.array([f for s in signs for f in (s, -3.0, s)], dtype=float)
