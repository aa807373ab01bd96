"""Quadrature on triangles (barycentric points) and edges.

Triangle rules are conical products of Gauss-Jacobi and Gauss-Legendre
points; weights are normalised to sum to one, so integrals over a cell are
``area * sum(w * f)``.
"""
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray   # (nq, 3) barycentric, or (nq,) in [-1, 1] for edges
    weights: np.ndarray  # (nq,), sum to one
    degree: int


@lru_cache(maxsize=None)
def triangle_rule(degree=6):
    """Positive-weight rule exact for polynomials of total degree ``degree``."""
    n = max(1, (degree + 2) // 2)
    xi, wj = roots_jacobi(n, 1.0, 0.0)
    eta, wl = roots_legendre(n)
    s = (1.0 + xi) / 2.0
    t = (1.0 + eta) / 2.0
    S, Tt = np.meshgrid(s, t, indexing="ij")
    W = np.outer(wj / 4.0, wl / 2.0)
    x = S.ravel()
    y = (Tt * (1.0 - S)).ravel()
    w = W.ravel() * 2.0  # reference area 1/2 -> weights sum to 1
    bary = np.stack([1.0 - x - y, x, y], axis=1)
    for a in (bary, w):
        a.setflags(write=False)
    return QuadRule(bary, w, 2 * n - 1)


@lru_cache(maxsize=None)
def edge_rule(degree=5):
    """Gauss-Legendre rule on [-1, 1], weights summing to one."""
    n = max(1, (degree + 2) // 2)
    s, w = roots_legendre(n)
    w = w / 2.0
    s.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(s, w, 2 * n - 1)


# rule used for polynomial operators and for callable data, respectively
OPERATOR_DEGREE = 6
DATA_DEGREE = 19


def barycentric_monomial_integral(a, b, c, area):
    """Exact integral of l1^a l2^b l3^c over a triangle of the given area."""
    return factorial(a) * factorial(b) * factorial(c) * 2.0 * area / factorial(a + b + c + 2)


def integrate_cell(vertices, f, degree=DATA_DEGREE):
    """Integrate ``f(x, y)`` (vectorised) over the triangle ``vertices``."""
    X = np.asarray(vertices, dtype=float)
    rule = triangle_rule(degree)
    pts = rule.points @ X
    area = 0.5 * abs((X[1, 0] - X[0, 0]) * (X[2, 1] - X[0, 1])
                     - (X[1, 1] - X[0, 1]) * (X[2, 0] - X[0, 0]))
    vals = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)
    return area * np.tensordot(rule.weights, vals, axes=(0, -1 if vals.ndim == 1 else 0))


def integrate_edge(p, q, f, degree=DATA_DEGREE):
    """Integrate ``f(x, y)`` along the segment from ``p`` to ``q``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    rule = edge_rule(degree)
    t = (1.0 + rule.points) / 2.0
    pts = p[None, :] * (1.0 - t)[:, None] + q[None, :] * t[:, None]
    vals = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)
    return np.linalg.norm(q - p) * np.tensordot(rule.weights, vals, axes=(0, 0))
