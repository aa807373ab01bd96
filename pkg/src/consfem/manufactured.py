"""Manufactured solutions, differentiated symbolically and compiled to numpy."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as s

X, Y = s.symbols("x y")


def _vec(exprs):
    f = s.lambdify((X, Y), list(exprs), "numpy")

    def call(x, y):
        x = np.asarray(x, dtype=float)
        out = f(x, y)
        return np.stack([np.broadcast_to(np.asarray(v, dtype=float), x.shape) for v in out], axis=-1)
    return call


def _mat(rows):
    f = s.lambdify((X, Y), [list(r) for r in rows], "numpy")

    def call(x, y):
        x = np.asarray(x, dtype=float)
        out = f(x, y)
        return np.stack([np.stack([np.broadcast_to(np.asarray(v, dtype=float), x.shape)
                                   for v in r], axis=-1) for r in out], axis=-2)
    return call


def _scal(expr):
    f = s.lambdify((X, Y), expr, "numpy")

    def call(x, y):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(f(x, y), dtype=float), x.shape).copy()
    return call


def curl(q):
    return (s.diff(q, Y), -s.diff(q, X))


def laplace(q):
    return s.diff(q, X, 2) + s.diff(q, Y, 2)


@dataclass(frozen=True)
class StokesSolution:
    u: object        # (x, y) -> (n, 2)
    grad_u: object   # (x, y) -> (n, 2, 2), [component, derivative]
    p: object        # (x, y) -> (n,)
    f: object        # (x, y) -> (n, 2)
    epsilon: float


@lru_cache(maxsize=None)
def stokes_solution(epsilon=1.0):
    """``u = curl(x^2 (1-x)^2 y^2 (1-y)^2)``, ``p = x^3 + y^3 - 1/2`` on the
    unit square; ``f = -eps^2 lap u + grad p``."""
    eps = s.nsimplify(epsilon)
    psi = X ** 2 * (1 - X) ** 2 * Y ** 2 * (1 - Y) ** 2
    u = curl(psi)
    p = X ** 3 + Y ** 3 - s.Rational(1, 2)
    f = [s.expand(-eps ** 2 * laplace(ui) + s.diff(p, v)) for ui, v in zip(u, (X, Y))]
    grad = [[s.diff(ui, v) for v in (X, Y)] for ui in u]
    return StokesSolution(_vec(u), _mat(grad), _scal(p), _vec(f), float(epsilon))


def gradient_field(phi_expr=None):
    """Callable ``grad phi``; default ``phi = cos(pi x) cos(pi y)``."""
    phi = s.cos(s.pi * X) * s.cos(s.pi * Y) if phi_expr is None else phi_expr
    return _vec([s.diff(phi, X), s.diff(phi, Y)])


@dataclass(frozen=True)
class BiharmonicSolution:
    u: object         # stream function
    curl_u: object    # (n, 2)
    grad_curl_u: object
    g: object         # bilaplacian


@lru_cache(maxsize=None)
def biharmonic_solution():
    """``u = x^2 (1-x)^2 y^2 (1-y)^2`` on the unit square, ``g = lap^2 u``."""
    u = X ** 2 * (1 - X) ** 2 * Y ** 2 * (1 - Y) ** 2
    cu = curl(u)
    g = s.expand(laplace(laplace(u)))
    grad = [[s.diff(c, v) for v in (X, Y)] for c in cu]
    return BiharmonicSolution(_scal(u), _vec(cu), _mat(grad), _scal(g))


def zero_scalar(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def zero_vector(x, y):
    x = np.asarray(x, dtype=float)
    return np.zeros(x.shape + (2,))
