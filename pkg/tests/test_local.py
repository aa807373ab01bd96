import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from consfem.local import (CellGeometry, DegreeError, LocalVectorPoly, NM, ScalarPolyBary,
                           coef_div, edge_dofs, generator_w_edge, generator_w_pair,
                           generator_y_pair, local_dof_values, monomial_values,
                           p2minus_spanning, potential_w_edge, sbdfm_dual, sbdfm_nodal_basis)
from consfem.quadrature import edge_rule, triangle_rule

from conftest import random_triangle

REF = CellGeometry(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
POINTS = triangle_rule(6).points


def geometries(n=5, seed=0):
    rng = np.random.default_rng(seed)
    return [REF] + [CellGeometry(random_triangle(rng)) for _ in range(n)]


def oriented_functionals(geom, f):
    """Independent oracle: (mean v.n_i, mean v.n_i (l_j - l_k), mean v.t_i) by
    Gauss quadrature on each edge, parameterised from vertex j to vertex k."""
    rule = edge_rule(11)
    out = np.zeros(9)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        s = (1 + rule.points) / 2            # 0 at vertex j, 1 at vertex k
        b = np.zeros((len(s), 3))
        b[:, j], b[:, k] = 1 - s, s
        v = f(b)
        out[3 * i] = rule.weights @ (v @ geom.normals[i])
        out[3 * i + 1] = rule.weights @ ((v @ geom.normals[i]) * (b[:, j] - b[:, k]))
        out[3 * i + 2] = rule.weights @ (v @ geom.tangents[i])
    return out


def test_reference_values():
    y = generator_y_pair(REF, 0)
    assert np.allclose(REF.area, 0.5)
    assert np.allclose(monomial_values(POINTS) @ coef_div(y.coef[None], REF)[0], 2.0, atol=1e-14)
    w = generator_w_edge(REF, 0)
    assert np.allclose(w(np.array([[1, 1, 1]]) / 3.0), [[-1 / 3, 1 / 3]], atol=1e-15)


@pytest.mark.parametrize("geom", geometries())
def test_generator_dofs(geom):
    for i in range(3):
        d = edge_dofs(generator_w_edge(geom, i).coef[None], geom)[0].reshape(3, 3)
        others = [j for j in range(3) if j != i]
        assert np.abs(d[others]).max() < 1e-14
        # zero flux through edge i (the potential vanishes at its endpoints),
        # nonzero first normal moment and tangential mean
        assert abs(d[i, 0]) < 1e-14
        assert abs(d[i, 1]) > 0.1 and abs(d[i, 2]) > 0.1
        p = edge_dofs(generator_w_pair(geom, i).coef[None], geom)[0].reshape(3, 3)
        assert np.abs(p[i]).max() < 1e-14
        y = edge_dofs(generator_y_pair(geom, i).coef[None], geom)[0].reshape(3, 3)
        assert np.abs(y[i]).max() < 1e-14


@pytest.mark.parametrize("geom", geometries())
def test_generator_divergence(geom):
    mv = monomial_values(POINTS)
    for i in range(3):
        for gen in (generator_w_edge, generator_w_pair):
            assert np.abs(mv @ coef_div(gen(geom, i).coef[None], geom)[0]).max() < 1e-12
        d = mv @ coef_div(generator_y_pair(geom, i).coef[None], geom)[0]
        assert np.allclose(d, 1.0 / geom.area, rtol=1e-12)


def test_curl_of_potential():
    # curl(xy(2 - 3x - 3y)) on the reference cell, differentiated by hand
    q = potential_w_edge(REF, 0)
    x, y = POINTS[:, 1], POINTS[:, 2]
    expected = np.stack([2 * x - 3 * x ** 2 - 6 * x * y, -(2 * y - 6 * x * y - 3 * y ** 2)], 1)
    assert np.allclose(q.curl()(POINTS), expected, atol=1e-14)
    assert np.allclose(q(POINTS), x * y * (2 - 3 * x - 3 * y), atol=1e-15)


@pytest.mark.parametrize("geom", geometries())
def test_nodal_basis_duality(geom):
    basis = sbdfm_nodal_basis(geom)
    D = np.array([oriented_functionals(geom, phi) for phi in basis])
    assert np.allclose(D, np.eye(9), atol=1e-13)


@pytest.mark.parametrize("geom", geometries(2, seed=4))
def test_nodal_basis_matches_closed_form(geom):
    L = POINTS
    t, n = geom.tangents, geom.normals
    basis = sbdfm_nodal_basis(geom)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        qj = (L[:, j] * (3 * L[:, j] - 2))[:, None]
        qk = (L[:, k] * (3 * L[:, k] - 2))[:, None]
        bub = (L[:, j] * L[:, k])[:, None]
        phi0 = qj * t[k] / (n[i] @ t[k]) + qk * t[j] / (n[i] @ t[j]) + 6 * bub * n[i]
        phi1 = 3 * qj * t[k] / (n[i] @ t[k]) - 3 * qk * t[j] / (n[i] @ t[j])
        phit = 6 * bub * t[i]
        assert np.allclose(basis[3 * i](L), phi0, atol=1e-13)
        assert np.allclose(basis[3 * i + 1](L), phi1, atol=1e-13)
        assert np.allclose(basis[3 * i + 2](L), phit, atol=1e-13)
        # the tangential function vanishes on the other two edges
        for other in (j, k):
            assert np.abs(basis[3 * i + 2](geom.edge_bary(other, np.linspace(-1, 1, 7)))).max() < 1e-14


def test_constant_field_expansion():
    rng = np.random.default_rng(1)
    geom = CellGeometry(random_triangle(rng))
    const = LocalVectorPoly.from_components(ScalarPolyBary.const(geom, 1.0), ScalarPolyBary.const(geom, 0.0))
    dofs = oriented_functionals(geom, const)
    recon = sum(d * phi.coef for d, phi in zip(dofs, sbdfm_nodal_basis(geom)))
    b = rng.dirichlet(np.ones(3), size=20)
    assert np.abs(monomial_values(b) @ recon - [1.0, 0.0]).max() < 1e-13


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2 ** 31))
def test_constant_field_dofs(a, b, seed):
    geom = CellGeometry(random_triangle(np.random.default_rng(seed)))
    d = local_dof_values(geom, lambda x, y: np.tile([a, b], (len(x), 1))).reshape(3, 3)
    assert np.allclose(d[:, 0], geom.normals @ [a, b], atol=1e-13)
    assert np.allclose(d[:, 1], 0.0, atol=1e-13)
    assert np.allclose(d[:, 2], geom.tangents @ [a, b], atol=1e-13)


def test_polynomial_and_callable_dofs_agree():
    rng = np.random.default_rng(2)
    geom = CellGeometry(random_triangle(rng))
    v = generator_w_edge(geom, 1) + generator_y_pair(geom, 2) * 0.7
    signs = (1, -1, 1)

    def f(x, y):
        return v(geom.to_barycentric(np.stack([x, y], 1)))
    assert np.allclose(local_dof_values(geom, v, signs), local_dof_values(geom, f, signs), atol=1e-13)


def test_shared_edge_dofs_agree():
    # two cells sharing the edge (0,0)-(1,1); a polynomial field restricted to both
    g1 = CellGeometry(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))
    g2 = CellGeometry(np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))

    def f(x, y):
        return np.stack([np.sin(x + 2 * y), x * y - y ** 2], 1)
    d1 = local_dof_values(g1, f, signs=(1, 1, 1))[3:6]     # edge 1 of g1 runs (1,1) -> (0,0)
    e2 = [i for i in range(3) if {tuple(g2.x[(i + 1) % 3]), tuple(g2.x[(i + 2) % 3])} == {(0.0, 0.0), (1.0, 1.0)}][0]
    d2 = local_dof_values(g2, f, signs=(1, 1, 1))[3 * e2:3 * e2 + 3]
    # opposite traversal: the means flip sign; the first moment flips both
    # its normal and its edge parameter and so agrees
    assert np.allclose(d1, d2 * [-1, 1, -1], atol=1e-13)
    assert np.allclose(local_dof_values(g2, f, signs=(-1, -1, -1))[3 * e2:3 * e2 + 3], d1, atol=1e-13)


@pytest.mark.parametrize("geom", geometries(3, seed=7))
def test_local_exact_sequence(geom):
    F = p2minus_spanning(geom)
    basis, _ = sbdfm_dual(geom)
    mv = monomial_values(POINTS)
    # div maps the local space onto P1: rank 3 at quadrature points
    divs = np.stack([mv @ coef_div(b[None], geom)[0] for b in basis])
    assert np.linalg.matrix_rank(divs, tol=1e-10) == 3
    # the six curls span its divergence-free subspace
    W = np.stack([generator_w_edge(geom, i).coef for i in range(3)]
                 + [generator_w_pair(geom, i).coef for i in range(3)])
    vals = lambda C: np.stack([(mv @ c).ravel() for c in C])
    assert np.linalg.matrix_rank(vals(W), tol=1e-10) == 6
    # and lie in the local space (least squares residual against the spanning set)
    coef, res, *_ = np.linalg.lstsq(vals(F).T, vals(W).T, rcond=None)
    assert np.abs(vals(F).T @ coef - vals(W).T).max() < 1e-12


def test_div_is_constant_for_enriched_combinations():
    rng = np.random.default_rng(5)
    geom = CellGeometry(random_triangle(rng))
    c = rng.normal(size=7)
    v = sum((ci * generator_w_edge(geom, i) for i, ci in enumerate(c[:3])), LocalVectorPoly.zero(geom))
    v = v + sum((ci * generator_w_pair(geom, i) for i, ci in enumerate(c[3:6])), LocalVectorPoly.zero(geom))
    v = v + c[6] * generator_y_pair(geom, 1)
    d = monomial_values(POINTS) @ v.div().coef
    assert np.allclose(d, c[6] / geom.area, rtol=1e-12)


def test_rigid_motion_covariance():
    rng = np.random.default_rng(8)
    X = random_triangle(rng)
    th = 0.7
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    g1, g2 = CellGeometry(X), CellGeometry(X @ R.T + [0.3, -1.2])

    def f(x, y):
        return np.stack([x ** 2 - y, np.cos(x * y)], 1)

    def rotated(x, y):
        p = (np.stack([x, y], 1) - [0.3, -1.2]) @ R
        return f(p[:, 0], p[:, 1]) @ R.T
    assert np.allclose(local_dof_values(g1, f), local_dof_values(g2, rotated), atol=1e-12)


def test_degree_guard():
    l0 = ScalarPolyBary.lam(REF, 0)
    cube = l0 * l0 * l0
    with pytest.raises(DegreeError):
        cube * l0
