import numpy as np
import pytest
import scipy.linalg as sla

from consfem.assembly import assemble, element_matrices, patch_divergence_matrix
from consfem.local import CellGeometry, local_dof_values, monomial_values
from consfem.mesh import (appendix_hexagon, build_triangulation, perturbed, refine,
                          square_crisscross, vertex_patch)
from consfem.quadrature import triangle_rule
from consfem.spaces import (SpaceError, build_el_basis, build_kernel_basis, build_p1div_space,
                            build_sbdfm_space, cell_coefs, cell_data, cell_function_pieces,
                            edge_frame, evaluate_field, interpolate, patch_p1_dimension,
                            vertex_function_pieces, verify_el_membership)
from consfem.mesh import counts_and_layers, patch_geometry


def test_host_dimensions(hex0, hex1):
    assert build_sbdfm_space(hex0).ndofs == 18
    assert build_sbdfm_space(hex1).ndofs == 90
    single = build_triangulation([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])
    assert build_sbdfm_space(single).ndofs == 0


def test_basis_sizes(hex0, hex1):
    assert build_kernel_basis(hex0).shape == (18, 1)
    assert build_el_basis(hex0).shape == (18, 6)
    K = build_kernel_basis(hex1)
    assert K.shape == (90, 19)
    assert 90 - (3 * 24 - 1) == 19


@pytest.mark.parametrize("name", ["hex0", "hex1", "hex2", "cross3", "jittered", "jittered_cross"])
def test_kernel_and_el_on_suite(mesh_suite, name):
    tri = mesh_suite[name]
    c = counts_and_layers(tri)
    K = build_kernel_basis(tri)
    E = build_el_basis(tri)
    n = build_sbdfm_space(tri).ndofs
    assert K.shape[1] == c.n_interior_vertices + c.n_interior_cells == n - (3 * tri.n_cells - 1)
    assert E.shape[1] == c.n_interior_edges + c.n_interior_cells
    B = assemble(tri, "div", "p1")
    scale = np.abs(B).max() * np.abs(K.matrix).max()
    assert np.abs(B @ K.matrix).max() < 1e-12 * scale
    # full column rank of the enriched-linear basis
    if E.shape[1] <= 400:
        s = np.linalg.svd(E.matrix.toarray(), compute_uv=False)
        assert s[-1] > 1e-8 * s[0]


@pytest.mark.parametrize("name", ["hex0", "hex2", "cross3", "jittered", "jittered_cross"])
def test_el_divergence(mesh_suite, name):
    tri = mesh_suite[name]
    E = build_el_basis(tri)
    D = (assemble(tri, "div", "p0") @ E.matrix).toarray()
    for k, (kind, idx) in enumerate(E.labels):
        col = D[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if kind == "edge":
            fr = edge_frame(tri, idx)
            T1, T2 = fr.T[:2]
            assert set(nz) == {T1, T2}
            # oriented from the lower-index endpoint: +1 on T1 when A1 is lower
            assert col[T1] == pytest.approx(fr.sign, abs=1e-12)
            assert col[T2] == pytest.approx(-fr.sign, abs=1e-12)
        else:
            assert len(nz) == 0


def test_representation_identity(mesh_suite):
    for name in ("hex0", "hex1", "hex2", "cross3", "jittered"):
        tri = mesh_suite[name]
        K, E = build_kernel_basis(tri), build_el_basis(tri)
        kcol = {lab: K.column(k) for k, lab in enumerate(K.labels)}
        ecol = {lab: E.column(k) for k, lab in enumerate(E.labels)}
        worst = 0.0
        for v in tri.interior_vertex_ids:
            v = int(v)
            p = vertex_patch(tri, v)
            rhs = np.zeros(K.shape[0])
            for i, e in enumerate(p.spokes):
                sign = 1.0 if tri.edges[e][0] == v else -1.0   # orient away from the centre
                rhs += sign * ecol[("edge", e)]
                if not tri.boundary_vertices[p.rim[i]]:
                    rhs += 0.5 * (kcol[("cell", p.cells[i])] + kcol[("cell", p.cells[(i + 1) % p.m])])
            worst = max(worst, np.abs(kcol[("vertex", v)] - rhs).max())
        assert worst < 1e-12, name


def test_hexagon_vertex_function_is_sum_of_edge_functions(hex0):
    K, E = build_kernel_basis(hex0), build_el_basis(hex0)
    signs = [1.0 if hex0.edges[e][0] == 6 else -1.0 for _, e in E.labels]
    assert np.abs(K.column(0) - E.matrix.toarray() @ signs).max() < 1e-13


def _independence_matrix(tri, c0, r):
    """Rows: vertex functions of local vertices r+1, r+2, the cell function
    of c0 and of its three neighbours, restricted to c0; columns: the pair
    generators at r, r+1, r+2 and the edge generators opposite them."""
    order = [(r + s) % 3 for s in range(3)]
    cols = [3 + i for i in order] + order
    rows = [vertex_function_pieces(tri, int(tri.cells[c0, order[1]])),
            vertex_function_pieces(tri, int(tri.cells[c0, order[2]])),
            cell_function_pieces(tri, c0)]
    nbrs = [tri.neighbor_across(c0, j) for j in order]
    rows += [cell_function_pieces(tri, n) for n in nbrs]
    A = np.array([P.potential()[c0][0][cols] for P in rows])
    S0 = tri.areas[c0]
    expected = np.prod([S0 / (S0 + tri.areas[n]) for n in nbrs]) / 3.0
    return A, expected


@pytest.mark.parametrize("name", ["hex2", "cross3", "jittered", "jittered_cross"])
def test_independence_determinant(mesh_suite, name):
    tri = mesh_suite[name]
    checked = 0
    for c0 in tri.interior_cell_ids:
        c0 = int(c0)
        if not all(tri.interior_cells[tri.neighbor_across(c0, j)] for j in range(3)):
            continue
        for r in range(3):
            if not any(tri.boundary_vertices[tri.cells[c0, (r + s) % 3]] for s in (1, 2)):
                A, expected = _independence_matrix(tri, c0, r)
                assert np.linalg.det(A) == pytest.approx(expected, rel=1e-12)
                checked += 1
                break
    assert checked > 0


def test_vertex_function_coefficients(jittered):
    """In cell i of the patch the edge generator opposite rim[i-1] carries c_i."""
    for v in jittered.interior_vertex_ids[:10]:
        p = vertex_patch(jittered, int(v))
        pot = vertex_function_pieces(jittered, int(v)).potential()
        for i, c in enumerate(p.cells):
            loc = int(np.flatnonzero(jittered.cells[c] == p.rim[i - 1])[0])
            assert pot[c][0][loc] == pytest.approx(patch_geometry(p, i), rel=1e-14)


def _patches(n=20):
    out = []
    for seed in range(5):
        tri = perturbed(refine(appendix_hexagon(), 2), 0.2, seed)
        vs = tri.interior_vertex_ids
        rng = np.random.default_rng(seed)
        out += [(tri, int(v)) for v in rng.choice(vs, size=4, replace=False)]
    return out[:n]


def test_patch_nullspace_is_vertex_function():
    patches = _patches()
    assert len(patches) == 20
    for tri, v in patches:
        B, dofs = patch_divergence_matrix(tri, v)
        U, s, Vt = np.linalg.svd(B)
        null = np.sum(s < 1e-10 * s[0])
        assert null == 1
        z = Vt[-1]
        K = build_kernel_basis(tri)
        k = K.labels.index(("vertex", v))
        psi = K.column(k)[dofs]
        u = psi / np.linalg.norm(psi)
        u *= np.sign(u @ z)
        # sine of the angle; arccos of a cosine near 1 loses half the digits
        assert np.linalg.norm(u - (u @ z) * z) < 1e-8


def test_kernel_basis_is_complete(hex1):
    B = assemble(hex1, "div", "p1").toarray()
    null = sla.null_space(B, rcond=1e-10)
    K = build_kernel_basis(hex1).matrix.toarray()
    assert null.shape[1] == K.shape[1]
    coef, *_ = np.linalg.lstsq(K, null, rcond=None)
    assert np.abs(K @ coef - null).max() < 1e-10


def test_edge_with_two_boundary_endpoints_rejected():
    tri = build_triangulation([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 2, 3)])
    e = tri.edge_index(0, 2)
    with pytest.raises(SpaceError, match="refine"):
        edge_frame(tri, e)
    with pytest.raises(SpaceError):
        build_kernel_basis(tri)


def test_membership(hex2, jittered):
    for tri in (hex2, jittered):
        E = build_el_basis(tri)
        for k in range(0, E.shape[1], 7):
            assert verify_el_membership(tri, E.column(k)).max_residual() < 1e-12
        assert verify_el_membership(tri, np.asarray(E.matrix.sum(axis=1)).ravel()).max_residual() < 1e-12
    # a single host basis function is not enriched-linear
    x = np.zeros(build_sbdfm_space(hex2).ndofs)
    x[4] = 1.0
    assert verify_el_membership(hex2, x).div_constancy > 1e-3


def test_evaluate_field(hex2):
    K = build_kernel_basis(hex2)
    v = int(hex2.interior_vertex_ids[5])
    k = K.labels.index(("vertex", v))
    x = np.zeros(K.shape[1])
    x[k] = 1.0
    p = vertex_patch(hex2, v)
    inside = 0.9 * p.rim_points[0] + 0.1 * p.center_point
    outside = 1.1 * p.rim_points[0] - 0.1 * p.center_point
    val_in, div_in = evaluate_field(hex2, x, inside, K)
    val_out, _ = evaluate_field(hex2, x, outside, K)
    assert np.abs(val_in).max() > 1e-3 and abs(div_in) < 1e-10
    assert np.abs(val_out).max() == 0.0
    E = build_el_basis(hex2)
    fr = edge_frame(hex2, E.labels[0][1])
    y = np.zeros(E.shape[1])
    y[0] = 1.0
    centroid = hex2.vertices[hex2.cells[fr.T[0]]].mean(axis=0)
    _, d = evaluate_field(hex2, y, centroid, E)
    assert d == pytest.approx(fr.sign / hex2.areas[fr.T[0]], rel=1e-12)


# --------------------------------------------------------------------------
# continuous-tangential-mean piecewise linear space


def test_p1div_counts():
    for k in range(3):
        tri = refine(appendix_hexagon(), k)
        P = build_p1div_space(tri)
        assert P.shape[1] == 3 * len(tri.interior_vertex_ids)
        assert all(patch_p1_dimension(tri, int(v)) == 3 for v in tri.interior_vertex_ids)


def test_p1div_generic_patch_is_smaller():
    tri = perturbed(refine(appendix_hexagon(), 1), 0.2, 4)
    dims = [patch_p1_dimension(tri, int(v)) for v in tri.interior_vertex_ids]
    assert min(dims) == 2
    with pytest.raises(SpaceError):
        build_p1div_space(tri)


def _phi3(hex0):
    """The explicit third patch mode on the six-cell hexagon fan.

    Rim vertices A_1..A_6 run counterclockwise from (1/2, 0); cell T_i is
    (O, A_{i-1}, A_i); l_0 is the barycentric coordinate of O.
    """
    X = hex0.vertices
    order = [1, 2, 3, 4, 5, 0]                 # A_1..A_6 as mesh vertex ids
    O = 6

    def lam_in(c, v, pts):
        g = CellGeometry.of(hex0, c)
        b = g.to_barycentric(pts)
        return b[:, int(np.flatnonzero(hex0.cells[c] == v)[0])]

    def field(i, pts):
        a_prev, a = order[(i - 2) % 6], order[i - 1]
        c = [cc for cc in range(6) if set(hex0.cells[cc]) == {O, a_prev, a}][0]
        l0 = lam_in(c, O, pts)
        lp, la = lam_in(c, a_prev, pts), lam_in(c, a, pts)
        d = lp - la
        z = np.zeros_like(l0)
        pieces = {1: (l0 + d, -2 * l0), 2: (l0 - d, -l0 - d), 3: (2 * l0, -l0 + d),
                  4: (l0 + d, -2 * l0), 5: (l0 - d, -l0 - d), 6: (2 * l0, -l0 + d)}
        return c, np.stack(pieces[i], 1)
    return field


def test_third_mode_matches_explicit_formula(hex0):
    field = _phi3(hex0)
    dm = build_sbdfm_space(hex0)
    x = np.zeros(dm.ndofs)
    seen = {}
    for i in range(1, 7):
        c, _ = field(i, np.zeros((1, 2)))
        g = CellGeometry.of(hex0, c)
        loc = local_dof_values(g, lambda xx, yy: field(i, np.stack([xx, yy], 1))[1],
                               hex0.cell_edge_signs[c])
        for j in range(3):
            e = int(hex0.cell_edges[c, j])
            vals = loc[3 * j:3 * j + 3]
            if e in seen:
                assert np.allclose(seen[e], vals, atol=1e-13)
            seen[e] = vals
            if hex0.boundary_edges[e]:
                assert np.allclose(vals, 0.0, atol=1e-13)
            else:
                x[dm.edge_dofs[e]] = vals
    # the interpolated field reproduces the piecewise-linear formula
    coefs = cell_coefs(hex0, x)
    pts = triangle_rule(4).points
    for i in range(1, 7):
        c, _ = field(i, np.zeros((1, 2)))
        g = CellGeometry.of(hex0, c)
        xy = g.to_cartesian(pts)
        assert np.allclose(monomial_values(pts) @ coefs[c], field(i, xy)[1], atol=1e-13)
    P = build_p1div_space(hex0).matrix.toarray()
    coef, *_ = np.linalg.lstsq(P, x, rcond=None)
    assert np.abs(P @ coef - x).max() < 1e-13
    assert abs(coef[2]) > 1e-3
