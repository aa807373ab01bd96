"""Saddle-point, eigenvalue and biharmonic solves."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_LIMIT = 2000
MAX_APPLICATIONS = 5000


class SolverError(RuntimeError):
    pass


def _lu(K):
    try:
        return spla.splu(sp.csc_matrix(K))
    except RuntimeError as ex:  # "Factor is exactly singular"
        raise SolverError(f"sparse factorization failed: {ex}") from ex


# --------------------------------------------------------------------------
# Stokes source problem


@dataclass
class SaddleSolution:
    u: np.ndarray
    p: np.ndarray
    residual: float            # relative residual of the augmented system
    divergence: float          # max |B u|
    pressure_mean: float
    info: dict = field(default_factory=dict)


def solve_stokes(A, B, Mp, load, epsilon=1.0, means=None, tol=1e-9):
    """Solve ``eps^2 A u - B^T p = f``, ``-B u = 0`` with ``int p = 0``.

    ``means`` is the row vector integrating a pressure (defaults to the
    column sums of ``Mp``). The augmented symmetric system is factorised
    once; one step of iterative refinement is applied.
    """
    n, m = A.shape[0], B.shape[0]
    r = np.asarray(Mp.sum(axis=0)).ravel() if means is None else np.asarray(means, dtype=float)
    K = sp.bmat([[epsilon ** 2 * A, -B.T, None],
                 [-B, None, sp.csr_matrix(r[:, None])],
                 [None, sp.csr_matrix(r[None, :]), None]], format="csc")
    rhs = np.concatenate([load, np.zeros(m + 1)])
    lu = _lu(K)
    x = lu.solve(rhs)
    res = rhs - K @ x
    x += lu.solve(res)
    res = rhs - K @ x
    scale = max(np.linalg.norm(rhs), 1e-300)
    rel = float(np.linalg.norm(res) / scale) if np.linalg.norm(rhs) > 0 else float(np.linalg.norm(res))
    if not np.all(np.isfinite(x)) or rel > tol:
        raise SolverError(f"saddle solve residual {rel:.2e} exceeds {tol:.0e}")
    u, p = x[:n], x[n:n + m]
    return SaddleSolution(u, p, rel, float(np.abs(B @ u).max(initial=0.0)),
                          float(r @ p), dict(multiplier=float(x[-1]), size=K.shape[0]))


# --------------------------------------------------------------------------
# Stokes eigenvalues


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    method: str


def _dense(X):
    return X.toarray() if sp.issparse(X) else np.asarray(X)


def generalized_eigs(A, M, k, dense_limit=None):
    """Smallest ``k`` eigenpairs of the SPD pencil ``(A, M)``."""
    dense_limit = DENSE_LIMIT if dense_limit is None else dense_limit
    n = A.shape[0]
    k = min(k, n)
    if n <= dense_limit:
        w, V = sla.eigh(_dense(A), _dense(M), subset_by_index=[0, k - 1])
        method = "dense"
    else:
        try:
            w, V = spla.eigsh(sp.csc_matrix(A), k=k, M=sp.csc_matrix(M), sigma=0.0,
                              which="LM", maxiter=MAX_APPLICATIONS)
        except spla.ArpackNoConvergence as ex:
            raise SolverError("eigensolver did not converge") from ex
        order = np.argsort(w)
        w, V = w[order], V[:, order]
        method = "shift-invert"
    R = A @ V - (M @ V) * w[None, :]
    res = np.linalg.norm(R, axis=0) / np.maximum(np.linalg.norm(V, axis=0), 1e-300)
    return w, V, res, method


def stokes_eigs(A, M, K, k=6, epsilon=1.0):
    """Stokes eigenvalues from the divergence-free basis ``K``:
    ``eps^2 K^T A K x = lambda K^T M K x``."""
    Km = getattr(K, "matrix", K)
    Ar = sp.csr_matrix(Km.T @ A @ Km) * epsilon ** 2
    Mr = sp.csr_matrix(Km.T @ M @ Km)
    w, V, res, method = generalized_eigs(Ar, Mr, k)
    return EigenResult(w, V, res, "kernel/" + method)


def stokes_eigs_mixed(A, M, B, means, k=6, epsilon=1.0):
    """Stokes eigenvalues from the velocity-pressure formulation.

    The velocity solution operator ``T g = u`` of the bordered saddle system
    is factorised once; ``M T M`` and ``M`` form a symmetric pencil whose
    largest eigenvalues are the reciprocals of the smallest Stokes
    eigenvalues.
    """
    n, m = A.shape[0], B.shape[0]
    r = np.asarray(means, dtype=float)
    Ksys = sp.bmat([[epsilon ** 2 * A, B.T, None],
                    [B, None, sp.csr_matrix(r[:, None])],
                    [None, sp.csr_matrix(r[None, :]), None]], format="csc")
    lu = _lu(Ksys)
    pad = np.zeros(m + 1)

    def solve_u(g):
        return lu.solve(np.concatenate([g, pad]))[:n]

    if n <= DENSE_LIMIT:
        Md = _dense(M)
        T = lu.solve(np.vstack([Md, np.zeros((m + 1, n))]))[:n]
        MTM = Md @ T
        MTM = 0.5 * (MTM + MTM.T)
        nu, V = sla.eigh(MTM, Md, subset_by_index=[n - k, n - 1])
        method = "mixed/dense"
    else:
        op = spla.LinearOperator((n, n), matvec=lambda x: M @ solve_u(M @ x), dtype=float)
        try:
            nu, V = spla.eigsh(op, k=k, M=sp.csc_matrix(M), which="LA",
                               Minv=spla.LinearOperator((n, n), matvec=spla.splu(sp.csc_matrix(M)).solve),
                               maxiter=MAX_APPLICATIONS)
        except spla.ArpackNoConvergence as ex:
            raise SolverError("eigensolver did not converge") from ex
        method = "mixed/lanczos"
    order = np.argsort(-nu)
    nu, V = nu[order], V[:, order]
    # the operator vanishes off the divergence-free subspace; drop those directions
    keep = nu > 1e-10 * nu[0]
    nu, V = nu[keep], V[:, keep]
    w = 1.0 / nu
    R = np.column_stack([solve_u(M @ V[:, j]) - nu[j] * V[:, j] for j in range(len(w))])
    res = np.linalg.norm(R, axis=0) / np.maximum(np.linalg.norm(V, axis=0) * np.abs(nu), 1e-300)
    return EigenResult(w, V, res, method)


# --------------------------------------------------------------------------
# inf-sup constant


@dataclass
class InfSupReport:
    lambda_min_plus: float
    lambda_max: float
    n_zero: int                 # eigenvalues treated as zero (constants and spurious modes)
    residual: float             # max relative residual of the reported eigenpairs
    method: str

    @property
    def beta(self):
        return float(np.sqrt(self.lambda_min_plus))

    @property
    def beta_max(self):
        return float(np.sqrt(self.lambda_max))


def infsup_constant(A, B, Mp, zero_tol=1e-8, dense_limit=None):
    """Extreme eigenvalues of ``B A^-1 B^T q = lambda Mp q``.

    Eigenvalues below ``zero_tol * lambda_max`` count as zero (the constant
    pressure and any pressure invisible to the velocity space); the smallest
    remaining one is ``lambda_min_plus``.
    """
    npres = B.shape[0]
    if npres <= (DENSE_LIMIT if dense_limit is None else dense_limit):
        Ad = _dense(A)
        Bd = _dense(B)
        try:
            L = sla.cho_factor(Ad)
        except sla.LinAlgError as ex:
            raise SolverError("velocity stiffness is not positive definite") from ex
        S = Bd @ sla.cho_solve(L, Bd.T)
        S = 0.5 * (S + S.T)
        Mpd = _dense(Mp)
        w, V = sla.eigh(S, Mpd)
        lmax = w[-1]
        pos = np.flatnonzero(w > zero_tol * lmax)
        if not len(pos):
            raise SolverError("no positive inf-sup eigenvalue found")
        j = pos[0]
        R = [S @ V[:, i] - w[i] * (Mpd @ V[:, i]) for i in (j, len(w) - 1)]
        res = max(np.linalg.norm(R[0]) / np.linalg.norm(Mpd @ V[:, j]),
                  np.linalg.norm(R[1]) / np.linalg.norm(Mpd @ V[:, -1]))
        return InfSupReport(float(w[j]), float(lmax), int(j), float(res), "dense")
    return _infsup_sparse(A, B, Mp, zero_tol)


def _infsup_sparse(A, B, Mp, zero_tol):
    n, m = A.shape[0], B.shape[0]
    luA = _lu(A)
    Mp = sp.csc_matrix(Mp)

    def S(q):
        return B @ luA.solve(B.T @ q)

    Sop = spla.LinearOperator((m, m), matvec=S, dtype=float)

    def bordered_inverse(shift):
        # [A B^T; B shift*Mp] [v; q] = [0; -r]  gives  (S - shift Mp) q = r
        lu = _lu(sp.bmat([[A, B.T], [B, shift * Mp]], format="csc"))
        return spla.LinearOperator(
            (m, m), matvec=lambda r: lu.solve(np.concatenate([np.zeros(n), -r]))[n:], dtype=float)

    # (div v)^2 <= 2 |grad v|^2 pointwise, so every eigenvalue lies in [0, 2]:
    # shifting just above 2 makes the largest one dominant
    top_shift = 2.0 * (1.0 + 1e-3)
    try:
        top, vtop = spla.eigsh(Sop, k=1, M=Mp, sigma=top_shift, OPinv=bordered_inverse(top_shift),
                               which="LM", maxiter=MAX_APPLICATIONS)
    except spla.ArpackNoConvergence as ex:
        raise SolverError("largest inf-sup eigenvalue did not converge") from ex
    lmax = float(top[0])

    # shift-invert just below zero; the zero cluster comes first, then lambda_min_plus
    delta = 1e-6 * lmax
    OPinv = bordered_inverse(-delta)
    k = 8
    while True:
        try:
            w, V = spla.eigsh(Sop, k=k, M=Mp, sigma=-delta, OPinv=OPinv, which="LM",
                              maxiter=MAX_APPLICATIONS)
        except spla.ArpackNoConvergence as ex:
            raise SolverError("smallest inf-sup eigenvalues did not converge") from ex
        order = np.argsort(w)
        w, V = w[order], V[:, order]
        pos = np.flatnonzero(w > zero_tol * lmax)
        if len(pos) or k >= m - 1:
            break
        k = min(2 * k, m - 1)
    if not len(pos):
        raise SolverError("no positive inf-sup eigenvalue found")
    j = pos[0]
    x = V[:, j]
    res = np.linalg.norm(S(x) - w[j] * (Mp @ x)) / np.linalg.norm(Mp @ x)
    rt = np.linalg.norm(S(vtop[:, 0]) - lmax * (Mp @ vtop[:, 0])) / np.linalg.norm(Mp @ vtop[:, 0])
    return InfSupReport(float(w[j]), lmax, int(j), float(max(res, rt)), "lanczos")


# --------------------------------------------------------------------------
# biharmonic


def solve_biharmonic(tri, K, g, A=None):
    """Potential coefficients ``x`` of ``K^T A K x = <g, zeta>``.

    ``curl`` of the discrete solution has host coefficients ``K x``.
    """
    from .assembly import assemble, potential_load
    if A is None:
        A = assemble(tri, "gradgrad")
    Km = K.matrix
    Ar = sp.csc_matrix(Km.T @ A @ Km)
    rhs = potential_load(tri, K, g)
    if not np.any(rhs):
        return np.zeros(Km.shape[1])
    try:
        x = spla.splu(Ar).solve(rhs)
    except RuntimeError as ex:
        raise SolverError(f"biharmonic factorization failed: {ex}") from ex
    if not np.all(np.isfinite(x)):
        raise SolverError("biharmonic solve produced non-finite values")
    return x
