"""Refinement studies shared by the command line and the scripts."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import (assemble, assemble_system, error_norms, pressure_error,
                       pressure_means)
from .manufactured import (biharmonic_solution, gradient_field, stokes_solution,
                           zero_scalar, zero_vector)
from .mesh import counts_and_layers, generate_mesh, read_mesh, uniform_refine
from .solvers import (infsup_constant, solve_biharmonic, solve_stokes,
                      stokes_eigs, stokes_eigs_mixed)
from .spaces import SpaceError, build_kernel_basis


@dataclass
class StudyConfig:
    command: str = "infsup"
    gen: str | None = "appendix_hexagon"
    input: str | None = None
    n: int = 2
    magnitude: float = 0.1
    seed: int = 0
    refine: int = 3
    start: int = 0
    pair: str = "el-p0"
    epsilon: float = 1.0
    k: int = 6
    out: str | None = None

    def __post_init__(self):
        if self.refine < 0 or self.start < 0 or self.start > self.refine:
            raise ValueError("need 0 <= start <= refine")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.pair == "p1-p0" and self.command not in ("infsup",):
            raise ValueError("the p1-p0 pair is only available for infsup")

    def as_dict(self):
        return asdict(self)


def base_mesh(cfg):
    if cfg.input:
        return read_mesh(cfg.input)
    return generate_mesh(cfg.gen, n=cfg.n, magnitude=cfg.magnitude, seed=cfg.seed)


def levels(base, last, first=0):
    """Meshes ``first..last`` of the uniform refinement sequence of ``base``."""
    out = []
    tri = base
    for lev in range(last + 1):
        if lev >= first:
            out.append((lev, tri))
        if lev < last:
            tri = uniform_refine(tri)
    return out


def require_assumption1(tri):
    c = counts_and_layers(tri)
    if not c.assumption1:
        raise SpaceError("mesh violates the interior-connectivity assumption")
    return c


def rate(prev, cur):
    if prev is None or not (prev > 0 and cur > 0):
        return float("nan")
    return float(np.log2(prev / cur))


def richardson_rates(values):
    """``log2((v0 - v1) / (v1 - v2))`` for consecutive triples (rows of ``values``)."""
    V = np.asarray(values, dtype=float)
    d = V[:-1] - V[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log2(d[:-1] / d[1:])


@dataclass
class StudyResult:
    rows: list
    columns: list
    meta: dict = field(default_factory=dict)


# --------------------------------------------------------------------------


def stokes_single(tri, pair, epsilon=1.0, extra_gradient=False):
    ms = stokes_solution(epsilon)
    S = assemble_system(tri, pair)
    f = ms.f
    if extra_gradient:
        grad = gradient_field()
        f = (lambda x, y: ms.f(x, y) + grad(x, y))
    sol = solve_stokes(S.A, S.B, S.Mp, S.load(f), epsilon, pressure_means(tri, S.pressure))
    uh = S.to_host(sol.u)
    err = error_norms(tri, uh, ms.u, ms.grad_u)
    perr = pressure_error(tri, sol.p, S.pressure, ms.p)
    return dict(u=sol.u, p=sol.p, host=uh, h1=err.h1, l2=err.l2, div=err.div_l2,
                p_l2=perr, residual=sol.residual, system=S)


def stokes_convergence(base, last, pair="el-p0", epsilon=1.0, first=0):
    rows = []
    prev = None
    for lev, tri in levels(base, last, first):
        require_assumption1(tri)
        r = stokes_single(tri, pair, epsilon)
        rows.append(dict(level=lev, h=tri.h(), u_h1=r["h1"],
                         u_rate=rate(prev and prev["u_h1"], r["h1"]),
                         p_l2=r["p_l2"], p_rate=rate(prev and prev["p_l2"], r["p_l2"])))
        prev = rows[-1]
    return StudyResult(rows, ["level", "h", "u_h1", "u_rate", "p_l2", "p_rate"])


def stokes_eigenvalues(tri, pair, k=6):
    """Kernel route for ``sbdfm-p1``; velocity-pressure route for ``el-p0``."""
    require_assumption1(tri)
    if pair == "sbdfm-p1":
        K = build_kernel_basis(tri)
        return stokes_eigs(assemble(tri, "gradgrad"), assemble(tri, "mass"), K, k)
    if pair == "el-p0":
        S = assemble_system(tri, "el-p0")
        return stokes_eigs_mixed(S.A, S.M, S.B, pressure_means(tri, "p0"), k)
    raise ValueError(f"no eigenvalue route for pair {pair!r}")


def eigen_study(base, last, pair="sbdfm-p1", k=6, first=0):
    rows = []
    for lev, tri in levels(base, last, first):
        r = stokes_eigenvalues(tri, pair, k)
        row = dict(level=lev, h=tri.h())
        for j, w in enumerate(r.values, 1):
            row[f"lambda{j}"] = float(w)
        for j in range(len(r.values) + 1, k + 1):
            row[f"lambda{j}"] = float("nan")
        row["max_residual"] = float(np.max(r.residuals))
        # one mark per column: d = decreased since the previous level, i = increased
        if rows:
            prev = rows[-1]
            row["trend"] = "".join(
                "-" if f"lambda{j}" not in prev or np.isnan(prev[f"lambda{j}"])
                else "d" if row[f"lambda{j}"] < prev[f"lambda{j}"] else "i"
                for j in range(1, len(r.values) + 1))
        else:
            row["trend"] = "-"
        rows.append(row)
    cols = (["level", "h"] + [f"lambda{j}" for j in range(1, k + 1)]
            + ["max_residual", "trend"])
    return StudyResult(rows, cols)


def infsup_study(base, last, pair="p1-p0", first=0):
    """``lambda_min_plus`` and ``lambda_max`` are the extreme nonzero singular
    values of the divergence form (square roots of the Schur pencil)."""
    rows = []
    prev = None
    for lev, tri in levels(base, last, first):
        require_assumption1(tri)
        S = assemble_system(tri, pair)
        if S.A.shape[0] == 0:
            raise SpaceError("velocity space is empty on this mesh")
        r = infsup_constant(S.A, S.B, S.Mp)
        rows.append(dict(level=lev, h=tri.h(), lambda_min_plus=r.beta,
                         rate=rate(prev and prev["lambda_min_plus"], r.beta),
                         lambda_max=r.beta_max, beta=r.beta, pencil_min_plus=r.lambda_min_plus,
                         pencil_max=r.lambda_max, zero_modes=r.n_zero,
                         residual=r.residual))
        prev = rows[-1]
    return StudyResult(rows, ["level", "h", "lambda_min_plus", "rate", "lambda_max", "beta",
                              "pencil_min_plus", "pencil_max", "zero_modes", "residual"])


def biharmonic_single(tri, zero=False):
    require_assumption1(tri)
    K = build_kernel_basis(tri)
    if zero:
        g, cu, gcu = zero_scalar, zero_vector, None
    else:
        bs = biharmonic_solution()
        g, cu, gcu = bs.g, bs.curl_u, bs.grad_curl_u
    x = solve_biharmonic(tri, K, g)
    err = error_norms(tri, K.matrix @ x, cu, gcu)
    return dict(x=x, K=K, h2=err.h1)


def biharmonic_study(base, last, first=0, zero=False):
    rows = []
    prev = None
    for lev, tri in levels(base, last, first):
        r = biharmonic_single(tri, zero)
        rows.append(dict(level=lev, h=tri.h(), h2_error=r["h2"],
                         rate=rate(prev and prev["h2_error"], r["h2"])))
        prev = rows[-1]
    return StudyResult(rows, ["level", "h", "h2_error", "rate"])


# --------------------------------------------------------------------------
# output


def format_csv(result, meta):
    lines = [f"# {k}: {v}" for k, v in meta.items()]
    lines.append(",".join(result.columns))
    for row in result.rows:
        cells = []
        for c in result.columns:
            v = row[c]
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(f"{float(v):.10g}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
