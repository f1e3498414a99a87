"""Reference minimisers built on an interior-point conic solver.

The anisotropic variation has the perspective form

    V(v) = min_{mu >= 0} mu + sum_x h^2 mu phi(x, |v(x)| / mu),

and for ``phi(x, t) = t^p / p`` each perspective term is representable with a
three-dimensional power cone (a second-order cone bounds ``|v(x)|``; cells
with ``p = 1`` reduce to ``|v(x)|``). The TGV evaluation and the denoising
problem thereby become exact conic programs, solved here to tight tolerances
as an independent check of the iterative solvers. Requires ``cvxpy``.
"""

import numpy as np
from scipy import sparse

from .errors import InputError, NumericError, UnsupportedFamilyError
from .fields import GridField
from .grid_ops import grad_raw, sym_grad_raw
from .phi import PowerConstant, VariableExponent
from .prox import check_phi_grid

__all__ = ["oracle_tgv", "oracle_denoise", "ORACLE_MAX_GRID"]

ORACLE_MAX_GRID = 16


def _cvxpy():
    try:
        import cvxpy as cp
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise UnsupportedFamilyError("the conic oracle requires the optional 'cvxpy' package") from exc
    return cp


def _exponents(phi, shape):
    if isinstance(phi, VariableExponent):
        return np.asarray(phi.exponents.values, dtype=float)
    if isinstance(phi, PowerConstant):
        return np.full(shape, phi.p)
    raise UnsupportedFamilyError(f"conic oracle supports power families only, got {phi!r}")


def _operator_matrix(func, in_shape, h):
    n = int(np.prod(in_shape))
    basis = np.zeros(in_shape)
    cols = []
    for k in range(n):
        basis.flat[k] = 1.0
        cols.append(sparse.csc_matrix(func(basis, h).reshape(-1, 1)))
        basis.flat[k] = 0.0
    return sparse.hstack(cols).tocsc()


def _variation_expr(cp, comps, p, weight, constraints):
    """Epigraph of the anisotropic variation of a field given by its channel expressions.

    ``comps`` is a list of affine expressions (one per channel, each of length
    ``n``) already scaled so that their Euclidean norm is the pointwise magnitude.
    """
    mag = cp.norm(cp.vstack(comps), 2, axis=0)
    mu = cp.Variable(nonneg=True)
    lin = p == 1.0
    total = mu
    if np.any(lin):
        idx = np.flatnonzero(lin)
        total = total + weight * cp.sum(mag[idx])
    if np.any(~lin):
        idx = np.flatnonzero(~lin)
        r = cp.Variable(idx.size)
        t = cp.Variable(idx.size)
        constraints.append(r >= mag[idx])
        for k, cell in enumerate(idx):
            pk = float(p.flat[cell])
            constraints.append(cp.PowCone3D(pk * t[k], mu, r[k], 1.0 / pk))
        total = total + weight * cp.sum(t)
    return total


def _build_tgv(cp, phi, alpha, shape, h, u_expr, constraints):
    height, width = shape
    n = height * width
    p = _exponents(phi, shape).ravel()
    Dm = _operator_matrix(grad_raw, shape, h)
    Em = _operator_matrix(sym_grad_raw, (2, height, width), h)
    w = cp.Variable(2 * n)
    v = Dm @ u_expr - w
    e = Em @ w
    first = _variation_expr(cp, [v[:n], v[n:]], p, h * h, constraints)
    second = _variation_expr(cp, [e[:n], e[n : 2 * n], np.sqrt(2.0) * e[2 * n :]], p, h * h, constraints)
    return alpha.alpha2 * first + alpha.alpha1 * second, w


def _solve(cp, problem, max_iters):
    opts = dict(max_iter=int(max_iters), tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11, tol_ktratio=1e-9)
    try:
        problem.solve(solver="CLARABEL", **opts)
    except cp.error.SolverError as exc:  # pragma: no cover - solver failure is environment dependent
        raise NumericError(f"conic oracle failed: {exc}") from exc
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise NumericError(f"conic oracle returned status {problem.status}")


def _check_size(shape):
    if max(shape) > ORACLE_MAX_GRID:
        raise InputError(f"oracle limited to {ORACLE_MAX_GRID}x{ORACLE_MAX_GRID} grids")


def oracle_tgv(phi, alpha, u, iters=200):
    """Exact TGV value by conic programming; returns ``(value, w)``."""
    from .tgv import tgv_energy

    cp = _cvxpy()
    u = u if isinstance(u, GridField) else GridField(u)
    check_phi_grid(phi, u.shape)
    _check_size(u.shape)
    constraints = []
    objective, w = _build_tgv(cp, phi, alpha, u.shape, u.h, u.values.ravel(), constraints)
    problem = cp.Problem(cp.Minimize(objective), constraints)
    _solve(cp, problem, iters)
    w_val = np.asarray(w.value).reshape(2, *u.shape)
    return float(tgv_energy(phi, alpha, u.values, w_val, u.h)), GridField(w_val, u.h)


def oracle_denoise(f, phi, alpha, iters=200, K=None):
    """Reference minimiser of ``1/2 ||K u - f||^2 + TGV(u)`` by conic programming.

    The returned objective is re-evaluated with the library's own energy at
    the solver's point, so it is an attained upper bound on the minimum.
    """
    from .solver import DenoiseResult, denoise_energy

    cp = _cvxpy()
    f = f if isinstance(f, GridField) else GridField(f)
    check_phi_grid(phi, f.shape)
    _check_size(f.shape)
    h = f.h
    n = f.values.size
    u = cp.Variable(n)
    constraints = []
    reg, w = _build_tgv(cp, phi, alpha, f.shape, h, u, constraints)
    if K is None:
        fit = u - f.values.ravel()
    else:
        Km = _operator_matrix(lambda x, _h: K.forward(x), f.shape, h)
        fit = Km @ u - f.values.ravel()
    objective = 0.5 * h * h * cp.sum_squares(fit) + reg
    problem = cp.Problem(cp.Minimize(objective), constraints)
    _solve(cp, problem, iters)
    u_val = np.asarray(u.value).reshape(f.shape)
    w_val = np.asarray(w.value).reshape(2, *f.shape)
    energy = denoise_energy(phi, alpha, f.values, u_val, w_val, h, K)
    return DenoiseResult(
        u_star=GridField(u_val, h),
        w_star=GridField(w_val, h),
        energy_trace=[energy],
        gap_trace=[abs(energy - float(problem.value))],
        iters_used=int(problem.solver_stats.num_iters or 0),
        converged=True,
        objective=energy,
    )
