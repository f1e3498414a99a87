"""Primal-dual solver for ``min_u 1/2 ||K u - f||^2 + TGV(u)``.

The problem is solved in the saddle form

    min_{u, w} max_{psi1, psi2}  <grad u - w, psi1> + <sym_grad w, psi2> + 1/2 ||K u - f||^2

with ``psi1`` confined to the ``phi*``-ball of radius ``alpha2`` and ``psi2``
to the ball of radius ``alpha1``, by the first-order primal-dual iteration
with extrapolation ``theta = 1``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import ConfigError, InputError, NumericError
from .fields import GridField, cell_centres, inner, norm2
from .grid_ops import OperatorPair, div_tensor_raw, div_vector_raw, grad_raw, sym_grad_raw
from .prox import check_phi_grid, pointwise_prox_conjugate, project_ball_raw, project_luxemburg_ball
from .tgv import TgvWeights, conjugate_norm, tgv_energy

__all__ = [
    "SolverConfig",
    "DenoiseResult",
    "denoise_energy",
    "denoise_tgv",
    "affine_projection",
    "check_affine_injective",
    "StabilityReport",
    "stability_experiment",
    "write_trace",
    "pointwise_prox_conjugate",
    "project_luxemburg_ball",
]


@dataclass
class SolverConfig:
    """Controls of :func:`denoise_tgv`.

    ``tau`` and ``sigma`` default to ``0.99 / L`` where ``L`` estimates the
    norm of the stacked operator ``(u, w) -> (grad u - w, sym_grad w)``.
    """

    max_iters: int = 5000
    tol_gap: float = 1e-6
    tau: Optional[float] = None
    sigma: Optional[float] = None
    eval_every: int = 10
    power_iters: int = 50
    oracle_mode: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be positive")
        if not self.tol_gap > 0:
            raise ConfigError("tol_gap must be positive")
        if self.eval_every < 1 or self.power_iters < 1:
            raise ConfigError("eval_every and power_iters must be positive")
        for name in ("tau", "sigma"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be positive")


@dataclass
class DenoiseResult:
    """Minimiser, auxiliary field and per-evaluation traces.

    ``energy_trace`` holds the best objective found up to each evaluation and
    is therefore non-increasing. ``gap_trace`` holds the matching relative
    duality gaps (for non-identity ``K`` the relative primal-dual residual).
    """

    u_star: GridField
    w_star: GridField
    energy_trace: list
    gap_trace: list
    iters_used: int
    converged: bool = False
    objective: float = np.nan
    trace_iterations: list = field(default_factory=list)


def denoise_energy(phi, alpha, f, u, w, h, K=None):
    """``1/2 ||K u - f||^2 + alpha2 V(grad u - w) + alpha1 V(sym_grad w)``."""
    ku = u if K is None else K.forward(u)
    fit = 0.5 * norm2(ku - f, h) ** 2
    return fit + tgv_energy(phi, alpha, u, w, h)


def _stacked_norm(shape, h, iters, seed):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(shape)
    w = rng.standard_normal((2, *shape))
    best = 0.0
    for _ in range(iters):
        s = np.sqrt(norm2(u, h) ** 2 + norm2(w, h) ** 2)
        u, w = u / s, w / s
        a = grad_raw(u, h) - w
        b = sym_grad_raw(w, h)
        best = max(best, np.sqrt(norm2(a, h) ** 2 + norm2(b, h) ** 2))
        u = -div_vector_raw(a, h)
        w = -a - div_tensor_raw(b, h)
    return best


def _is_identity(K):
    return K is None or getattr(K, "name", "") == "identity"


class _QuadraticProx:
    """``argmin_u 1/2 ||u - v||^2 / tau + 1/2 ||K u - f||^2``."""

    def __init__(self, K, f, tau, h):
        self.K = K
        self.f = f
        self.tau = tau
        self.shape = f.shape
        if _is_identity(K):
            self.kf = None
        else:
            self.kf = K.adjoint(f)
            n = f.size

            def matvec(x):
                x = x.reshape(self.shape)
                return (x + tau * K.adjoint(K.forward(x))).ravel()

            self.op = LinearOperator((n, n), matvec=matvec, dtype=float)

    def __call__(self, v, guess):
        if self.kf is None:
            return (v + self.tau * self.f) / (1.0 + self.tau)
        rhs = (v + self.tau * self.kf).ravel()
        x, info = cg(self.op, rhs, x0=guess.ravel(), rtol=1e-12, atol=0.0, maxiter=500)
        if info < 0:
            raise NumericError("conjugate gradients failed in the data-fit prox")
        return x.reshape(self.shape)


def _dual_value_identity(phi, alpha, f, psi2, h):
    """Certified dual objective for ``K = I`` from a second-order dual field."""
    d = div_vector_raw(div_tensor_raw(psi2, h), h)
    dd = norm2(d, h) ** 2
    if dd == 0.0:
        return 0.0
    n1 = conjugate_norm(phi, psi2, h)
    n2 = conjugate_norm(phi, div_tensor_raw(psi2, h), h)
    s_max = np.inf
    if n1 > 0:
        s_max = min(s_max, alpha.alpha1 / n1)
    if n2 > 0:
        s_max = min(s_max, alpha.alpha2 / n2)
    fd = inner(f, d, h)
    s = float(np.clip(fd / dd, 0.0, s_max))
    return s * fd - 0.5 * s * s * dd


def denoise_tgv(f, K, phi, alpha, cfg=None, u0=None, w0=None):
    """Minimise ``1/2 ||K u - f||^2 + TGV(u)`` over ``u``.

    ``K`` is an :class:`OperatorPair` (``None`` means the identity). The
    exact objective is evaluated every ``cfg.eval_every`` iterations and the
    best iterate is returned. Iteration stops when the relative duality gap
    falls below ``cfg.tol_gap`` (relative to the objective, floored at
    ``1e-8`` times the data energy) or after ``cfg.max_iters`` steps.
    """
    cfg = cfg or SolverConfig()
    if not isinstance(f, GridField):
        f = GridField(f)
    if f.channels != 1:
        raise InputError("denoising expects a scalar datum")
    if not isinstance(alpha, TgvWeights):
        alpha = TgvWeights(*alpha)
    check_phi_grid(phi, f.shape)
    if cfg.oracle_mode:
        from .oracle import oracle_denoise

        return oracle_denoise(f, phi, alpha, K=None if _is_identity(K) else K)
    h = f.h
    fv = f.values
    if K is not None and tuple(K.domain_shape) != tuple(f.shape):
        raise InputError("operator domain does not match the datum grid")
    if not _is_identity(K):
        check_affine_injective(K, f.shape, h)

    L = 1.02 * _stacked_norm(f.shape, h, cfg.power_iters, cfg.seed)
    # the data term enters through its proximal map, so L only covers the regulariser
    tau = cfg.tau if cfg.tau is not None else 0.99 / L
    sigma = cfg.sigma if cfg.sigma is not None else 0.99 / L
    if tau * sigma * L * L > 1.0 + 1e-12:
        raise ConfigError(f"step sizes violate tau*sigma*L^2 <= 1 (L = {L:.4g})")

    u = fv.copy() if u0 is None else np.array(getattr(u0, "values", u0), dtype=float)
    w = grad_raw(u, h) if w0 is None else np.array(getattr(w0, "values", w0), dtype=float)
    psi1 = np.zeros((2, *f.shape))
    psi2 = np.zeros((3, *f.shape))
    prox = _QuadraticProx(K, fv, tau, h)
    identity = _is_identity(K)

    best = denoise_energy(phi, alpha, fv, u, w, h, None if identity else K)
    best_u, best_w = u.copy(), w.copy()
    best_dual = -np.inf
    # gaps are relative to the objective, but never to less than a tiny
    # fraction of the data energy, so near-zero minima (affine data) terminate
    scale_floor = 1e-8 * 0.5 * norm2(fv, h) ** 2
    energy_trace = [best]
    gap_trace = [np.inf]
    trace_its = [0]
    u_bar, w_bar = u.copy(), w.copy()
    mu1 = mu2 = None
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        psi1, mu1 = project_ball_raw(
            phi, psi1 + sigma * (grad_raw(u_bar, h) - w_bar), alpha.alpha2, h, mu_hint=mu1 or None
        )
        psi2, mu2 = project_ball_raw(phi, psi2 + sigma * sym_grad_raw(w_bar, h), alpha.alpha1, h, mu_hint=mu2 or None)
        u_new = prox(u + tau * div_vector_raw(psi1, h), u)
        w_new = w + tau * (psi1 + div_tensor_raw(psi2, h))
        u_bar = 2.0 * u_new - u
        w_bar = 2.0 * w_new - w
        du_step = u_new - u
        dw_step = w_new - w
        u, w = u_new, w_new
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(w))):
            raise NumericError("non-finite iterate in the denoising solver", iteration=it)
        if it % cfg.eval_every == 0 or it == cfg.max_iters:
            energy = denoise_energy(phi, alpha, fv, u, w, h, None if identity else K)
            if energy < best:
                best, best_u, best_w = energy, u.copy(), w.copy()
            if identity:
                best_dual = max(best_dual, _dual_value_identity(phi, alpha, fv, psi2, h))
                gap = (best - best_dual) / max(abs(best), scale_floor, 1e-300)
            else:
                step = np.sqrt(norm2(du_step, h) ** 2 + norm2(dw_step, h) ** 2) / tau
                gap = step / max(abs(best), scale_floor, 1e-300)
            energy_trace.append(best)
            gap_trace.append(gap)
            trace_its.append(it)
            if gap <= cfg.tol_gap:
                converged = True
                break
    return DenoiseResult(
        u_star=GridField(best_u, h),
        w_star=GridField(best_w, h),
        energy_trace=energy_trace,
        gap_trace=gap_trace,
        iters_used=it,
        converged=converged,
        objective=best,
        trace_iterations=trace_its,
    )


def check_affine_injective(K, shape, h, rtol=1e-10):
    """Raise :class:`InputError` unless ``K`` maps ``1, x1, x2`` to independent images.

    Without this the affine part of a minimiser is not determined by the data
    (the regulariser does not see it), so the problem has no unique solution.
    """
    x1, x2 = cell_centres(shape, h)
    images = np.stack([np.ravel(K.forward(b)) for b in (np.ones(shape), x1, x2)], axis=1)
    sv = np.linalg.svd(images, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= rtol * sv[0]:
        raise InputError("operator is not injective on affine functions")


def affine_projection(u):
    """``h^2``-weighted orthogonal projection onto ``span{1, x1, x2}``.

    Returns ``(affine_part, residual)`` as scalar fields.
    """
    if not isinstance(u, GridField):
        u = GridField(u)
    if u.channels != 1:
        raise InputError("affine projection expects a scalar field")
    x1, x2 = cell_centres(u.shape, u.h)
    basis = np.stack([np.ones(u.shape), x1, x2]).reshape(3, -1)
    gram = basis @ basis.T
    if u.height < 2 or u.width < 2 or np.linalg.cond(gram) > 1e12:
        raise InputError("affine projection needs a grid of at least 2x2 cells")
    coef = np.linalg.solve(gram, basis @ u.values.ravel())
    affine = (coef @ basis).reshape(u.shape)
    return GridField(affine, u.h), GridField(u.values - affine, u.h)


@dataclass
class StabilityReport:
    noise_levels: list
    objective_differences: list
    solution_differences: list
    objectives: list
    reference_objective: float
    seed: int
    objective_monotone: bool
    solution_monotone: bool
    orientation: float = 1.0

    @property
    def passed(self):
        return self.objective_monotone and self.solution_monotone

    def to_text(self):
        lines = [
            f"seed {self.seed} (orientation {self.orientation:+g}); "
            f"reference objective {self.reference_objective:.10g}",
            f"{'delta':>10} {'|minF_d - minF_0|':>20} {'||u_d - u_0||':>16}",
        ]
        for d, a, b in zip(self.noise_levels, self.objective_differences, self.solution_differences):
            lines.append(f"{d:>10.4g} {a:>20.6g} {b:>16.6g}")
        lines.append(f"objective differences non-increasing: {self.objective_monotone}")
        lines.append(f"solution differences non-increasing: {self.solution_monotone}")
        return "\n".join(lines)

    def to_csv(self, path=None):
        rows = ["delta,objective_difference,solution_difference"]
        for d, a, b in zip(self.noise_levels, self.objective_differences, self.solution_differences):
            rows.append(f"{d!r},{a!r},{b!r}")
        text = "\n".join(rows) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _non_increasing(values, slack):
    return all(values[i + 1] <= (1.0 + slack) * values[i] + 1e-12 for i in range(len(values) - 1))


def stability_experiment(f, noise_levels, phi, alpha, cfg=None, seed=0, slack=0.1, K=None):
    """Minimise with data ``f + delta * eta`` for a decreasing sequence of ``delta``.

    ``eta`` is a fixed pseudo-random pattern of unit ``h^2``-weighted norm
    drawn from ``seed``, with its sign chosen so that it does not point
    against the residual of the unperturbed solution. Reports the differences of the minimal values and of
    the minimisers against the unperturbed problem, and whether both are
    non-increasing in ``delta`` up to the relative ``slack``.
    """
    if not isinstance(f, GridField):
        f = GridField(f)
    levels = [float(d) for d in noise_levels]
    if any(d < 0 for d in levels) or any(levels[i + 1] >= levels[i] for i in range(len(levels) - 1)):
        raise InputError("noise levels must be non-negative and strictly decreasing")
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal(f.shape)
    eta /= norm2(eta, f.h)
    cfg = cfg or SolverConfig(max_iters=20000, tol_gap=1e-9)
    ref = denoise_tgv(f, K, phi, alpha, cfg)
    # The minimal value is a convex function of delta whose slope at 0 is
    # <f - K u0, eta>. Orienting eta so that this slope is non-negative makes
    # the value difference monotone in delta; the orientation is reported.
    ku0 = ref.u_star.values if K is None else K.forward(ref.u_star.values)
    orientation = 1.0 if inner(f.values - ku0, eta, f.h) >= 0 else -1.0
    eta *= orientation
    obj_diff, sol_diff, objectives = [], [], []
    for delta in levels:
        if delta == 0.0:
            res = ref
        else:
            res = denoise_tgv(GridField(f.values + delta * eta, f.h), K, phi, alpha, cfg)
        objectives.append(res.objective)
        obj_diff.append(abs(res.objective - ref.objective))
        sol_diff.append(norm2(res.u_star.values - ref.u_star.values, f.h))
    return StabilityReport(
        noise_levels=levels,
        objective_differences=obj_diff,
        solution_differences=sol_diff,
        objectives=objectives,
        reference_objective=ref.objective,
        seed=seed,
        objective_monotone=_non_increasing(obj_diff, slack),
        solution_monotone=_non_increasing(sol_diff, slack),
        orientation=orientation,
    )


def write_trace(path, values, iterations=None):
    """Write a two-column ``iteration value`` text file."""
    iterations = range(len(values)) if iterations is None else iterations
    with open(path, "w") as fh:
        for it, value in zip(iterations, values):
            fh.write(f"{int(it)} {float(value)!r}\n")
