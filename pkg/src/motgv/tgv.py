"""Second-order total generalized variation with Orlicz-type dual constraints.

For weights ``alpha = (alpha1, alpha2)`` the regulariser has two equivalent
forms on the grid:

* dual:   ``sup{<u, div2 psi> : ||psi||_{phi*} <= alpha1, ||div psi||_{phi*} <= alpha2}``
* primal: ``min_w alpha2 * V(grad u - w) + alpha1 * V(sym_grad w)``

where ``V`` is the anisotropic variation of :mod:`motgv.orlicz`. Both are
computed here by independent algorithms, each of which also produces a
certificate for the other side, so every result carries a duality gap.
"""

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import ConfigError, InputError, NumericError, ResourceError
from .fields import GridField, cell_centres, inner, magnitude, norm2
from .grid_ops import div_tensor_raw, grad_raw, operator_norm, sym_grad_raw, sym_gradient_pair
from .orlicz import _luxemburg, modular_raw, variation_raw
from .phi import ExponentMap, PhiSpec, VariableExponent
from .prox import check_phi_grid, project_ball_raw

__all__ = [
    "TgvWeights",
    "TgvOptions",
    "TgvResult",
    "tgv_energy",
    "conjugate_norm",
    "dual_lower_bound",
    "tgv2_primal",
    "tgv2_dual",
    "tgv1",
    "tgv_rotation_check",
    "tgv_scaling_check",
    "RotationReport",
    "ScalingReport",
    "DecompositionReport",
    "decomposition_experiment",
    "strip_exponent",
    "MAX_DUAL_GRID",
    "MAX_DECOMPOSITION_LEVEL",
]

MAX_DUAL_GRID = 32
MAX_DECOMPOSITION_LEVEL = 8


@dataclass(frozen=True)
class TgvWeights:
    """``alpha1`` bounds the tensor dual field, ``alpha2`` its divergence."""

    alpha1: float = 1.0
    alpha2: float = 1.0

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.alpha2 > 0):
            raise ConfigError(f"TGV weights must be positive, got ({self.alpha1}, {self.alpha2})")
        if not (np.isfinite(self.alpha1) and np.isfinite(self.alpha2)):
            raise ConfigError("TGV weights must be finite")

    def scaled(self, factor1, factor2=None):
        factor2 = factor1 if factor2 is None else factor2
        return TgvWeights(self.alpha1 * factor1, self.alpha2 * factor2)


@dataclass
class TgvOptions:
    """Iteration controls shared by the primal and dual TGV solvers."""

    max_iters: int = 5000
    tol: float = 1e-6
    check_every: int = 10
    step_ratio: Optional[float] = None

    def __post_init__(self):
        if self.max_iters < 1 or self.check_every < 1:
            raise ConfigError("max_iters and check_every must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")


@dataclass
class TgvResult:
    """Outcome of a TGV evaluation.

    ``value`` is the best value of the form being optimised (an upper bound
    for the primal solver, a certified lower bound for the dual solver);
    ``gap`` is the distance to the opposite certificate.
    """

    value: float
    w_opt: GridField
    dual_certificate: Optional[GridField]
    gap: float
    lower_bound: float = 0.0
    upper_bound: float = np.inf
    iters: int = 0
    converged: bool = False
    history: list = field(default_factory=list)

    def __float__(self):
        return float(self.value)


def _as_scalar_field(u):
    if not isinstance(u, GridField):
        u = GridField(u)
    if u.channels != 1:
        raise InputError("TGV expects a scalar field")
    return u


def _variation(phi, values, h):
    return variation_raw(phi, magnitude(values), h * h)[0]


def tgv_energy(phi, alpha, u, w, h=None):
    """Primal objective ``alpha2 V(grad u - w) + alpha1 V(sym_grad w)`` for raw arrays."""
    if isinstance(u, GridField):
        h = u.h
        u = u.values
    if isinstance(w, GridField):
        w = w.values
    du = grad_raw(u, h)
    return alpha.alpha2 * _variation(phi, du - w, h) + alpha.alpha1 * _variation(phi, sym_grad_raw(w, h), h)


def conjugate_norm(phi, values, h, tol=1e-12):
    """Luxemburg norm of a raw field with respect to ``phi*`` (rounded upwards)."""
    mags = magnitude(values)
    peak = float(mags.max()) if mags.size else 0.0
    if peak == 0.0:
        return 0.0
    conj = phi.conjugate()
    weight = h * h
    return _luxemburg(lambda lam: modular_raw(conj, mags / lam, weight), peak * h, tol)


def dual_lower_bound(phi, alpha, c, psi, h):
    """Certified lower bound from a tensor field ``psi``.

    ``psi`` is scaled by the largest factor ``s <= 1`` keeping it inside both
    constraint balls; the bound is ``s * <c, psi>`` with ``c = sym_grad(grad u)``.
    Returns ``(bound, scaled_psi)``.
    """
    pairing = inner(c, psi, h)
    if not pairing > 0:
        return 0.0, np.zeros_like(psi)
    n1 = conjugate_norm(phi, psi, h)
    n2 = conjugate_norm(phi, div_tensor_raw(psi, h), h)
    s = 1.0
    if n1 > 0:
        s = min(s, alpha.alpha1 / n1)
    if n2 > 0:
        s = min(s, alpha.alpha2 / n2)
    return s * pairing, s * psi


def _negligible(phi, alpha, du, h):
    # values below this are round-off relative to the first-order bound alpha2 * V(grad u)
    return 1e-12 * alpha.alpha2 * _variation(phi, du, h)


def _stacked_norm(shape, h):
    # K w = (-w, sym_grad w); ||K||^2 <= 1 + ||sym_grad||^2
    e_norm = operator_norm(sym_gradient_pair(shape, h), 50)
    return 1.02 * np.sqrt(1.0 + e_norm**2)


def tgv2_primal(phi, alpha, u, opts=None, w0=None):
    """Minimise ``w -> alpha2 V(grad u - w) + alpha1 V(sym_grad w)``.

    Primal-dual iteration on the saddle form with dual fields confined to the
    ``phi*``-balls of radii ``alpha2`` (first order) and ``alpha1`` (second
    order). The exact primal objective is evaluated every
    ``opts.check_every`` iterations and the best iterate is kept, so the
    returned value is always an attained upper bound. The second-order dual
    field, rescaled to feasibility, gives the lower bound used for the gap.
    """
    opts = opts or TgvOptions()
    u = _as_scalar_field(u)
    check_phi_grid(phi, u.shape)
    h = u.h
    uv = u.values
    du = grad_raw(uv, h)
    c = sym_grad_raw(du, h)
    w = du.copy() if w0 is None else np.array(w0.values if isinstance(w0, GridField) else w0, dtype=float)
    psi1 = np.zeros_like(du)
    psi2 = np.zeros_like(c)
    L = _stacked_norm(u.shape, h)
    ratio = opts.step_ratio
    if ratio is None:
        # balance the dual radius against the size of the primal variable
        scale = max(np.abs(du).max(), 1e-12)
        ratio = np.clip(max(alpha.alpha1, alpha.alpha2) / scale * L, 1e-3, 1e3)
    sigma = 0.99 * ratio / L
    tau = 0.99 / (ratio * L)

    best = tgv_energy(phi, alpha, uv, w, h)
    best_w = w.copy()
    lower, cert = 0.0, np.zeros_like(c)
    history = [(0, best, lower)]
    mu1 = mu2 = None
    w_bar = w.copy()
    floor = _negligible(phi, alpha, du, h)
    converged = best <= floor
    it = 0
    for it in range(1, opts.max_iters + 1):
        if converged:
            it -= 1
            break
        psi1, mu1 = project_ball_raw(phi, psi1 + sigma * (du - w_bar), alpha.alpha2, h, mu_hint=mu1 or None)
        psi2, mu2 = project_ball_raw(phi, psi2 + sigma * sym_grad_raw(w_bar, h), alpha.alpha1, h, mu_hint=mu2 or None)
        w_new = w + tau * (psi1 + div_tensor_raw(psi2, h))
        w_bar = 2.0 * w_new - w
        w = w_new
        if not np.all(np.isfinite(w)):
            raise NumericError("non-finite iterate in primal TGV solver", iteration=it)
        if it % opts.check_every == 0 or it == opts.max_iters:
            energy = tgv_energy(phi, alpha, uv, w, h)
            if energy < best:
                best, best_w = energy, w.copy()
            lb, scaled = dual_lower_bound(phi, alpha, c, psi2, h)
            if lb > lower:
                lower, cert = lb, scaled
            history.append((it, best, lower))
            if best - lower <= opts.tol * best or best <= floor:
                converged = True
                break
    return TgvResult(
        value=float(best),
        w_opt=GridField(best_w, h),
        dual_certificate=GridField(cert, h),
        gap=float(best - lower),
        lower_bound=float(lower),
        upper_bound=float(best),
        iters=it,
        converged=bool(converged),
        history=history,
    )


def _tensor_divergence_matrix(shape, h):
    height, width = shape
    n_in = 3 * height * width
    basis = np.zeros((3, height, width))
    cols = []
    for k in range(n_in):
        basis.flat[k] = 1.0
        cols.append(sparse.csc_matrix(div_tensor_raw(basis, h).reshape(-1, 1)))
        basis.flat[k] = 0.0
    return sparse.hstack(cols).tocsc()


def tgv2_dual(phi, alpha, u, opts=None, return_result=False):
    """Maximise ``<u, div2 psi>`` over the two ``phi*``-ball constraints.

    Alternating-direction method of multipliers with splitting variables
    ``z1 = psi`` and ``z2 = div psi``; each is updated by an exact ball
    projection and the linear step is a sparse factorised solve. The value
    returned is a certified lower bound: the projected ``z1`` scaled into
    both balls. The scaled multiplier of the ``div psi`` constraint yields a
    primal candidate ``w`` whose energy is the matching upper bound.
    """
    opts = opts or TgvOptions()
    u = _as_scalar_field(u)
    check_phi_grid(phi, u.shape)
    if max(u.shape) > MAX_DUAL_GRID:
        raise ResourceError(f"dual TGV solver limited to {MAX_DUAL_GRID}x{MAX_DUAL_GRID} grids")
    h = u.h
    uv = u.values
    du = grad_raw(uv, h)
    c = sym_grad_raw(du, h)
    shape3 = c.shape
    shape2 = du.shape
    floor = _negligible(phi, alpha, du, h)
    e0 = tgv_energy(phi, alpha, uv, du, h)
    if norm2(c, h) == 0.0 or e0 <= floor:
        result = TgvResult(0.0, GridField(du, h), GridField(np.zeros(shape3), h), e0, 0.0, e0, 0, True)
        return result if return_result else 0.0

    M = _tensor_divergence_matrix(u.shape, h)
    d3 = np.repeat([1.0, 1.0, 2.0], u.shape[0] * u.shape[1])
    A = (sparse.diags(d3) + M.T @ M).tocsc()
    lu = splu(A)

    rho = float(np.abs(c).max() / max(alpha.alpha1, alpha.alpha2))
    z1 = np.zeros(shape3)
    z2 = np.zeros(shape2)
    y1 = np.zeros(shape3)
    y2 = np.zeros(shape2)
    lower, cert = 0.0, np.zeros(shape3)
    upper = tgv_energy(phi, alpha, uv, du, h)
    best_w = du.copy()
    mu1 = mu2 = None
    history = []
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        a = (c / rho + z1 - y1).ravel()
        b = (z2 - y2).ravel()
        psi = lu.solve(d3 * a + M.T @ b).reshape(shape3)
        mpsi = div_tensor_raw(psi, h)
        z1_old, z2_old = z1, z2
        z1, mu1 = project_ball_raw(phi, psi + y1, alpha.alpha1, h, mu_hint=mu1 or None)
        z2, mu2 = project_ball_raw(phi, mpsi + y2, alpha.alpha2, h, mu_hint=mu2 or None)
        r1 = psi - z1
        r2 = mpsi - z2
        y1 += r1
        y2 += r2
        if not (np.all(np.isfinite(y1)) and np.all(np.isfinite(y2))):
            raise NumericError("non-finite iterate in dual TGV solver", iteration=it)
        if it % opts.check_every == 0 or it == opts.max_iters:
            lb, scaled = dual_lower_bound(phi, alpha, c, z1, h)
            if lb > lower:
                lower, cert = lb, scaled
            w_cand = du + rho * y2
            energy = tgv_energy(phi, alpha, uv, w_cand, h)
            if energy < upper:
                upper, best_w = energy, w_cand
            history.append((it, lower, upper))
            if upper - lower <= opts.tol * upper or upper <= floor:
                converged = True
                break
            # residual balancing keeps primal and dual residuals comparable
            prim = np.sqrt(norm2(r1, h) ** 2 + norm2(r2, h) ** 2)
            dual = rho * np.sqrt(norm2(z1 - z1_old, h) ** 2 + norm2(z2 - z2_old, h) ** 2)
            if prim > 10.0 * dual:
                rho *= 2.0
                y1 /= 2.0
                y2 /= 2.0
            elif dual > 10.0 * prim:
                rho /= 2.0
                y1 *= 2.0
                y2 *= 2.0
    result = TgvResult(
        value=float(lower),
        w_opt=GridField(best_w, h),
        dual_certificate=GridField(cert, h),
        gap=float(upper - lower),
        lower_bound=float(lower),
        upper_bound=float(upper),
        iters=it,
        converged=converged,
        history=history,
    )
    return result if return_result else result.value


def tgv1(phi, alpha, u):
    """First-order case ``alpha * V(grad u)``."""
    u = _as_scalar_field(u)
    check_phi_grid(phi, u.shape)
    return float(alpha) * _variation(phi, grad_raw(u.values, u.h), u.h)


# ---------------------------------------------------------------------------
# invariance checks
# ---------------------------------------------------------------------------


@dataclass
class RotationReport:
    quarter_turns: int
    original: float
    rotated: float
    relative_difference: float
    passed: bool


def tgv_rotation_check(phi, alpha, u, quarter_turns=1, opts=None, rtol=1e-6):
    """Compare the TGV of ``u`` with that of ``u`` rotated by ``quarter_turns * 90`` degrees.

    Only x-independent Phi-functions on square grids are admissible. The
    discrete operators pair the two staggered derivative components of a cell
    differently after rotation, so the invariance is exact for quadratic
    growth and holds up to discretisation error otherwise; the report gives
    the measured relative difference.
    """
    u = _as_scalar_field(u)
    if phi.shape is not None:
        raise InputError("rotation check needs an x-independent Phi-function")
    if u.height != u.width:
        raise InputError("rotation check needs a square grid")
    k = int(quarter_turns) % 4
    opts = opts or TgvOptions(tol=1e-9, max_iters=20000)
    a = tgv2_primal(phi, alpha, u, opts).value
    if k == 0:
        b = a
    else:
        # np.rot90 turns counter-clockwise in (row, col) index space
        b = tgv2_primal(phi, alpha, GridField(np.rot90(u.values, k).copy(), u.h), opts).value
    scale = max(abs(a), abs(b), 1e-300)
    rel = abs(a - b) / scale
    return RotationReport(k, a, b, rel, bool(rel <= rtol))


@dataclass
class ScalingReport:
    zoom: int
    zoomed_value: float
    reference_value: float
    ratio: float
    expected_ratio: float
    relative_error: float


def tgv_scaling_check(phi, alpha, u, r, opts=None):
    """Compare ``TGV_alpha(u(r .))`` on the shrunk domain with ``r^-2 TGV_{(alpha1 r^2, alpha2 r)}(u)``.

    The shrunk image is the same array on cells of size ``h / r``. For
    linear growth the two sides agree exactly. For ``phi(t) = t^p / p`` with
    constant ``p`` the variation behaves like an ``L^p`` norm, which picks up
    the factor ``r^(-2/p)`` rather than ``r^-2`` from the smaller cells, so the
    ratio of the two sides is ``r^(2 - 2/p)``; this is reported as
    ``expected_ratio``.
    """
    u = _as_scalar_field(u)
    if phi.shape is not None:
        raise InputError("scaling check needs an x-independent Phi-function")
    r = int(r)
    if r < 1:
        raise InputError("zoom factor must be a positive integer")
    opts = opts or TgvOptions(tol=1e-8, max_iters=20000)
    zoomed = GridField(u.values, u.h / r)
    lhs = tgv2_primal(phi, alpha, zoomed, opts).value
    rhs = tgv2_primal(phi, TgvWeights(alpha.alpha1 * r * r, alpha.alpha2 * r), u, opts).value / r**2
    expected = _scaling_exponent_ratio(phi, r)
    if rhs == 0.0:
        ratio = 1.0 if lhs == 0.0 else np.inf
    else:
        ratio = lhs / rhs
    rel = abs(ratio - expected) / expected if np.isfinite(ratio) else np.inf
    return ScalingReport(r, lhs, rhs, ratio, expected, rel)


def _scaling_exponent_ratio(phi, r):
    p = getattr(phi, "p", None)
    if p is None or p == 1.0:
        return 1.0
    # V(v) on cells of size h/r equals r^(-2/p) V(v) on cells of size h
    return float(r ** (2.0 - 2.0 / p))


# ---------------------------------------------------------------------------
# decomposition experiment
# ---------------------------------------------------------------------------


def strip_exponent(x1, x2, lo=0.375, hi=0.625, p_out=2.0):
    """``p = 1`` on the vertical strip ``lo <= x1 <= hi``, ``p_out`` elsewhere."""
    return np.where((x1 >= lo) & (x1 <= hi), 1.0, p_out)


def _smooth_profile(x1, x2):
    # vanishes with its gradient on the boundary, like a compactly supported test field
    return np.sin(np.pi * x1) ** 2 * np.sin(np.pi * x2) ** 2


def _smooth_strain_magnitude(x1, x2):
    # field (u, 0): xi11 = du/dx1, xi12 = du/dx2 / 2, so |xi|^2 = u_1^2 + u_2^2 / 2
    u1 = np.pi * np.sin(2 * np.pi * x1) * np.sin(np.pi * x2) ** 2
    u2 = np.pi * np.sin(np.pi * x1) ** 2 * np.sin(2 * np.pi * x2)
    return np.sqrt(u1**2 + 0.5 * u2**2)


@dataclass
class DecompositionReport:
    """Per-level results of the jump-refinement experiment."""

    levels: list
    grid_sizes: list
    totals: list
    absolutely_continuous: list
    ac_reference: float
    singular_estimates: list
    singular_expected: float
    ratios: list
    diverging: bool
    jump_height: float

    @property
    def convergence_ratio(self):
        return self.ratios[-1] if self.ratios else None

    def rows(self):
        out = []
        for i, level in enumerate(self.levels):
            out.append(
                {
                    "level": level,
                    "n": self.grid_sizes[i],
                    "total": self.totals[i],
                    "absolutely_continuous": self.absolutely_continuous[i],
                    "singular_estimate": self.singular_estimates[i],
                    "ratio": self.ratios[i - 1] if i > 0 else float("nan"),
                }
            )
        return out

    def to_text(self):
        lines = [
            f"jump height {self.jump_height:g}; expected singular part {self.singular_expected:g}; "
            f"absolutely continuous reference {self.ac_reference:.6g}",
            f"{'level':>5} {'n':>5} {'total':>14} {'ac part':>14} {'singular':>14} {'ratio':>8}",
        ]
        for row in self.rows():
            lines.append(
                f"{row['level']:>5d} {row['n']:>5d} {row['total']:>14.6g} {row['absolutely_continuous']:>14.6g} "
                f"{row['singular_estimate']:>14.6g} {row['ratio']:>8.4g}"
            )
        if self.diverging:
            lines.append("singular estimate diverges under refinement (superlinear growth on the jump set)")
        return "\n".join(lines)

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.DictWriter(
            buf, fieldnames=["level", "n", "total", "absolutely_continuous", "singular_estimate", "ratio"],
            lineterminator="\n",
        )
        writer.writeheader()
        for row in self.rows():
            writer.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _phi_on_grid(phi, n):
    if isinstance(phi, PhiSpec):
        if phi.shape is not None:
            raise InputError("pass an exponent function or an x-independent Phi-function")
        return phi, None
    h = 1.0 / n
    x1, x2 = cell_centres((n, n), h)
    p = np.asarray(phi(x1, x2), dtype=float)
    return VariableExponent(ExponentMap(p)), phi


def _ac_reference(phi, n_fine=1024):
    h = 1.0 / n_fine
    x1, x2 = cell_centres((n_fine, n_fine), h)
    mag = _smooth_strain_magnitude(x1, x2)
    if isinstance(phi, PhiSpec):
        vals = phi.value(mag)
    else:
        vals = VariableExponent(ExponentMap(np.asarray(phi(x1, x2), dtype=float))).value(mag)
    return float(np.sum(vals) * h * h)


def decomposition_experiment(phi=strip_exponent, jump_height=1.0, levels=6):
    """Refinement study of the dual modular of ``sym_grad(u, 0)`` for a jump field.

    ``u`` is a smooth profile plus a jump of ``jump_height`` across the line
    ``x1 = 1/2`` on ``n x n`` grids, ``n = 2^k`` for ``k = 3..levels``.
    ``phi`` is either an exponent function ``p(x1, x2)`` (default: ``p = 1`` on
    a strip around the jump line, ``p = 2`` elsewhere) or an x-independent
    Phi-function. The singular estimate is the difference between the
    totals with and without the jump; with linear growth on the jump line it
    converges to ``phi_inf * jump_height * length``, with superlinear growth it
    diverges.
    """
    levels = int(levels)
    if levels > MAX_DECOMPOSITION_LEVEL:
        raise ResourceError(f"at most {MAX_DECOMPOSITION_LEVEL} refinement levels are supported")
    if levels < 3:
        raise InputError("at least three refinement levels are required")
    ks = list(range(3, levels + 1))
    totals, acs, sing, sizes = [], [], [], []
    line_slope = None
    for k in ks:
        n = 2**k
        h = 1.0 / n
        grid_phi, _ = _phi_on_grid(phi, n)
        x1, x2 = cell_centres((n, n), h)
        smooth = _smooth_profile(x1, x2)
        jump = jump_height * (x1 > 0.5)
        totals_k = []
        for u in (smooth + jump, smooth):
            field_vals = np.stack([u, np.zeros_like(u)])
            xi = sym_grad_raw(field_vals, h)
            totals_k.append(modular_raw(grid_phi.conjugate().conjugate(), magnitude(xi), h * h))
        totals.append(totals_k[0])
        acs.append(totals_k[1])
        sing.append(totals_k[0] - totals_k[1])
        sizes.append(n)
        # recession slope on the cells straddling the jump line (left neighbour column)
        slope = np.broadcast_to(grid_phi.conjugate_cap(), (n, n))[:, n // 2 - 1]
        line_slope = float(np.mean(slope))
    ratios = [sing[i] / sing[i - 1] if sing[i - 1] != 0 else float("nan") for i in range(1, len(sing))]
    expected = line_slope * abs(jump_height) * 1.0 if np.isfinite(line_slope) else np.inf
    diverging = bool(not np.isfinite(expected) and jump_height != 0)
    return DecompositionReport(
        levels=ks,
        grid_sizes=sizes,
        totals=totals,
        absolutely_continuous=acs,
        ac_reference=_ac_reference(phi),
        singular_estimates=sing,
        singular_expected=expected,
        ratios=ratios,
        diverging=diverging,
        jump_height=float(jump_height),
    )
