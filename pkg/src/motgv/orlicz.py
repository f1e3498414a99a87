"""Modulars, Luxemburg norms and the anisotropic variation on grid fields.

For a Phi-function ``phi`` and a field ``v`` with pointwise magnitude ``|v|``:

* the modular is ``rho(v) = sum_x phi(x, |v(x)|) h^2``;
* the Luxemburg norm is ``inf{lam > 0 : rho(v / lam) <= 1}``;
* the anisotropic variation is the dual-ball supremum
  ``V(v) = sup{<psi, v> : rho_{phi*}(psi) <= 1}``.

The supremum is computed through the scalar reduction

    V(v) = inf_{mu > 0} mu * (1 + rho(v / mu)),

which follows from aligning the optimal ``psi`` with ``v`` cell by cell and
dualising the single modular constraint. The function of ``mu`` is convex with
derivative ``1 - sum_x h^2 e(|v(x)| / mu)`` where ``e(t) = t phi'(t) - phi(t)``,
so its minimiser is found by root finding on ``log(mu)``. When the derivative
never vanishes (linear growth everywhere, or bounded ``e``) the infimum is the
limit ``mu -> 0+``, equal to ``sum_x phi_inf(x) |v(x)| h^2``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InputError, NumericError
from .fields import GridField, inner, magnitude
from .prox import check_phi_grid, project_ball_raw

__all__ = [
    "ModularValue",
    "modular",
    "modular_raw",
    "luxemburg_norm",
    "anisotropic_variation",
    "variation_raw",
    "dual_modular",
    "modular_seminorm",
    "oracle_variation",
]


@dataclass(frozen=True)
class ModularValue:
    """A modular value in the extended reals."""

    value: float
    finite_flag: bool

    def __float__(self):
        return float(self.value)

    @classmethod
    def of(cls, value):
        value = float(value)
        return cls(value, bool(np.isfinite(value)))


def _as_field(v):
    return v if isinstance(v, GridField) else GridField(v)


def modular_raw(phi, mags, weight):
    """``sum phi(x, mags) * weight`` with the ``0 * inf = 0`` convention."""
    vals = np.broadcast_to(phi.value(mags), np.shape(mags))
    vals = np.where(mags > 0, vals, 0.0)
    if np.any(np.isinf(vals)):
        return np.inf
    if np.any(np.isnan(vals)):
        raise NumericError("modular evaluation produced NaN")
    return float(np.sum(vals) * weight)


def modular(phi, v):
    """Discrete modular ``sum_x phi(x, |v(x)|) h^2``."""
    v = _as_field(v)
    check_phi_grid(phi, v.shape)
    return ModularValue.of(modular_raw(phi, v.magnitude(), v.cell_measure))


def _luxemburg(rho, scale, tol, max_steps=200):
    """Smallest ``lam`` with ``rho(lam) <= 1`` for a non-increasing ``rho``."""
    if scale <= 0:
        return 0.0
    lam = max(1e-12, scale)
    lo = hi = lam
    if rho(lam) <= 1.0:
        for _ in range(2000):
            lo = hi / 2.0
            if lo < 1e-300 or rho(lo) > 1.0:
                break
            hi = lo
        else:
            raise NumericError("could not bracket the Luxemburg norm")
        if lo < 1e-300:
            return 0.0
    else:
        for _ in range(2000):
            hi = lo * 2.0
            if rho(hi) <= 1.0:
                break
            lo = hi
        else:
            raise NumericError("could not bracket the Luxemburg norm")
    for step in range(max_steps):
        if hi - lo <= tol * hi:
            return hi
        mid = 0.5 * (lo + hi)
        if rho(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    if hi - lo <= tol * hi:
        return hi
    raise NumericError("Luxemburg bisection did not converge", iteration=max_steps)


def luxemburg_norm(phi, v, tol=1e-10):
    """``inf{lam > 0 : rho_phi(v / lam) <= 1}`` by bisection.

    The returned ``lam`` is always on the feasible side, i.e.
    ``rho(v / lam) <= 1``. ``tol`` bounds the relative bracket width.
    """
    if not tol > 0:
        raise InputError("tol must be positive")
    v = _as_field(v)
    check_phi_grid(phi, v.shape)
    mags = v.magnitude()
    peak = float(mags.max()) if mags.size else 0.0
    if peak == 0.0:
        return 0.0
    w = v.cell_measure
    return _luxemburg(lambda lam: modular_raw(phi, mags / lam, w), peak * v.h, tol)


def _recession_mass(phi, mags, weight):
    slope = np.broadcast_to(phi.conjugate_cap(), np.shape(mags))
    with np.errstate(invalid="ignore"):
        terms = np.where(mags > 0, slope * mags, 0.0)
    if np.any(np.isinf(terms)):
        return np.inf
    return float(np.sum(terms) * weight)


def variation_raw(phi, mags, weight, tol=1e-13):
    """Anisotropic variation from raw pointwise magnitudes.

    Returns ``(value, info)`` where ``info`` holds the optimal multiplier
    ``mu``, a ``saturated`` flag (infimum attained only as ``mu -> 0+``) and
    the magnitudes of the optimal dual field.
    """
    mags = np.asarray(mags, dtype=float)
    peak = float(mags.max()) if mags.size else 0.0
    if peak == 0.0:
        return 0.0, {"mu": None, "saturated": False, "dual_magnitude": np.zeros_like(mags)}
    support = mags > 0

    def excess_sum(mu):
        t = np.where(support, mags / mu, 0.0)
        e = np.broadcast_to(phi.young_excess(t), np.shape(mags))
        return float(np.sum(np.where(support, e, 0.0)) * weight)

    t_inf = np.where(support, np.inf, 0.0)
    e_inf = np.broadcast_to(phi.young_excess(t_inf), np.shape(mags))
    e_inf_sum = float(np.sum(np.where(support, e_inf, 0.0)) * weight)
    if e_inf_sum <= 1.0:
        value = _recession_mass(phi, mags, weight)
        slope = np.broadcast_to(phi.conjugate_cap(), np.shape(mags))
        return value, {"mu": 0.0, "saturated": True, "dual_magnitude": np.where(support, slope, 0.0)}

    def f(log_mu):
        return excess_sum(np.exp(log_mu)) - 1.0

    lo = hi = np.log(peak * np.sqrt(weight))
    f_lo = f_hi = f(lo)
    for _ in range(3000):
        if f_lo > 0:
            break
        lo -= 1.0
        f_lo = f(lo)
    else:
        raise NumericError("failed to bracket the variation multiplier")
    for _ in range(3000):
        if f_hi <= 0:
            break
        hi += 1.0
        f_hi = f(hi)
    else:
        raise NumericError("failed to bracket the variation multiplier")
    if f_hi == 0:
        log_mu = hi
    else:
        log_mu = brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    mu = float(np.exp(log_mu))
    t = np.where(support, mags / mu, 0.0)
    value = mu * (1.0 + modular_raw(phi, t, weight))
    dual = np.where(support, np.broadcast_to(phi.derivative(t), np.shape(mags)), 0.0)
    if not np.isfinite(value):
        raise NumericError("variation evaluated to a non-finite value")
    return value, {"mu": mu, "saturated": False, "dual_magnitude": dual}


def anisotropic_variation(phi, v, tol=1e-13, return_info=False):
    """Dual-ball supremum ``sup{<psi, v> : rho_{phi*}(psi) <= 1}``.

    With ``return_info=True`` also returns a dict with the multiplier ``mu``,
    the ``saturated`` flag and the optimal dual field ``psi``.
    """
    v = _as_field(v)
    check_phi_grid(phi, v.shape)
    mags = v.magnitude()
    value, info = variation_raw(phi, mags, v.cell_measure, tol)
    if return_info:
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(mags > 0, info["dual_magnitude"] / np.where(mags > 0, mags, 1.0), 0.0)
        info = dict(info, psi=v.with_values(v.values * scale))
        return value, info
    return value


def dual_modular(phi, v):
    """``sum_x sup_s [|v(x)| s - phi*(x, s)] h^2 = sum_x phi**(x, |v(x)|) h^2``.

    For the convex families shipped here ``phi** = phi``, so this coincides
    with :func:`modular`; the biconjugate is nevertheless taken through the
    conjugate closed forms.
    """
    return modular(phi.conjugate().conjugate(), v)


def modular_seminorm(phi, v, tol=1e-10):
    """Luxemburg-type norm of :func:`dual_modular`."""
    return luxemburg_norm(phi.conjugate().conjugate(), v, tol)


def oracle_variation(phi, v, iters=500, step=None):
    """Lower bound on the anisotropic variation by projected gradient ascent.

    Maximises the linear functional ``<psi, v>`` over the conjugate-modular
    unit ball by repeated projection of ``psi + step * v``. Every iterate is
    rescaled to exact feasibility before it is scored, so the best value
    found is a certified lower bound that can only increase with ``iters``.
    """
    v = _as_field(v)
    check_phi_grid(phi, v.shape)
    if v.norm() == 0.0:
        return 0.0
    h = v.h
    weight = v.cell_measure
    if step is None:
        step = 1.0 / max(v.norm(), 1e-300)
    psi = np.zeros_like(v.values)
    cap = np.broadcast_to(phi.conjugate_cap(), v.shape)
    best = 0.0
    mu = None
    for _ in range(int(iters)):
        psi, mu = project_ball_raw(phi, psi + step * v.values, 1.0, h, mu_hint=mu or None)
        mags = magnitude(psi)
        # rounding may push a clamped magnitude just past the domain of phi*
        with np.errstate(invalid="ignore", divide="ignore"):
            over = np.max(np.where(np.isfinite(cap), mags / cap, 0.0), initial=0.0)
        shrink = 1.0 / over if over > 1.0 else 1.0
        vals = np.where(mags > 0, phi.conjugate_value(shrink * mags), 0.0)
        if not np.all(np.isfinite(vals)):
            continue
        rho = float(np.sum(vals) * weight)
        score = shrink * inner(psi, v.values, h) / max(1.0, rho)
        best = max(best, score)
    return best
