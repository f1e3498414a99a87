"""Projections onto conjugate-modular balls ``{psi : rho_{phi*}(psi / alpha) <= 1}``.

The Euclidean projection onto such a ball acts radially in every cell: the
magnitude ``z = |psi(x)|`` is replaced by the pointwise prox

    s(x) = argmin_s 1/2 (s - z)^2 + mu * phi*(x, s / alpha)

with a single multiplier ``mu >= 0`` fixed by the active constraint
``rho_{phi*}(s / alpha) = 1``.
"""

import numpy as np
from scipy.optimize import brentq

from .errors import DimensionError, InputError, NumericError
from .fields import GridField, magnitude

__all__ = ["pointwise_prox_conjugate", "project_luxemburg_ball", "project_ball_raw", "check_phi_grid"]


def check_phi_grid(phi, shape):
    """Raise :class:`DimensionError` unless ``phi`` lives on a grid of ``shape``."""
    if phi.shape is not None and tuple(phi.shape) != tuple(shape):
        raise DimensionError(f"Phi-function grid {tuple(phi.shape)} does not match field grid {tuple(shape)}")


def pointwise_prox_conjugate(phi, x, z, mu, alpha):
    """``argmin_s 1/2 (s - z)^2 + mu * phi*(x, s / alpha)`` for one cell.

    On linear-growth cells (``p = 1``) the conjugate is an indicator and the
    result is the clamp ``min(z, alpha)``. On power cells the optimality
    condition ``s + mu (s/alpha)^(q-1) / alpha = z`` is solved by Newton's
    method with a bisection fallback.
    """
    if not mu > 0 or not alpha > 0:
        raise InputError("mu and alpha must be positive")
    if z < 0:
        raise InputError("z must be a non-negative magnitude")
    phi.check_cell(x)
    cell = x if phi.shape is not None else None
    return float(phi.prox_conjugate(np.float64(z), float(mu), float(alpha), cell))


def _conj_modular(phi, s, alpha, weight):
    vals = phi.conjugate_value(s / alpha)
    vals = np.where(s > 0, vals, 0.0)
    if np.any(np.isinf(vals)):
        return np.inf
    return float(np.sum(vals) * weight)


def project_ball_raw(phi, values, alpha, h, tol=1e-10, mu_hint=None):
    """Project a raw field array onto ``{rho_{phi*}(psi / alpha) <= 1}``.

    Returns ``(projected_values, mu)``. ``mu_hint`` (a previous multiplier)
    narrows the initial bracket for the multiplier search.
    """
    if not alpha > 0:
        raise InputError("ball radius must be positive")
    values = np.asarray(values, dtype=float)
    check_phi_grid(phi, values.shape[-2:])
    weight = h * h
    z = magnitude(values)
    if _conj_modular(phi, z, alpha, weight) <= 1.0:
        return values.copy(), 0.0

    def shrink(mu):
        return phi.prox_conjugate(z, mu, alpha)

    def excess(log_mu):
        return _conj_modular(phi, shrink(np.exp(log_mu)), alpha, weight) - 1.0

    s0 = shrink(0.0)
    if _conj_modular(phi, s0, alpha, weight) <= 1.0:
        mu = 0.0
        s = s0
    else:
        # bracket the multiplier on a log scale
        centre = np.log(mu_hint) if mu_hint else np.log(alpha * alpha)
        lo, hi = centre - 0.7, centre + 0.7
        f_lo, f_hi = excess(lo), excess(hi)
        steps = 0
        while f_lo <= 0:
            lo -= 2.0
            f_lo = excess(lo)
            steps += 1
            if steps > 400:
                # the constraint is already met at vanishing multiplier
                break
        steps = 0
        while f_hi > 0:
            hi += 2.0
            f_hi = excess(hi)
            steps += 1
            if steps > 400:
                raise NumericError("could not bracket the projection multiplier")
        if f_lo <= 0:
            log_mu = lo
        else:
            log_mu = brentq(excess, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
            if excess(log_mu) > tol:
                # the root landed marginally outside: bisect towards the feasible end
                a, b = log_mu, hi
                for _ in range(100):
                    mid = 0.5 * (a + b)
                    if excess(mid) > 0:
                        a = mid
                    else:
                        b = mid
                    if b - a < 1e-15 * max(1.0, abs(b)):
                        break
                log_mu = b
        mu = float(np.exp(log_mu))
        s = shrink(mu)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(z > 0, s / np.where(z > 0, z, 1.0), 0.0)
    # shave a few ulps off shrunk cells so that recomputed magnitudes cannot
    # overshoot a clamp (phi* jumps to +inf there)
    scale = np.where(s < z, scale * (1.0 - 8.0 * np.finfo(float).eps), scale)
    return values * scale, mu


def project_luxemburg_ball(phi, psi, alpha, tol=1e-10, return_multiplier=False):
    """Euclidean projection of ``psi`` onto ``{||psi||_{phi*} <= alpha}``.

    The ball equals ``{rho_{phi*}(psi / alpha) <= 1}``. Feasible fields are
    returned unchanged; otherwise each cell keeps its direction and has its
    magnitude shrunk by the pointwise conjugate prox.
    """
    if not isinstance(psi, GridField):
        psi = GridField(psi)
    out, mu = project_ball_raw(phi, psi.values, alpha, psi.h, tol=tol)
    result = psi.with_values(out)
    if return_multiplier:
        return result, mu
    return result
