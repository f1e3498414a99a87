"""Spatially varying Phi-functions: evaluation, conjugation, recession, growth checks.

A Phi-function ``phi(x, t)`` is indexed by a grid cell ``x`` and a magnitude
``t >= 0``. Every family here is convex and left-continuous in ``t`` with
``phi(x, 0) = 0``; values may be ``+inf`` (extended reals) and the product
``0 * inf`` is taken to be ``0``.

All methods are vectorised: ``t`` is an array broadcastable to the grid shape
(or any shape for x-independent families). Passing a cell index ``x`` restricts
the parameters to that cell.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericError, UnsupportedFamilyError

__all__ = [
    "P_MAX_DEFAULT",
    "ExponentMap",
    "PhiSpec",
    "VariableExponent",
    "PowerConstant",
    "PowerThenLinear",
    "LinearThenPower",
    "Tabulated",
    "Conjugate",
    "A0Report",
    "GrowthReport",
    "eval_phi",
    "conjugate",
    "eval_conjugate_numeric",
    "recession",
    "left_derivative",
    "check_A0",
    "check_aInc_aDec",
    "DEFAULT_BETA_GRID",
]

P_MAX_DEFAULT = 10.0
# exponents in [1, 1 + P_ONE_SNAP] are treated as exactly 1
P_ONE_SNAP = 1e-12

DEFAULT_BETA_GRID = np.concatenate([np.linspace(1.0, 0.1, 10), np.geomspace(0.05, 1e-4, 12)])


# ---------------------------------------------------------------------------
# exponent maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExponentMap:
    """Per-cell exponent ``p(x)`` in ``[1, p_max]``.

    Exponents above ``p_max`` are clipped with a warning; exponents within
    ``1e-12`` of one are snapped to exactly one so that the set ``Y = {p = 1}``
    is unambiguous.
    """

    values: np.ndarray
    p_max: float = P_MAX_DEFAULT

    def __post_init__(self):
        p = np.array(self.values, dtype=float)
        if p.ndim != 2 or p.size == 0:
            raise InputError(f"exponent map must be a non-empty 2-D array, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InputError("exponent map contains non-finite values")
        if self.p_max < 1:
            raise InputError("p_max must be at least 1")
        if np.any(p < 1.0 - P_ONE_SNAP):
            raise InputError(f"exponents must be >= 1, found minimum {p.min()}")
        if np.any(p > self.p_max):
            warnings.warn(f"clipping exponents above p_max={self.p_max}", stacklevel=3)
            p = np.minimum(p, self.p_max)
        p[p <= 1.0 + P_ONE_SNAP] = 1.0
        p.setflags(write=False)
        object.__setattr__(self, "values", p)

    @property
    def shape(self):
        return self.values.shape

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def y_mask(self):
        """Boolean mask of the linear-growth set ``{p(x) = 1}``."""
        return self.values == 1.0

    @property
    def q(self):
        """Conjugate exponents ``p / (p - 1)``, ``+inf`` on the ``Y`` set."""
        p = self.values
        with np.errstate(divide="ignore"):
            return np.where(p > 1.0, p / np.where(p > 1.0, p - 1.0, 1.0), np.inf)

    @classmethod
    def constant(cls, shape, p, p_max=P_MAX_DEFAULT):
        return cls(np.full(shape, float(p)), p_max)

    @classmethod
    def from_csv(cls, path, p_max=P_MAX_DEFAULT):
        """Read a row-major CSV file, one grid row per line."""
        rows = []
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                cells = [c.strip() for c in row if c.strip()]
                if not cells:
                    continue
                try:
                    rows.append([float(c) for c in cells])
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: {exc}") from None
        if not rows:
            raise InputError(f"{path}: empty exponent map")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise InputError(f"{path}: rows have unequal length")
        return cls(np.array(rows), p_max)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in self.values:
                writer.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# Phi-function families
# ---------------------------------------------------------------------------


def _as_array(t):
    t = np.asarray(t, dtype=float)
    return t


class PhiSpec:
    """Interface of a spatially varying convex Phi-function.

    Subclasses provide closed forms for the value, its left derivative, the
    Fenchel conjugate ``phi*(x, s) = sup_t [s t - phi(x, t)]`` and the
    recession slope ``lim phi(x, t) / t``.
    """

    #: grid shape ``(H, W)``, or ``None`` when the function ignores ``x``
    shape = None

    def value(self, t, x=None):
        raise NotImplementedError

    def derivative(self, t, x=None):
        """Left derivative in ``t``."""
        raise NotImplementedError

    def conjugate_value(self, s, x=None):
        raise NotImplementedError

    def conjugate_derivative(self, s, x=None):
        """Left derivative of the conjugate; ``+inf`` outside its domain."""
        raise NotImplementedError

    def recession(self, x=None):
        raise NotImplementedError

    def domain_cap(self, x=None):
        """Supremum of ``{t : phi(x, t) < inf}``."""
        return np.inf

    def conjugate_cap(self, x=None):
        """Supremum of ``{s : phi*(x, s) < inf}``."""
        raise NotImplementedError

    def conjugate(self):
        return Conjugate(self)

    def young_excess(self, t, x=None):
        """``t phi'(t) - phi(t)``, which equals ``phi*(phi'(t))``."""
        t = _as_array(t)
        d = self.derivative(t, x)
        with np.errstate(invalid="ignore"):
            out = t * d - self.value(t, x)
        return np.where(t > 0, out, 0.0)

    def prox_conjugate(self, z, mu, alpha, x=None):
        """``argmin_s 1/2 (s - z)^2 + mu * phi*(x, s / alpha)`` for ``z >= 0``.

        Generic version: bisection on the monotone optimality condition.
        """
        z = _as_array(z)
        alpha = float(alpha)
        cap = np.broadcast_to(self.conjugate_cap(x), np.broadcast(z, self._grid_like(x)).shape)
        hi = np.minimum(np.broadcast_to(z, cap.shape), alpha * cap).astype(float)
        if mu == 0:
            return hi
        lo = np.zeros_like(hi)
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            g = mid + (mu / alpha) * self.conjugate_derivative(mid / alpha, x) - z
            lo = np.where(g < 0, mid, lo)
            hi = np.where(g < 0, hi, mid)
        return hi

    def cell_count(self):
        return 1 if self.shape is None else int(np.prod(self.shape))

    def _grid_like(self, x):
        if self.shape is None or x is not None:
            return np.zeros(())
        return np.zeros(self.shape)

    def check_cell(self, x):
        """Validate a cell index ``(i, j)`` against the grid."""
        if self.shape is None:
            return
        if x is None:
            raise InputError("a cell index is required for a spatially varying Phi-function")
        try:
            i, j = (int(v) for v in x)
        except (TypeError, ValueError):
            raise InputError(f"invalid cell index {x!r}") from None
        if not (0 <= i < self.shape[0] and 0 <= j < self.shape[1]):
            raise InputError(f"cell {x!r} outside grid of shape {self.shape}")

    def restrict(self, x):
        """The x-independent Phi-function of a single cell."""
        raise NotImplementedError


def _select(param, x):
    if x is None or np.ndim(param) == 0:
        return param
    return param[tuple(int(v) for v in x)]


class _PowerFamily(PhiSpec):
    """``t^p / p`` up to a threshold ``tau``, continued linearly beyond it.

    ``tau = inf`` gives the pure power; ``p = 1`` gives ``phi(t) = t``.
    """

    def __init__(self, p, tau, shape):
        self._p = p
        self._tau = tau
        self.shape = shape

    def _params(self, x):
        return _select(self._p, x), _select(self._tau, x)

    @staticmethod
    def _slope(p, tau):
        # slope of the terminal linear piece, +inf for the pure power
        with np.errstate(over="ignore"):
            s = np.where(np.isinf(tau), np.inf, np.power(np.where(np.isinf(tau), 1.0, tau), p - 1.0))
        return np.where(p == 1.0, 1.0, s)

    def value(self, t, x=None):
        t = _as_array(t)
        p, tau = self._params(x)
        lin = p == 1.0
        pp = np.where(lin, 2.0, p)
        tt = np.minimum(t, tau)
        with np.errstate(over="ignore", invalid="ignore"):
            head = np.power(tt, pp) / pp
            tail = np.where(t > tau, np.power(np.where(np.isinf(tau), 1.0, tau), pp - 1.0) * (t - tau), 0.0)
        return np.where(lin, t, head + tail)

    def derivative(self, t, x=None):
        t = _as_array(t)
        p, tau = self._params(x)
        lin = p == 1.0
        with np.errstate(over="ignore", divide="ignore"):
            d = np.power(np.minimum(t, tau), np.where(lin, 1.0, p - 1.0))
        return np.where(lin, 1.0, d)

    def young_excess(self, t, x=None):
        t = _as_array(t)
        p, tau = self._params(x)
        lin = p == 1.0
        pp = np.where(lin, 2.0, p)
        with np.errstate(over="ignore"):
            out = (pp - 1.0) / pp * np.power(np.minimum(t, tau), pp)
        return np.where(lin, 0.0, out)

    def conjugate_cap(self, x=None):
        p, tau = self._params(x)
        return self._slope(p, tau)

    def conjugate_value(self, s, x=None):
        s = _as_array(s)
        p, tau = self._params(x)
        lin = p == 1.0
        cap = self._slope(p, tau)
        q = np.where(lin, 2.0, p / np.where(lin, 1.0, p - 1.0))
        with np.errstate(over="ignore"):
            inner = np.where(lin, 0.0, np.power(s, q) / q)
        return np.where(s > cap, np.inf, inner)

    def conjugate_derivative(self, s, x=None):
        s = _as_array(s)
        p, tau = self._params(x)
        lin = p == 1.0
        cap = self._slope(p, tau)
        q = np.where(lin, 2.0, p / np.where(lin, 1.0, p - 1.0))
        with np.errstate(over="ignore"):
            inner = np.where(lin, 0.0, np.power(s, q - 1.0))
        return np.where(s > cap, np.inf, inner)

    def recession(self, x=None):
        p, tau = self._params(x)
        out = self._slope(p, tau)
        if self.shape is not None and x is None:
            out = np.broadcast_to(out, self.shape)
        return out

    def prox_conjugate(self, z, mu, alpha, x=None):
        z = _as_array(z)
        p, tau = self._params(x)
        alpha = float(alpha)
        cap = self._slope(p, tau)
        shape = np.broadcast(z, p, tau).shape
        z_b = np.broadcast_to(z, shape)
        p_b = np.broadcast_to(p, shape)
        cap_b = np.broadcast_to(cap, shape)
        out = np.array(np.minimum(z_b, alpha * cap_b), dtype=float)
        if mu == 0:
            return out
        power = (p_b > 1.0) & (z_b > 0)
        if np.any(power):
            pp = p_b[power]
            q = pp / (pp - 1.0)
            sigma = solve_power_prox(z_b[power] / alpha, mu / alpha**2, q)
            out[power] = alpha * np.minimum(sigma, cap_b[power])
        return out


def solve_power_prox(zeta, kappa, q, tol=1e-13, max_iter=100):
    """Solve ``sigma + kappa * sigma**(q-1) = zeta`` for ``sigma >= 0``.

    Newton's method on ``y = log(sigma)``, where the residual is a convex
    increasing function of ``y``; starting to the right of the root makes the
    iteration monotone. Cells that fail to converge fall back to bisection.
    """
    zeta = np.asarray(zeta, dtype=float)
    q = np.broadcast_to(np.asarray(q, dtype=float), zeta.shape)
    sigma = np.zeros_like(zeta)
    active = zeta > 0
    if kappa == 0:
        return zeta.copy()
    if not np.any(active):
        return sigma
    z = zeta[active]
    qa = q[active]
    e = qa - 1.0
    y = np.minimum(np.log(z), (np.log(z) - np.log(kappa)) / e)
    converged = np.zeros(z.shape, dtype=bool)
    for _ in range(max_iter):
        a = np.exp(y)
        b = kappa * np.exp(e * y)
        step = (a + b - z) / (a + e * b)
        step = np.where(converged, 0.0, step)
        y = y - step
        converged |= np.abs(step) <= tol
        if converged.all():
            break
    result = np.exp(y)
    bad = ~converged | ~np.isfinite(result)
    if np.any(bad):
        result[bad] = _bisect_power_prox(z[bad], kappa, qa[bad])
    sigma[active] = result
    return sigma


def _bisect_power_prox(z, kappa, q, iters=200):
    lo = np.zeros_like(z)
    hi = z.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        g = mid + kappa * np.power(mid, q - 1.0) - z
        lo = np.where(g < 0, mid, lo)
        hi = np.where(g < 0, hi, mid)
    if not np.all(np.isfinite(hi)):
        raise NumericError("power prox bisection produced non-finite values")
    return 0.5 * (lo + hi)


class VariableExponent(_PowerFamily):
    """``phi(x, t) = t^p(x) / p(x)`` for an :class:`ExponentMap`."""

    def __init__(self, exponents):
        if not isinstance(exponents, ExponentMap):
            exponents = ExponentMap(exponents)
        self.exponents = exponents
        super().__init__(exponents.values, np.inf, exponents.shape)

    @property
    def p_max(self):
        return self.exponents.p_max

    def restrict(self, x):
        self.check_cell(x)
        return PowerConstant(float(_select(self._p, x)), self.p_max)

    def __repr__(self):
        p = self.exponents.values
        return f"VariableExponent(shape={self.shape}, p in [{p.min():g}, {p.max():g}])"


class PowerConstant(_PowerFamily):
    """``phi(t) = t^p / p`` with one exponent for every cell."""

    def __init__(self, p, p_max=P_MAX_DEFAULT):
        p = float(p)
        if p < 1.0 - P_ONE_SNAP:
            raise InputError(f"exponent must be >= 1, got {p}")
        if p > p_max:
            warnings.warn(f"clipping exponent {p} to p_max={p_max}", stacklevel=2)
            p = p_max
        if p <= 1.0 + P_ONE_SNAP:
            p = 1.0
        self.p = p
        self.p_max = p_max
        super().__init__(np.float64(p), np.inf, None)

    def restrict(self, x):
        return self

    def __repr__(self):
        return f"PowerConstant(p={self.p:g})"


class PowerThenLinear(_PowerFamily):
    """Power growth ``t^p / p`` up to ``threshold``, then linear.

    The terminal slope ``threshold**(p - 1)`` is the recession value, so the
    function has linear growth at infinity.
    """

    def __init__(self, threshold, exponent, shape=None):
        tau = np.asarray(threshold, dtype=float)
        p = np.asarray(exponent, dtype=float)
        if np.any(tau <= 0):
            raise InputError("threshold must be positive")
        if np.any(p < 1.0 - P_ONE_SNAP):
            raise InputError("exponent must be >= 1")
        p = np.where(p <= 1.0 + P_ONE_SNAP, 1.0, p)
        if shape is None:
            nd = np.broadcast(tau, p).shape
            shape = nd if len(nd) == 2 else None
        if shape is not None:
            tau = np.broadcast_to(tau, shape)
            p = np.broadcast_to(p, shape)
        super().__init__(p, tau, shape)

    def restrict(self, x):
        self.check_cell(x)
        return PowerThenLinear(float(_select(self._tau, x)), float(_select(self._p, x)))

    def __repr__(self):
        return f"PowerThenLinear(shape={self.shape})"


class Tabulated(PhiSpec):
    """Piecewise-linear Phi-function from samples on a ``t`` grid.

    Linear interpolation in ``t``; beyond the last knot the function continues
    with ``terminal_slope``. ``values`` is either ``(n,)`` (x-independent) or
    ``(Hx, Wx, n)``; in the latter case, if ``shape`` differs from
    ``(Hx, Wx)`` the table is resampled to ``shape`` by nearest neighbour.
    Convexity is checked at construction.
    """

    def __init__(self, t_grid, values, terminal_slope=None, shape=None, tol=1e-12):
        knots = np.asarray(t_grid, dtype=float)
        vals = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.size < 2:
            raise InputError("t grid needs at least two knots")
        if knots[0] != 0 or np.any(np.diff(knots) <= 0):
            raise InputError("t grid must start at 0 and increase strictly")
        if vals.shape[-1] != knots.size or vals.ndim not in (1, 3):
            raise InputError("values must have shape (n,) or (Hx, Wx, n)")
        if vals.ndim == 3 and shape is not None and vals.shape[:2] != tuple(shape):
            rows = (np.arange(shape[0]) * vals.shape[0]) // shape[0]
            cols = (np.arange(shape[1]) * vals.shape[1]) // shape[1]
            vals = vals[rows][:, cols]
        if np.any(vals[..., 0] != 0):
            raise InputError("tabulated Phi-function must vanish at t = 0")
        slopes = np.diff(vals, axis=-1) / np.diff(knots)
        if np.any(slopes < -tol):
            raise InputError("tabulated Phi-function must be non-decreasing")
        if np.any(np.diff(slopes, axis=-1) < -tol):
            raise InputError("tabulated Phi-function is not convex")
        self.has_terminal_slope = terminal_slope is not None
        if terminal_slope is None:
            term = slopes[..., -1]
        else:
            term = np.broadcast_to(np.asarray(terminal_slope, dtype=float), slopes.shape[:-1])
            if np.any(term < slopes[..., -1] - tol):
                raise InputError("terminal slope smaller than the last segment slope")
        self.knots = knots
        self.values_table = vals
        self.slopes = np.concatenate([slopes, np.asarray(term)[..., None]], axis=-1)
        self.shape = vals.shape[:2] if vals.ndim == 3 else None

    def _tables(self, x):
        if self.shape is None or x is None:
            return self.values_table, self.slopes
        i, j = (int(v) for v in x)
        return self.values_table[i, j], self.slopes[i, j]

    @staticmethod
    def _gather(table, idx):
        if table.ndim == 1:
            return table[idx]
        idx = np.broadcast_to(idx, table.shape[:-1])
        return np.take_along_axis(table, idx[..., None], axis=-1)[..., 0]

    def _segment(self, t):
        n = self.knots.size
        return np.clip(np.searchsorted(self.knots, t, side="left") - 1, 0, n - 1)

    def value(self, t, x=None):
        t = _as_array(t)
        vals, slopes = self._tables(x)
        k = self._segment(t)
        return self._gather(vals, k) + self._gather(slopes, k) * (t - self.knots[k])

    def derivative(self, t, x=None):
        t = _as_array(t)
        _, slopes = self._tables(x)
        return self._gather(slopes, self._segment(t))

    def young_excess(self, t, x=None):
        t = _as_array(t)
        vals, slopes = self._tables(x)
        k = self._segment(t)
        out = self._gather(slopes, k) * self.knots[k] - self._gather(vals, k)
        return np.where(t > 0, out, 0.0)

    def conjugate_cap(self, x=None):
        _, slopes = self._tables(x)
        return slopes[..., -1]

    def conjugate_value(self, s, x=None):
        s = _as_array(s)
        vals, slopes = self._tables(x)
        cand = s[..., None] * self.knots - vals
        out = cand.max(axis=-1)
        return np.where(s > slopes[..., -1], np.inf, out)

    def conjugate_derivative(self, s, x=None):
        s = _as_array(s)
        _, slopes = self._tables(x)
        n = self.knots.size
        if slopes.ndim == 1:
            k = np.searchsorted(slopes, s, side="left")
        else:
            k = (slopes < s[..., None]).sum(axis=-1)
        out = self.knots[np.minimum(k, n - 1)]
        return np.where(k >= n, np.inf, out)

    def recession(self, x=None):
        if not self.has_terminal_slope:
            raise UnsupportedFamilyError(
                "tabulated Phi-function has no terminal-slope metadata; recession undefined"
            )
        _, slopes = self._tables(x)
        return slopes[..., -1]

    def restrict(self, x):
        self.check_cell(x)
        vals, slopes = self._tables(x)
        return Tabulated(self.knots, vals, slopes[-1] if self.has_terminal_slope else None)

    def __repr__(self):
        return f"Tabulated(knots={self.knots.size}, shape={self.shape})"


class Conjugate(PhiSpec):
    """The Fenchel conjugate of a convex family; conjugating again gives it back."""

    def __init__(self, base):
        self.base = base
        self.shape = base.shape

    def value(self, t, x=None):
        return self.base.conjugate_value(t, x)

    def derivative(self, t, x=None):
        return self.base.conjugate_derivative(t, x)

    def conjugate_value(self, s, x=None):
        return self.base.value(s, x)

    def conjugate_derivative(self, s, x=None):
        return self.base.derivative(s, x)

    def domain_cap(self, x=None):
        return self.base.conjugate_cap(x)

    def conjugate_cap(self, x=None):
        return self.base.domain_cap(x)

    def recession(self, x=None):
        # every base family is finite on [0, inf), so its conjugate is superlinear
        if self.shape is not None and x is None:
            return np.full(self.shape, np.inf)
        return np.inf

    def conjugate(self):
        return self.base

    def young_excess(self, t, x=None):
        t = _as_array(t)
        v = self.value(t, x)
        d = self.derivative(t, x)
        with np.errstate(invalid="ignore"):
            out = np.where(np.isinf(v), np.inf, t * np.where(np.isinf(d), 0.0, d) - v)
        return np.where(t > 0, out, 0.0)

    def restrict(self, x):
        return Conjugate(self.base.restrict(x))

    def __repr__(self):
        return f"Conjugate({self.base!r})"


# ---------------------------------------------------------------------------
# scalar operations
# ---------------------------------------------------------------------------


def _check_t(t, positive=False):
    t = float(t)
    if np.isnan(t) or t < 0 or (positive and t <= 0):
        bound = "positive" if positive else "non-negative"
        raise InputError(f"t must be {bound}, got {t}")
    return t


def eval_phi(phi, x, t):
    """``phi(x, t)`` for a single cell and magnitude."""
    t = _check_t(t)
    phi.check_cell(x)
    return float(phi.value(t, x if phi.shape is not None else None))


def conjugate(phi):
    """Closed-form Fenchel conjugate ``phi*``."""
    return phi.conjugate()


def recession(phi, x):
    """Recession value ``limsup_{t -> inf} phi(x, t) / t``."""
    phi.check_cell(x)
    return float(phi.recession(x if phi.shape is not None else None))


def left_derivative(phi, x, t):
    """Left derivative of ``t -> phi(x, t)``."""
    t = _check_t(t, positive=True)
    phi.check_cell(x)
    return float(phi.derivative(t, x if phi.shape is not None else None))


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, a, b, xtol=1e-12, max_iter=200):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return max(fc, fd)


def eval_conjugate_numeric(phi, x, t, s_max=50.0, n_samples=5001, return_flag=False):
    """Brute-force ``sup_{0 <= s <= s_max} [s t - phi(x, s)]``.

    The supremum over a uniform sample grid is refined by golden-section
    search around the best sample. The result never exceeds the true
    conjugate. When the best sample sits on the right edge of the grid while
    the objective is still increasing, the value is only a lower bound; with
    ``return_flag=True`` this is reported as the second return value.
    """
    t = _check_t(t)
    phi.check_cell(x)
    cell = x if phi.shape is not None else None
    cap = float(np.asarray(phi.domain_cap(cell)))
    upper = min(float(s_max), cap)
    s = np.linspace(0.0, upper, int(n_samples))

    def objective(sv):
        val = np.asarray(phi.value(sv, cell), dtype=float)
        return np.where(np.isinf(val), -np.inf, sv * t - val)

    f = objective(s)
    if np.any(np.isnan(f)):
        raise NumericError("non-finite intermediate in numeric conjugate")
    k = int(np.argmax(f))
    best = float(f[k])
    lo = s[max(k - 1, 0)]
    hi = s[min(k + 1, s.size - 1)]
    if hi > lo:
        best = max(best, _golden_max(lambda v: float(objective(np.float64(v))), lo, hi))
    lower_bound = k == s.size - 1 and upper < cap and f[-1] > f[-2]
    best = max(best, 0.0)
    if return_flag:
        return best, bool(lower_bound)
    return best


# ---------------------------------------------------------------------------
# growth conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class A0Report:
    holds: bool
    witness_beta: float = None


@dataclass(frozen=True)
class GrowthReport:
    aInc_holds: bool
    aDec_holds: bool
    L_inc: float
    L_dec: float
    worst_ratio_constants: dict = field(default_factory=dict)


def check_A0(phi, beta_grid=DEFAULT_BETA_GRID):
    """Search ``beta_grid`` for ``beta`` with ``phi(x, beta) <= 1 <= phi(x, 1/beta)`` at every cell.

    The grid is scanned in the given order and the first witness is reported.
    """
    betas = [float(b) for b in beta_grid]
    if not betas:
        raise InputError("beta grid must be non-empty")
    shape = phi.shape if phi.shape is not None else ()
    for beta in betas:
        if not 0 < beta <= 1:
            raise InputError(f"beta must lie in (0, 1], got {beta}")
        low = np.broadcast_to(phi.value(np.full(shape, beta)), shape)
        high = np.broadcast_to(phi.value(np.full(shape, 1.0 / beta)), shape)
        if np.all(low <= 1.0) and np.all(high >= 1.0):
            return A0Report(True, beta)
    return A0Report(False, None)


def _almost_monotone_constants(ratio):
    """Smallest L for almost-increasing and almost-decreasing along the last axis."""
    with np.errstate(invalid="ignore", divide="ignore"):
        run_max = np.maximum.accumulate(ratio, axis=-1)
        inc = run_max / ratio
        inc = np.where((run_max == 0) | (np.isinf(run_max) & np.isinf(ratio)), 1.0, inc)
        run_min = np.minimum.accumulate(ratio, axis=-1)
        dec = ratio / run_min
        dec = np.where(ratio == 0, 1.0, dec)
        dec = np.where(np.isinf(ratio) & np.isinf(run_min), 1.0, dec)
    return float(np.max(inc)), float(np.max(dec))


def check_aInc_aDec(phi, p_test, q_test, t_samples, L_max=4.0):
    """Sampled test of (aInc)_p and (aDec)_q.

    For every cell the ratio ``phi(x, t) / t^p`` is evaluated on the sorted
    samples and the smallest constant ``L`` making it ``L``-almost increasing
    on the samples is computed (likewise ``phi / t^q`` almost decreasing).
    A condition is reported as holding when its constant is at most ``L_max``.
    """
    t = np.asarray(t_samples, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) < 0):
        raise InputError("t_samples must be positive and sorted ascending")
    grid = phi.shape if phi.shape is not None else ()
    tt = np.broadcast_to(t, (*grid, t.size)) if grid else t
    vals = np.stack([np.broadcast_to(phi.value(np.full(grid, tk)), grid) for tk in t], axis=-1)
    with np.errstate(over="ignore"):
        inc_ratio = vals / np.power(tt, p_test)
        dec_ratio = vals / np.power(tt, q_test)
    L_inc, _ = _almost_monotone_constants(inc_ratio)
    _, L_dec = _almost_monotone_constants(dec_ratio)
    return GrowthReport(
        aInc_holds=bool(L_inc <= L_max),
        aDec_holds=bool(L_dec <= L_max),
        L_inc=L_inc,
        L_dec=L_dec,
        worst_ratio_constants={"aInc": L_inc, "aDec": L_dec},
    )


#: alias under the name used in configuration files
LinearThenPower = PowerThenLinear
