"""Finite-difference gradient, symmetric gradient and their divergences.

Staggering
----------
``grad`` takes forward differences with a homogeneous Neumann condition: the
first channel ``d/dx1`` lives on columns ``0..W-2`` and the second channel
``d/dx2`` on rows ``0..H-2``; the last column/row is zero.

``sym_grad`` differentiates each vector component only inside the support
that ``grad`` gives it:

* ``xi11`` on columns ``0..W-3`` (differences of ``w1`` within columns ``0..W-2``);
* ``xi22`` on rows ``0..H-3``;
* ``xi12`` on rows ``0..H-2`` x columns ``0..W-2``.

With this layout ``sym_grad(grad(u))`` vanishes exactly for affine ``u`` and
``sym_grad`` annihilates discrete rigid motions, so the second-order
regulariser has exactly the affine functions as its kernel.

The divergences are the exact negative adjoints under the ``h^2``-weighted
inner product of :mod:`motgv.fields` (tensor products weight ``xi12`` twice):
backward differences of the masked inputs with zero padding.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from .errors import InputError
from .fields import GridField, inner, norm2

__all__ = [
    "grad",
    "sym_grad",
    "div_tensor",
    "div_vector",
    "div2",
    "grad_raw",
    "sym_grad_raw",
    "div_tensor_raw",
    "div_vector_raw",
    "OperatorPair",
    "operator_norm",
    "identity_operator",
    "blur_operator",
    "gradient_pair",
    "sym_gradient_pair",
    "adjoint_mismatch",
]


# ---------------------------------------------------------------------------
# raw array kernels
# ---------------------------------------------------------------------------


def _bwd(a, axis):
    """Backward difference ``a[k] - a[k-1]`` with ``a[-1] = 0``."""
    out = a.copy()
    if axis == 1:
        out[:, 1:] -= a[:, :-1]
    else:
        out[1:, :] -= a[:-1, :]
    return out


def grad_raw(u, h):
    height, width = u.shape
    g = np.zeros((2, height, width))
    g[0, :, : width - 1] = (u[:, 1:] - u[:, :-1]) / h
    g[1, : height - 1, :] = (u[1:, :] - u[:-1, :]) / h
    return g


def sym_grad_raw(w, h):
    _, height, width = w.shape
    w1, w2 = w[0], w[1]
    xi = np.zeros((3, height, width))
    c2 = max(width - 2, 0)
    r2 = max(height - 2, 0)
    c1 = max(width - 1, 0)
    r1 = max(height - 1, 0)
    xi[0, :, :c2] = (w1[:, 1 : c2 + 1] - w1[:, :c2]) / h
    xi[1, :r2, :] = (w2[1 : r2 + 1, :] - w2[:r2, :]) / h
    xi[2, :r1, :c1] = 0.5 * (
        (w1[1 : r1 + 1, :c1] - w1[:r1, :c1]) + (w2[:r1, 1 : c1 + 1] - w2[:r1, :c1])
    ) / h
    return xi


def div_tensor_raw(psi, h):
    _, height, width = psi.shape
    c2 = max(width - 2, 0)
    r2 = max(height - 2, 0)
    c1 = max(width - 1, 0)
    r1 = max(height - 1, 0)
    a = np.zeros((height, width))
    b = np.zeros((height, width))
    c = np.zeros((height, width))
    a[:, :c2] = psi[0, :, :c2]
    b[:r2, :] = psi[1, :r2, :]
    c[:r1, :c1] = psi[2, :r1, :c1]
    out = np.empty((2, height, width))
    out[0] = (_bwd(a, 1) + _bwd(c, 0)) / h
    out[1] = (_bwd(b, 0) + _bwd(c, 1)) / h
    return out


def div_vector_raw(v, h):
    _, height, width = v.shape
    a = np.zeros((height, width))
    b = np.zeros((height, width))
    a[:, : width - 1] = v[0, :, : width - 1]
    b[: height - 1, :] = v[1, : height - 1, :]
    return (_bwd(a, 1) + _bwd(b, 0)) / h


# ---------------------------------------------------------------------------
# GridField wrappers
# ---------------------------------------------------------------------------


def _require(field, channels, name):
    if not isinstance(field, GridField):
        field = GridField(field)
    if field.channels != channels:
        kind = {1: "scalar", 2: "vector", 3: "tensor"}[channels]
        raise InputError(f"{name} expects a {kind} field, got {field.channels} channel(s)")
    return field


def grad(u):
    """Forward-difference gradient of a scalar field (Neumann boundary)."""
    u = _require(u, 1, "grad")
    return GridField(grad_raw(u.values, u.h), u.h)


def sym_grad(w):
    """Symmetrised gradient ``(xi11, xi22, xi12)`` of a vector field."""
    w = _require(w, 2, "sym_grad")
    return GridField(sym_grad_raw(w.values, w.h), w.h)


def div_tensor(psi):
    """Row-wise divergence of a symmetric tensor field, ``-sym_grad^*``."""
    psi = _require(psi, 3, "div_tensor")
    return GridField(div_tensor_raw(psi.values, psi.h), psi.h)


def div_vector(v):
    """Divergence of a vector field, ``-grad^*``."""
    v = _require(v, 2, "div_vector")
    return GridField(div_vector_raw(v.values, v.h), v.h)


def div2(psi):
    """Second-order divergence ``div_vector(div_tensor(psi))``."""
    return div_vector(div_tensor(psi))


# ---------------------------------------------------------------------------
# linear operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OperatorPair:
    """A linear map on raw field arrays together with its exact adjoint.

    ``domain_shape`` is the raw array shape of inputs; ``h`` the cell size
    used by the inner products. ``norm_estimate`` (optional) is an upper
    bound on the operator norm.
    """

    forward: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    domain_shape: tuple
    h: float
    norm_estimate: Optional[float] = None
    name: str = "operator"

    def __call__(self, x):
        if isinstance(x, GridField):
            return GridField(self.forward(x.values), x.h)
        return self.forward(np.asarray(x, dtype=float))

    def apply_adjoint(self, y):
        if isinstance(y, GridField):
            return GridField(self.adjoint(y.values), y.h)
        return self.adjoint(np.asarray(y, dtype=float))


def operator_norm(op, iters=50, seed=0):
    """Power-iteration estimate of ``||op||`` (a lower bound that grows with ``iters``)."""
    if iters < 1:
        raise InputError("iters must be at least 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.domain_shape)
    nx = norm2(x, op.h)
    if nx == 0:
        return 0.0
    x /= nx
    best = 0.0
    for _ in range(int(iters)):
        y = op.forward(x)
        best = max(best, norm2(y, op.h))
        z = op.adjoint(y)
        nz = norm2(z, op.h)
        if nz == 0:
            break
        x = z / nz
    return float(best)


def identity_operator(shape, h=None):
    h = 1.0 / max(shape) if h is None else h
    return OperatorPair(lambda x: x.copy(), lambda y: y.copy(), tuple(shape), h, 1.0, "identity")


def blur_operator(shape, sigma, h=None):
    """Gaussian blur with zero boundary; the kernel is symmetric so the map is self-adjoint."""
    if not sigma > 0:
        raise InputError("blur width must be positive")
    h = 1.0 / max(shape) if h is None else h

    def apply(x):
        return ndimage.gaussian_filter(x, sigma, mode="constant", cval=0.0)

    return OperatorPair(apply, apply, tuple(shape), h, 1.0, f"blur(sigma={sigma:g})")


def gradient_pair(shape, h=None):
    h = 1.0 / max(shape) if h is None else h
    return OperatorPair(
        lambda u: grad_raw(u, h),
        lambda v: -div_vector_raw(v, h),
        tuple(shape),
        h,
        np.sqrt(8.0) / h,
        "grad",
    )


def sym_gradient_pair(shape, h=None):
    h = 1.0 / max(shape) if h is None else h
    return OperatorPair(
        lambda w: sym_grad_raw(w, h),
        lambda psi: -div_tensor_raw(psi, h),
        (2, *shape),
        h,
        np.sqrt(8.0) / h,
        "sym_grad",
    )


def adjoint_mismatch(op, x, y):
    """Relative defect ``|<op x, y> - <x, op* y>|`` for a single pair."""
    lhs = inner(op.forward(x), y, op.h)
    rhs = inner(x, op.adjoint(y), op.h)
    scale = max(abs(lhs), abs(rhs), norm2(op.forward(x), op.h) * norm2(y, op.h), 1e-300)
    return abs(lhs - rhs) / scale
