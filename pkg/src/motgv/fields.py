"""Scalar, vector and symmetric-tensor fields on a uniform 2-D grid.

Array layout
------------
Arrays are indexed ``[row, column]``. The first coordinate ``x1`` runs along
columns (array axis 1) and the second coordinate ``x2`` along rows (axis 0).

* scalar fields have shape ``(H, W)``
* vector fields have shape ``(2, H, W)`` ordered ``(v1, v2)``
* tensor fields have shape ``(3, H, W)`` ordered ``(xi11, xi22, xi12)``

Tensors are symmetric 2x2 matrices, so the Frobenius magnitude counts the
off-diagonal entry twice: ``|xi|^2 = xi11^2 + xi22^2 + 2 xi12^2``. All inner
products carry the cell measure ``h^2``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError

__all__ = [
    "GridField",
    "default_h",
    "magnitude",
    "inner",
    "norm2",
    "channel_weights",
    "cell_centres",
]

_CHANNELS_BY_NDIM = {2: 1}


def default_h(shape):
    """Cell size giving the domain unit diameter along its longer side."""
    height, width = shape[-2], shape[-1]
    return 1.0 / max(height, width)


def channel_weights(channels):
    """Per-channel weights of the pointwise Euclidean/Frobenius product."""
    if channels == 3:
        return np.array([1.0, 1.0, 2.0])
    return np.ones(channels)


def _channels_of(values):
    if values.ndim == 2:
        return 1
    if values.ndim == 3 and values.shape[0] in (2, 3):
        return values.shape[0]
    raise InputError(f"cannot interpret array of shape {values.shape} as a grid field")


def magnitude(values):
    """Pointwise magnitude ``|v(x)|`` of a raw field array.

    Euclidean for scalars and vectors, Frobenius for symmetric tensors.
    """
    values = np.asarray(values, dtype=float)
    channels = _channels_of(values)
    if channels == 1:
        return np.abs(values)
    if channels == 2:
        return np.hypot(values[0], values[1])
    return np.sqrt(values[0] ** 2 + values[1] ** 2 + 2.0 * values[2] ** 2)


def inner(a, b, h):
    """h^2-weighted inner product of two raw arrays of the same kind."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    channels = _channels_of(a)
    if channels == 1:
        return float(np.sum(a * b) * h * h)
    w = channel_weights(channels)
    return float(np.einsum("c,chw,chw->", w, a, b) * h * h)


def norm2(a, h):
    """h^2-weighted L2 norm of a raw array."""
    return float(np.sqrt(max(inner(a, a, h), 0.0)))


@dataclass(frozen=True)
class GridField:
    """A field sampled at the cell centres of a uniform grid.

    Parameters
    ----------
    values : ndarray
        ``(H, W)``, ``(2, H, W)`` or ``(3, H, W)``.
    h : float, optional
        Cell size. Defaults to ``1 / max(H, W)``.
    """

    values: np.ndarray
    h: float = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        _channels_of(values)
        if values.shape[-1] < 1 or values.shape[-2] < 1:
            raise InputError("grid must have at least one cell")
        h = default_h(values.shape) if self.h is None else float(self.h)
        if not h > 0:
            raise InputError(f"cell size must be positive, got {h}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "h", h)

    @property
    def channels(self):
        return _channels_of(self.values)

    @property
    def shape(self):
        """Grid dimensions ``(height, width)``."""
        return self.values.shape[-2:]

    @property
    def height(self):
        return self.values.shape[-2]

    @property
    def width(self):
        return self.values.shape[-1]

    @property
    def cell_measure(self):
        return self.h * self.h

    def magnitude(self):
        return magnitude(self.values)

    def inner(self, other):
        self._check_compatible(other)
        return inner(self.values, other.values, self.h)

    def norm(self):
        return norm2(self.values, self.h)

    def with_values(self, values):
        return GridField(values, self.h)

    def _check_compatible(self, other):
        if self.values.shape != other.values.shape:
            raise DimensionError(
                f"field shapes differ: {self.values.shape} vs {other.values.shape}"
            )

    def __add__(self, other):
        self._check_compatible(other)
        return GridField(self.values + other.values, self.h)

    def __sub__(self, other):
        self._check_compatible(other)
        return GridField(self.values - other.values, self.h)

    def __mul__(self, scalar):
        return GridField(self.values * float(scalar), self.h)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return GridField(self.values / float(scalar), self.h)

    def __neg__(self):
        return GridField(-self.values, self.h)

    @classmethod
    def zeros(cls, shape, channels=1, h=None):
        if channels == 1:
            return cls(np.zeros(shape), h)
        return cls(np.zeros((channels, *shape)), h)

    @classmethod
    def from_function(cls, func, shape, h=None):
        """Sample ``func(x1, x2)`` at cell centres."""
        h = default_h(shape) if h is None else h
        x1, x2 = cell_centres(shape, h)
        return cls(np.asarray(func(x1, x2), dtype=float), h)


def cell_centres(shape, h):
    """Coordinate arrays ``(x1, x2)`` of the cell centres, each ``(H, W)``."""
    height, width = shape
    x2, x1 = np.meshgrid((np.arange(height) + 0.5) * h, (np.arange(width) + 0.5) * h,
                         indexing="ij")
    return x1, x2
