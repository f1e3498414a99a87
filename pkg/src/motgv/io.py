"""File formats: PGM images, key=value configuration files, run reports."""

import hashlib
import os

import numpy as np
from scipy import ndimage

from .errors import FormatError, InputError, ParseError
from .fields import GridField
from .grid_ops import grad_raw
from .phi import ExponentMap

__all__ = [
    "load_image",
    "save_image",
    "parse_config",
    "load_config",
    "make_pmap",
    "Report",
]

_WHITESPACE = b" \t\r\n\v\f"


class _HeaderReader:
    def __init__(self, data):
        self.data = data
        self.pos = 2

    def _skip(self):
        data = self.data
        while self.pos < len(data):
            ch = data[self.pos]
            if ch == ord("#"):
                end = data.find(b"\n", self.pos)
                self.pos = len(data) if end < 0 else end + 1
            elif ch in _WHITESPACE:
                self.pos += 1
            else:
                break

    def integer(self, what):
        self._skip()
        start = self.pos
        data = self.data
        while self.pos < len(data) and data[self.pos : self.pos + 1].isdigit():
            self.pos += 1
        if self.pos == start:
            if start >= len(data):
                raise ParseError(f"unexpected end of file while reading {what}", start)
            raise ParseError(f"expected an integer for {what}", start)
        return int(data[start : self.pos])


def load_image(path, return_maxval=False):
    """Read a greyscale PGM (``P2`` ASCII or ``P5`` binary, 8 or 16 bit).

    Values are scaled to ``[0, 1]`` by ``maxval``; the cell size follows the
    default ``1 / max(height, width)``.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"{path}: not a PGM file (magic {magic!r})")
    reader = _HeaderReader(data)
    width = reader.integer("width")
    height = reader.integer("height")
    maxval = reader.integer("maxval")
    if width < 1 or height < 1:
        raise ParseError("image dimensions must be positive", reader.pos)
    if not 0 < maxval <= 65535:
        raise ParseError(f"maxval {maxval} outside 1..65535", reader.pos)
    count = width * height
    if magic == b"P5":
        if reader.pos >= len(data) or data[reader.pos] not in _WHITESPACE:
            raise ParseError("missing whitespace after maxval", reader.pos)
        start = reader.pos + 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(data) - start < need:
            raise ParseError(f"truncated pixel data: expected {need} bytes, found {len(data) - start}", len(data))
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=start).astype(float)
    else:
        values = []
        for _ in range(count):
            values.append(reader.integer("pixel value"))
        raw = np.array(values, dtype=float)
    if raw.max(initial=0) > maxval:
        raise ParseError("pixel value exceeds maxval", reader.pos)
    field = GridField(raw.reshape(height, width) / maxval)
    if return_maxval:
        return field, maxval
    return field


def save_image(path, field, maxval=255, binary=False):
    """Write a field with values in ``[0, 1]`` as PGM (values are clipped and rounded)."""
    values = field.values if isinstance(field, GridField) else np.asarray(field, dtype=float)
    if values.ndim != 2:
        raise InputError("only scalar fields can be saved as images")
    if not 0 < maxval <= 65535:
        raise InputError("maxval must lie in 1..65535")
    levels = np.rint(np.clip(values, 0.0, 1.0) * maxval).astype(np.int64)
    height, width = levels.shape
    header = f"{'P5' if binary else 'P2'}\n{width} {height}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        if binary:
            dtype = ">u2" if maxval > 255 else "u1"
            fh.write(levels.astype(dtype).tobytes())
        else:
            for row in levels:
                fh.write((" ".join(str(int(v)) for v in row) + "\n").encode("ascii"))


def parse_config(text):
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    result = {}
    offset = 0
    for line in text.splitlines(keepends=True):
        body = line.split("#", 1)[0].strip()
        if body:
            if "=" not in body:
                raise ParseError(f"expected key=value, got {body!r}", offset)
            key, value = (part.strip() for part in body.split("=", 1))
            if not key:
                raise ParseError("empty key", offset)
            result[key.replace("-", "_")] = value
        offset += len(line.encode("utf-8"))
    return result


def load_config(path):
    with open(path, "rb") as fh:
        return parse_config(fh.read())


def make_pmap(image, k=10.0, sigma=1.0, p_max=2.0):
    """Edge-adaptive exponents ``p = 1 + 1 / (1 + k |grad(G_sigma * f)|^2)``.

    ``sigma`` is the Gaussian width in pixels and the gradient is taken in
    physical units (cell size ``h``). Flat regions get ``p = 2`` and strong
    edges ``p`` close to one; the result is clipped to ``[1, p_max]``.
    """
    if not isinstance(image, GridField):
        image = GridField(image)
    if k < 0:
        raise InputError("edge sensitivity k must be non-negative")
    if not sigma > 0:
        raise InputError("smoothing width sigma must be positive")
    smooth = ndimage.gaussian_filter(image.values, sigma, mode="nearest")
    g = grad_raw(smooth, image.h)
    mag2 = g[0] ** 2 + g[1] ** 2
    p = 1.0 + 1.0 / (1.0 + k * mag2)
    return ExponentMap(np.clip(p, 1.0, p_max))


class Report:
    """Named metrics with a provenance header (configuration hash and seed)."""

    def __init__(self, config=None, seed=0):
        self.config = dict(config or {})
        self.seed = seed
        self.metrics = []

    @property
    def config_hash(self):
        canonical = "\n".join(f"{k}={self.config[k]}" for k in sorted(self.config))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def add(self, name, value):
        self.metrics.append((str(name), value))

    def to_text(self):
        lines = [f"# config {self.config_hash} seed {self.seed}"]
        for name, value in self.metrics:
            if isinstance(value, float):
                value = repr(value)
            lines.append(f"{name} {value}")
        return "\n".join(lines) + "\n"

    def write(self, path):
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, "w") as fh:
            fh.write(self.to_text())
