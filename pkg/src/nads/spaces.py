"""Metric state spaces.

Four kinds are supported:

``interval``
    The unit interval ``[0, 1]`` with ``|x - y|``.
``circle``
    ``R/Z`` with representatives in ``[0, 1)`` and the arc metric
    ``min(|x - y|, 1 - |x - y|)``.
``real``
    The real line restricted to a declared analysis window ``[lo, hi]``.
    Leaving the window is an explicit escape event, never a clamp.
``vector``
    ``R^d`` with a sup or Euclidean norm metric.

Scalar points are Python floats (or float arrays for batches); vector points
are 1-D arrays of length ``d`` (or ``(m, d)`` arrays for batches).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

TAU_METRIC = 1e-12
TAU_COMPOSE = 1e-9

_KINDS = ("interval", "circle", "real", "vector")
_NORMS = ("euclidean", "sup")


@dataclass(frozen=True)
class StateSpace:
    kind: str
    window: tuple[float, float] | None = None
    dimension: int = 1
    norm: str = "euclidean"

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown space kind {self.kind!r}", "space.kind")
        if self.kind == "real":
            if self.window is None:
                raise ConfigError("real-line space needs an analysis window", "space.window")
            lo, hi = self.window
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError(f"bad window {self.window!r}", "space.window")
            object.__setattr__(self, "window", (float(lo), float(hi)))
        if self.kind == "vector":
            if self.dimension < 1:
                raise ConfigError("dimension must be positive", "space.dimension")
            if self.norm not in _NORMS:
                raise ConfigError(f"unknown norm {self.norm!r}", "space.norm")

    @classmethod
    def interval(cls):
        return cls("interval")

    @classmethod
    def circle(cls):
        return cls("circle")

    @classmethod
    def real_line(cls, lo, hi):
        return cls("real", window=(lo, hi))

    @classmethod
    def vector_space(cls, dimension, norm="euclidean"):
        return cls("vector", dimension=int(dimension), norm=norm)

    @property
    def is_scalar(self):
        return self.kind != "vector"

    @property
    def is_bounded(self):
        return self.kind != "vector"

    @property
    def bounds(self):
        """``(lo, hi)`` of the representative range; None for vector spaces."""
        if self.kind == "real":
            return self.window
        if self.kind == "vector":
            return None
        return (0.0, 1.0)

    @property
    def escape_window(self):
        """Window whose exit is an escape event, or None when escape is impossible."""
        if self.kind in ("interval", "real"):
            return self.bounds
        return None

    @property
    def diameter(self):
        if self.kind == "circle":
            return 0.5
        if self.kind == "vector":
            return math.inf
        lo, hi = self.bounds
        return hi - lo

    # Structural: none of the supported kinds has isolated points.
    has_isolated_points = False

    def distance(self, x, y):
        """Distance between points; broadcasts over batches."""
        if self.kind == "vector":
            diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
            if self.norm == "sup":
                d = np.max(np.abs(diff), axis=-1)
            else:
                d = np.sqrt(np.sum(diff * diff, axis=-1))
        else:
            d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
            if self.kind == "circle":
                d = np.minimum(d, 1.0 - d)
        if np.ndim(d) == 0:
            return float(d)
        return d

    def norm_of(self, x):
        """Distance from the origin (vector spaces) or from 0."""
        return self.distance(x, np.zeros_like(np.asarray(x, dtype=float)))

    def normalize(self, x):
        """Map a representative into canonical form (mod 1 on the circle)."""
        if self.kind != "circle":
            return x
        r = np.fmod(np.asarray(x, dtype=float), 1.0)
        r = np.where(r < 0.0, r + 1.0, r)
        r = np.where(r >= 1.0, 0.0, r)
        r = r + 0.0
        if np.ndim(r) == 0:
            return float(r)
        return r

    def contains(self, x):
        """Membership mask (always true on circle and vector spaces)."""
        if self.kind == "vector":
            arr = np.asarray(x, dtype=float)
            ok = np.all(np.isfinite(arr), axis=-1)
        elif self.kind == "circle":
            ok = np.isfinite(np.asarray(x, dtype=float))
        else:
            lo, hi = self.bounds
            arr = np.asarray(x, dtype=float)
            ok = (arr >= lo) & (arr <= hi)
        if np.ndim(ok) == 0:
            return bool(ok)
        return ok

    def as_point(self, x):
        if self.kind == "vector":
            arr = np.asarray(x, dtype=float).reshape(-1)
            if arr.shape[0] != self.dimension:
                raise ConfigError(
                    f"point has dimension {arr.shape[0]}, expected {self.dimension}"
                )
            return arr
        return self.normalize(float(x))

    def grid(self, n):
        """``n`` evenly spaced points covering a bounded space."""
        if self.kind == "vector":
            raise ValueError("grids are only defined on bounded scalar spaces")
        lo, hi = self.bounds
        if self.kind == "circle":
            return np.arange(n, dtype=float) / n
        return np.linspace(lo, hi, n)

    def to_json(self):
        if self.kind == "real":
            return {"kind": "real", "window": list(self.window)}
        if self.kind == "vector":
            return {"kind": "vector", "dimension": self.dimension, "norm": self.norm}
        return {"kind": self.kind}

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigError("space must be an object with a 'kind'", "space")
        kind = data["kind"]
        if kind == "real":
            window = data.get("window")
            if not isinstance(window, (list, tuple)) or len(window) != 2:
                raise ConfigError("expected [lo, hi]", "space.window")
            return cls.real_line(float(window[0]), float(window[1]))
        if kind == "vector":
            if "dimension" not in data:
                raise ConfigError("vector space needs a dimension", "space.dimension")
            return cls.vector_space(data["dimension"], data.get("norm", "euclidean"))
        return cls(kind)
