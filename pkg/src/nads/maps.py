"""Continuous self-maps built from a closed set of constructors.

Every map can be evaluated on a single point (``f(x, space)``) or on a batch
(``f.apply_batch(X, space)``). Scalar maps also compile to a flat instruction
list consumed by the orbit kernels; scalar evaluation goes through the same
instructions so direct calls and kernel orbits agree bit for bit.

Structural Lipschitz bounds are available for every constructor on bounded
scalar spaces and for the linear constructors on vector spaces.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .errors import ConfigError, PreconditionError


class MapExpr:
    """Base class of the map constructors."""

    scalar = True
    linear = False

    def program(self):
        """Instruction list ``[(op, a, b), ...]`` for scalar evaluation."""
        raise PreconditionError(f"{self.name} has no scalar form")

    def apply_batch(self, X, space):
        """Evaluate on an ``(m,)`` scalar or ``(m, d)`` vector batch."""
        X = np.asarray(X, dtype=float)
        if space.is_scalar:
            out = np.empty_like(X)
            prog = compiled_program(self)
            circle = space.kind == "circle"
            for i, x in enumerate(X.tolist()):
                out[i] = K.eval_program(prog, x, circle)
            return out
        return self._vector(X, space)

    def __call__(self, x, space):
        if space.is_scalar:
            return K.eval_program(compiled_program(self), float(x), space.kind == "circle")
        return self._vector(np.asarray(x, dtype=float)[None, :], space)[0]

    def _vector(self, X, space):
        raise PreconditionError(f"{self.name} is not defined on vector spaces")

    def lipschitz(self, space):
        """Structural Lipschitz bound in the space metric, or None."""
        return None

    def check_space(self, space):
        """Raise if the constructor is not a continuous self-map of ``space``."""
        if space.kind == "vector" and self.scalar and not self._vector_ok():
            raise PreconditionError(f"{self.name} is not defined on vector spaces")
        if space.kind != "vector" and not self.scalar:
            raise PreconditionError(f"{self.name} needs a vector space")

    def _vector_ok(self):
        return False

    @property
    def name(self):
        return type(self).json_name

    def to_json(self):
        raise NotImplementedError


@functools.lru_cache(maxsize=4096)
def compiled_program(expr):
    return tuple(expr.program())


def _window_abs_max(space):
    lo, hi = space.bounds
    return max(abs(lo), abs(hi))


@dataclass(frozen=True)
class Affine(MapExpr):
    a: float
    b: float = 0.0
    json_name = "affine"

    def program(self):
        return [(K.AFFINE, float(self.a), float(self.b))]

    def _vector_ok(self):
        return True

    def _vector(self, X, space):
        return self.a * X + self.b

    def lipschitz(self, space):
        return abs(self.a)

    def check_space(self, space):
        super().check_space(space)
        if space.kind == "circle" and float(self.a) != round(self.a):
            raise PreconditionError("affine map on the circle needs an integer slope")

    def to_json(self):
        return {"map": "affine", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Tent(MapExpr):
    json_name = "tent"

    def program(self):
        return [(K.TENT, 0.0, 0.0)]

    def lipschitz(self, space):
        return 2.0

    def to_json(self):
        return {"map": "tent"}


@dataclass(frozen=True)
class Doubling(MapExpr):
    json_name = "doubling"

    def program(self):
        return [(K.DOUBLE, 0.0, 0.0)]

    def lipschitz(self, space):
        return 2.0

    def check_space(self, space):
        super().check_space(space)
        if space.kind != "circle":
            raise PreconditionError("the doubling map is only continuous on the circle")

    def to_json(self):
        return {"map": "doubling"}


@dataclass(frozen=True)
class Logistic(MapExpr):
    r: float
    json_name = "logistic"

    def program(self):
        return [(K.LOGISTIC, float(self.r), 0.0)]

    def lipschitz(self, space):
        if space.kind == "real":
            lo, hi = space.bounds
            return abs(self.r) * max(abs(1 - 2 * lo), abs(1 - 2 * hi))
        return abs(self.r)

    def to_json(self):
        return {"map": "logistic", "r": self.r}


@dataclass(frozen=True)
class Negation(MapExpr):
    json_name = "negation"

    def program(self):
        return [(K.NEG, 0.0, 0.0)]

    def _vector_ok(self):
        return True

    def _vector(self, X, space):
        return -X

    def lipschitz(self, space):
        return 1.0

    def to_json(self):
        return {"map": "negation"}


@dataclass(frozen=True)
class Square(MapExpr):
    json_name = "square"

    def program(self):
        return [(K.SQUARE, 0.0, 0.0)]

    def _vector_ok(self):
        return True

    def _vector(self, X, space):
        return X * X

    def lipschitz(self, space):
        if space.kind == "real":
            return 2.0 * _window_abs_max(space)
        if space.kind == "vector":
            return None
        return 2.0

    def to_json(self):
        return {"map": "square"}


@dataclass(frozen=True)
class Translation(MapExpr):
    c: float | tuple
    json_name = "translation"

    def program(self):
        if isinstance(self.c, tuple):
            raise PreconditionError("vector translation has no scalar form")
        return [(K.TRANSLATE, float(self.c), 0.0)]

    def _vector_ok(self):
        return True

    def _vector(self, X, space):
        return X + np.asarray(self.c, dtype=float)

    def lipschitz(self, space):
        return 1.0

    def to_json(self):
        c = list(self.c) if isinstance(self.c, tuple) else self.c
        return {"map": "translation", "c": c}


@dataclass(frozen=True)
class LinearOperator(MapExpr):
    matrix: tuple  # row-major tuple of row tuples
    scalar = False
    linear = True
    json_name = "linear-operator"

    @functools.cached_property
    def array(self):
        return np.array(self.matrix, dtype=float)

    def _vector(self, X, space):
        return X @ self.array.T

    def lipschitz(self, space):
        A = self.array
        if space.norm == "sup":
            return float(np.max(np.sum(np.abs(A), axis=1)))
        return float(np.linalg.norm(A, 2))

    def check_space(self, space):
        super().check_space(space)
        d = space.dimension
        if self.array.shape != (d, d):
            raise PreconditionError(f"matrix shape {self.array.shape} does not match dimension {d}")

    def to_json(self):
        return {"map": "linear-operator", "matrix": [list(r) for r in self.matrix]}


@dataclass(frozen=True)
class WeightedShift(MapExpr):
    """Truncated backward shift ``(Bx)_i = scale * w_i * x_{i+1}``; last coordinate is zeroed."""

    dimension: int
    weights: tuple | None = None
    scale: float = 1.0
    scalar = False
    linear = True
    json_name = "weighted-shift"

    @functools.cached_property
    def coefficients(self):
        w = np.ones(self.dimension - 1) if self.weights is None else np.asarray(self.weights, float)
        if w.shape != (self.dimension - 1,):
            raise PreconditionError(f"weighted shift on R^{self.dimension} needs {self.dimension - 1} weights")
        return self.scale * w

    def _vector(self, X, space):
        out = np.zeros_like(X)
        out[:, :-1] = self.coefficients * X[:, 1:]
        return out

    def lipschitz(self, space):
        c = self.coefficients
        return float(np.max(np.abs(c))) if c.size else 0.0

    def check_space(self, space):
        super().check_space(space)
        if space.dimension != self.dimension:
            raise PreconditionError(f"shift dimension {self.dimension} does not match space {space.dimension}")
        self.coefficients

    def to_json(self):
        out = {"map": "weighted-shift", "dimension": self.dimension, "scale": self.scale}
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out


@dataclass(frozen=True)
class Scaled(MapExpr):
    inner: MapExpr
    s: float
    json_name = "scaled"

    @property
    def scalar(self):
        return self.inner.scalar

    @property
    def linear(self):
        return self.inner.linear

    def program(self):
        return list(self.inner.program()) + [(K.SCALE, float(self.s), 0.0)]

    def _vector_ok(self):
        return self.inner._vector_ok()

    def _vector(self, X, space):
        return self.s * self.inner._vector(X, space)

    def lipschitz(self, space):
        inner = self.inner.lipschitz(space)
        return None if inner is None else abs(self.s) * inner

    def check_space(self, space):
        self.inner.check_space(space)

    def to_json(self):
        return {"map": "scaled", "inner": self.inner.to_json(), "s": self.s}


@dataclass(frozen=True)
class Compose(MapExpr):
    """``outer(inner(x))``."""

    outer: MapExpr
    inner: MapExpr
    json_name = "compose"

    @property
    def scalar(self):
        return self.outer.scalar and self.inner.scalar

    @property
    def linear(self):
        return self.outer.linear and self.inner.linear

    def program(self):
        return list(self.inner.program()) + list(self.outer.program())

    def _vector_ok(self):
        return self.outer._vector_ok() and self.inner._vector_ok()

    def _vector(self, X, space):
        return self.outer._vector(self.inner._vector(X, space), space)

    def lipschitz(self, space):
        a = self.outer.lipschitz(space)
        b = self.inner.lipschitz(space)
        return None if a is None or b is None else a * b

    def check_space(self, space):
        self.inner.check_space(space)
        self.outer.check_space(space)

    def to_json(self):
        return {"map": "compose", "outer": self.outer.to_json(), "inner": self.inner.to_json()}


IDENTITY = Affine(1.0, 0.0)


def compose_chain(maps):
    """Compose ``maps`` applied first-to-last: ``maps[-1] ∘ ... ∘ maps[0]``."""
    maps = list(maps)
    if not maps:
        return IDENTITY
    out = maps[0]
    for f in maps[1:]:
        out = Compose(f, out)
    return out


def linear_operator(matrix):
    return LinearOperator(tuple(tuple(float(v) for v in row) for row in np.asarray(matrix, float)))


def map_from_json(data, where="map"):
    if not isinstance(data, dict) or "map" not in data:
        raise ConfigError("expected an object with a 'map' key", where)
    kind = data["map"]

    def num(key, default=None):
        if key not in data:
            if default is None:
                raise ConfigError(f"missing '{key}'", f"{where}.{key}")
            return default
        v = data[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise ConfigError(f"'{key}' must be a finite number", f"{where}.{key}")
        return float(v)

    if kind == "affine":
        return Affine(num("a"), num("b", 0.0))
    if kind == "tent":
        return Tent()
    if kind == "doubling":
        return Doubling()
    if kind == "logistic":
        return Logistic(num("r"))
    if kind == "negation":
        return Negation()
    if kind == "square":
        return Square()
    if kind == "identity":
        return IDENTITY
    if kind == "translation":
        c = data.get("c")
        if isinstance(c, list):
            return Translation(tuple(float(v) for v in c))
        return Translation(num("c"))
    if kind == "linear-operator":
        m = data.get("matrix")
        if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
            raise ConfigError("matrix must be a non-empty list of rows", f"{where}.matrix")
        return linear_operator(m)
    if kind == "weighted-shift":
        if "dimension" not in data:
            raise ConfigError("missing 'dimension'", f"{where}.dimension")
        w = data.get("weights")
        return WeightedShift(int(data["dimension"]), None if w is None else tuple(float(v) for v in w), num("scale", 1.0))
    if kind == "scaled":
        return Scaled(map_from_json(data.get("inner"), f"{where}.inner"), num("s"))
    if kind == "compose":
        return Compose(
            map_from_json(data.get("outer"), f"{where}.outer"),
            map_from_json(data.get("inner"), f"{where}.inner"),
        )
    raise ConfigError(f"unknown map constructor {kind!r}", f"{where}.map")
