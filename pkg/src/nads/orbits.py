"""Orbit engine and the basic operations on sequences."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .errors import DomainEscape, PreconditionError
from .maps import compiled_program
from .sequences import IterateSequence, MapSequence
from .spaces import TAU_COMPOSE

_SPACE_CODES = {"interval": K.INTERVAL, "circle": K.CIRCLE, "real": K.REAL}


@functools.lru_cache(maxsize=256)
def _compile_table(table):
    ops, args, offsets = [], [], [0]
    for f in table:
        for op, a, b in compiled_program(f):
            ops.append(op)
            args.append((a, b))
        offsets.append(len(ops))
    return (
        np.asarray(ops, dtype=np.int64),
        np.asarray(args, dtype=np.float64).reshape(-1, 2),
        np.asarray(offsets, dtype=np.int64),
    )


def orbit_batch(seq, xs, steps, start=1, backend=None):
    """Orbits of every point in ``xs`` for ``steps`` steps from index ``start``.

    Returns ``(points, escaped)``. Scalar spaces give ``points`` of shape
    ``(m, steps + 1)``; vector spaces ``(m, steps + 1, d)``. ``escaped[r]`` is
    the first step at which row ``r`` left the analysis window (its raw value
    is kept, later entries are NaN), or -1.
    """
    if start < 1:
        raise PreconditionError(f"sequence indices start at 1, got {start}")
    if steps < 0:
        raise PreconditionError(f"steps must be non-negative, got {steps}")
    space = seq.space
    table, sched, stride = seq.plan(start, steps)
    if space.is_scalar:
        x0 = np.ascontiguousarray(np.asarray(xs, dtype=np.float64).reshape(-1))
        if space.kind == "circle":
            x0 = np.ascontiguousarray(space.normalize(x0), dtype=np.float64).reshape(-1)
        ops, args, offsets = _compile_table(table)
        base_steps = sched.shape[0]
        out = np.empty((x0.shape[0], base_steps + 1), dtype=np.float64)
        escaped = np.empty(x0.shape[0], dtype=np.int64)
        lo, hi = space.bounds
        kernel = backend or K.backend
        kernel.orbit_block(
            ops, args, offsets, np.ascontiguousarray(sched), _SPACE_CODES[space.kind],
            float(lo), float(hi), x0, out, escaped,
        )
        if stride > 1:
            out = out[:, ::stride]
            escaped = np.where(escaped > 0, -(-escaped // stride), escaped)
        return out, escaped
    X = np.asarray(xs, dtype=np.float64).reshape(-1, space.dimension)
    out = np.empty((X.shape[0], steps + 1, space.dimension), dtype=np.float64)
    out[:, 0] = X
    cur = X
    for t, g in enumerate(sched):
        cur = table[g]._vector(cur, space)
        if (t + 1) % stride == 0:
            out[:, (t + 1) // stride] = cur
    return out, np.full(X.shape[0], -1, dtype=np.int64)


def _single(seq, x, steps, start):
    x = seq.space.as_point(x)
    pts, esc = orbit_batch(seq, [x], steps, start)
    if esc[0] >= 0:
        raise DomainEscape(int(esc[0]), float(pts[0, esc[0]]), seq.space.escape_window)
    return pts[0]


def resolve_map(seq: MapSequence, i):
    """The map ``f_i``."""
    if i < 1:
        raise PreconditionError(f"sequence indices start at 1, got {i}")
    return seq.resolve_map(i)


def apply_window(seq: MapSequence, i, n, x):
    """``f_i^n(x) = f_{i+n-1} ∘ ... ∘ f_i (x)``; ``n = 0`` is the identity."""
    if i < 1:
        raise PreconditionError(f"sequence indices start at 1, got {i}")
    if n < 0:
        raise PreconditionError(f"window length must be non-negative, got {n}")
    pts = _single(seq, x, n, i)
    last = pts[n]
    return float(last) if seq.space.is_scalar else last


@dataclass(frozen=True)
class Orbit:
    """Trajectory prefix ``x, f_1(x), f_1^2(x), ...`` up to ``horizon``."""

    start: object
    horizon: int
    points: tuple

    def orbit_set(self, space, tol=TAU_COMPOSE):
        """Distinct points of the trajectory prefix (identity up to ``tol``)."""
        return dedupe_points(space, self.points, tol)


def dedupe_points(space, points, tol):
    kept = []
    for p in points:
        if all(space.distance(p, q) > tol for q in kept):
            kept.append(p)
    return kept


def trajectory(seq: MapSequence, x, horizon):
    if horizon < 1:
        raise PreconditionError(f"horizon must be positive, got {horizon}")
    pts = _single(seq, x, horizon, 1)
    if seq.space.is_scalar:
        points = tuple(float(p) for p in pts)
    else:
        points = tuple(np.array(p) for p in pts)
    return Orbit(points[0], horizon, points)


def iterate_system(seq: MapSequence, k) -> IterateSequence:
    """The k-th iterate system ``(f_1^k, f_{k+1}^k, f_{2k+1}^k, ...)``."""
    if k < 1:
        raise PreconditionError(f"iterate order must be positive, got {k}")
    return IterateSequence(seq, int(k))


@dataclass(frozen=True)
class CommutativityCheck:
    commutative: bool
    counterexample: tuple | None = None  # (x, m, n, distance)

    def __bool__(self):
        return self.commutative


def check_commutative(seq, sample_points, max_m, max_n, tol=TAU_COMPOSE):
    """Test ``f_1^n(f_1^m(x)) == f_1^m(f_1^n(x))`` on samples.

    Scans points in order, then ``m`` and ``n`` ascending; returns the first
    violation.
    """
    if len(sample_points) == 0:
        raise PreconditionError("sample_points must be non-empty")
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    space = seq.space
    size = max(max_m, max_n)
    for x in sample_points:
        x = space.as_point(x)
        first = _single(seq, x, size, 1)
        # table[a, b] = f_1^b(f_1^a(x))
        starts = first[1:]
        pts, esc = orbit_batch(seq, starts, size, 1)
        if (esc >= 0).any():
            r = int(np.argmax(esc >= 0))
            raise DomainEscape(int(esc[r]), float(pts[r, esc[r]]), space.escape_window)
        for m in range(1, max_m + 1):
            for n in range(1, max_n + 1):
                d = space.distance(pts[m - 1, n], pts[n - 1, m])
                if not d <= tol:
                    return CommutativityCheck(False, (x if space.is_scalar else x.tolist(), m, n, float(d)))
    return CommutativityCheck(True)
