"""Periodic points, invariant sets and periodic-point density.

A point ``x`` is certified periodic with period ``N`` when
``d(f_1^k(x), f_1^{N+k}(x)) <= tol`` for every ``0 <= k <= k_max``; the check
starts at ``k = 0``. Certification is only up to ``(tol, k_max)`` and reports
carry both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainEscape, PreconditionError, UnderSpecifiedCheck
from .orbits import dedupe_points, orbit_batch
from .spaces import TAU_COMPOSE

TAU_PERIODIC = TAU_COMPOSE


@dataclass
class PeriodicPointReport:
    point: object
    period: int
    checked_horizon: int
    orbit_points: list
    tolerance: float = TAU_PERIODIC
    invariant: bool | None = None

    def to_json(self):
        return {
            "point": _jsonable(self.point),
            "period": self.period,
            "tolerance": self.tolerance,
            "horizon": self.checked_horizon,
            "invariant": self.invariant,
            "orbit": [_jsonable(p) for p in self.orbit_points],
        }


def _jsonable(p):
    if isinstance(p, np.ndarray):
        return [float(v) for v in p]
    return float(p)


def _effective_k(seq, N, k_max):
    p = seq.period
    if p is None:
        return k_max
    return max(k_max, 2 * p * N)


def _periods(seq, points, escaped, N_max, k_max, tol):
    """Least certified period per orbit row (0 when none) and the horizon used."""
    space = seq.space
    m = points.shape[0]
    period = np.zeros(m, dtype=np.int64)
    horizon = np.zeros(m, dtype=np.int64)
    for N in range(1, N_max + 1):
        ke = _effective_k(seq, N, k_max)
        a = points[:, : ke + 1]
        b = points[:, N : N + ke + 1]
        with np.errstate(invalid="ignore"):
            worst = np.max(space.distance(a, b), axis=-1)
            ok = (worst <= tol) & (period == 0)
        needed = N + ke
        ok &= (escaped < 0) | (escaped > needed)
        period[ok] = N
        horizon[ok] = ke
    return period, horizon


def _orbit_length(seq, N_max, k_max):
    return N_max + _effective_k(seq, N_max, k_max)


def detect_periodic_point(seq, x, N_max, k_max, tol=TAU_PERIODIC):
    """Least period ``N <= N_max`` certified over ``k <= k_max``, or None.

    For exactly periodic schedules with period ``p`` the horizon is raised to
    ``2 p N`` so the finite check covers whole schedule cycles.
    """
    if N_max < 1:
        raise PreconditionError("N_max must be at least 1")
    if k_max < N_max:
        raise PreconditionError("k_max must be at least N_max")
    space = seq.space
    x = space.as_point(x)
    L = _orbit_length(seq, N_max, k_max)
    pts, esc = orbit_batch(seq, [x], L)
    if esc[0] >= 0:
        raise DomainEscape(int(esc[0]), float(pts[0, esc[0]]), space.escape_window)
    period, horizon = _periods(seq, pts, esc, N_max, k_max, tol)
    N = int(period[0])
    if N == 0:
        return None
    orbit = dedupe_points(space, [_point(space, p) for p in pts[0, :N]], tol)
    return PeriodicPointReport(_point(space, x), N, int(horizon[0]), orbit, tol)


def _point(space, p):
    return float(p) if space.is_scalar else np.array(p)


@dataclass(frozen=True)
class InvarianceViolation:
    map_index: int  # 1-based generator number, or sequence index for horizon checks
    point: object
    image: object


@dataclass(frozen=True)
class InvarianceCheck:
    holds: bool
    violation: InvarianceViolation | None = None

    def __bool__(self):
        return self.holds


def _maps_to_check(seq, horizon):
    if seq.is_finitely_generated and horizon is None:
        return list(enumerate(seq.generator_maps(), start=1))
    if horizon is None:
        raise UnderSpecifiedCheck("sequence is not finitely generated; declare a horizon")
    return [(i, seq.resolve_map(i)) for i in range(1, horizon + 1)]


def is_invariant_set(seq, A, tol=TAU_PERIODIC, horizon=None):
    """Whether every map of the sequence sends the finite set ``A`` into itself.

    Finitely generated sequences check each generator that the schedule uses
    (numbered from 1 in first-use order); other sequences check
    ``f_1 .. f_horizon``.
    """
    if len(A) == 0:
        raise PreconditionError("A must be non-empty")
    space = seq.space
    pts = [space.as_point(a) for a in A]
    for idx, f in _maps_to_check(seq, horizon):
        for a in pts:
            img = f(a, space)
            if min(space.distance(img, b) for b in pts) > tol:
                return InvarianceCheck(False, InvarianceViolation(idx, a, img))
    return InvarianceCheck(True)


def is_invariant_periodic_point(seq, x, N_max=10, k_max=None, tol=TAU_PERIODIC, horizon=None):
    """``(invariant, report)``: periodic and with an invariant orbit set."""
    k_max = N_max if k_max is None else k_max
    report = detect_periodic_point(seq, x, N_max, k_max, tol)
    if report is None:
        return False, None
    report.invariant = bool(is_invariant_set(seq, report.orbit_points, tol, horizon))
    return report.invariant, report


@dataclass
class DensityEstimate:
    resolution: float
    n_cells: int
    coverage: float
    uncovered: list
    undetermined: list
    representatives: dict = field(default_factory=dict)  # cell -> (point, period)
    N_max: int = 10
    k_max: int = 10
    Q_max: int = 128
    tolerance: float = TAU_PERIODIC

    def to_json(self):
        return {
            "resolution": self.resolution,
            "n_cells": self.n_cells,
            "coverage": self.coverage,
            "uncovered_cells": self.uncovered,
            "undetermined_cells": self.undetermined,
            "representatives": [
                {"cell": c, "point": p, "period": n} for c, (p, n) in sorted(self.representatives.items())
            ],
            "N_max": self.N_max,
            "k_max": self.k_max,
            "Q_max": self.Q_max,
            "tolerance": self.tolerance,
        }


def _candidates(space, resolution, n_cells, Q_max):
    """Candidate points with their cell, ordered grid points first, then p/q by q."""
    lo, hi = space.bounds
    j = np.arange(n_cells, dtype=float)
    grid = np.concatenate([lo + j * resolution, lo + (j + 0.5) * resolution])
    parts = [grid]
    for q in range(1, Q_max + 1):
        p = np.arange(math.ceil(lo * q), math.floor(hi * q) + 1, dtype=float)
        parts.append(p / q)
    xs = np.concatenate(parts)
    if space.kind == "circle":
        xs = xs[xs < 1.0]
    xs = xs[(xs >= lo) & (xs <= hi)]
    _, first = np.unique(xs, return_index=True)
    xs = xs[np.sort(first)]
    cells = np.minimum(np.floor((xs - lo) / resolution).astype(np.int64), n_cells - 1)
    return xs, cells


def dense_periodic_estimate(seq, resolution, N_max=10, k_max=None, Q_max=128, tol=TAU_PERIODIC):
    """Fraction of ``resolution``-cells containing a certified periodic point.

    Candidates per cell are the cell edge and midpoint plus every rational
    ``p/q`` with ``q <= Q_max``. Cells where every candidate orbit escapes the
    analysis window are reported as undetermined and excluded from coverage.
    """
    space = seq.space
    if not space.is_bounded:
        raise PreconditionError("density estimates need a bounded space")
    if resolution <= 0:
        raise PreconditionError("resolution must be positive")
    k_max = N_max if k_max is None else k_max
    lo, hi = space.bounds
    n_cells = max(1, math.ceil((hi - lo) / resolution - 1e-9))
    xs, cells = _candidates(space, resolution, n_cells, Q_max)
    L = _orbit_length(seq, N_max, k_max)
    pts, esc = orbit_batch(seq, xs, L)
    period, _ = _periods(seq, pts, esc, N_max, k_max, tol)
    determined = np.zeros(n_cells, dtype=bool)
    determined[cells[esc < 0]] = True
    determined[cells[period > 0]] = True
    reps = {}
    for i in np.flatnonzero(period > 0):
        c = int(cells[i])
        if c not in reps:
            reps[c] = (float(xs[i]), int(period[i]))
    undetermined = [int(c) for c in np.flatnonzero(~determined)]
    uncovered = [int(c) for c in np.flatnonzero(determined) if int(c) not in reps]
    n_det = int(determined.sum())
    coverage = len(reps) / n_det if n_det else 0.0
    return DensityEstimate(
        float(resolution), n_cells, coverage, uncovered, undetermined, reps, N_max, k_max, Q_max, tol
    )
