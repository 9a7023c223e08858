"""Witness search for sensitivity, collective and synchronous sensitivity.

A witness is concrete evidence for the existential clause of a definition:
points within ``eps`` of the given ones and a time at which their images are
at least ``delta`` apart. Searches are finite, so an absent witness means
"not found under budget" and never "not sensitive".

Candidate perturbations are generated in a fixed order: a deterministic
radial grid (largest radius first) followed by uniform samples drawn from a
generator seeded with ``rng_seed``. The same displacement list drives
single-point searches and the shared-displacement stage of multi-point
searches, so a one-point family reproduces the single-point witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceNotObserved, NoModulusFound, PreconditionError
from .orbits import apply_window, iterate_system, orbit_batch
from .parallel import ordered_map
from .sequences import UniformLimit

POINT_IDENTITY_TOL = 1e-9
DEFAULT_EPS_LADDER = (1e-2, 1e-3, 1e-4)


def _stream(seed, *extra):
    base = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return [int(s) for s in base] + [int(e) for e in extra]


def _rng(seed, *extra):
    return np.random.default_rng(_stream(seed, *extra))


def split_budget(budget):
    """``(grid, random)`` candidate counts for a total budget."""
    if budget < 1:
        raise PreconditionError("budget must be positive")
    grid = budget // 2
    return grid, budget - grid


def _random_displacements(space, eps, count, rng):
    if space.is_scalar:
        h = rng.uniform(-eps, eps, count)
        return h
    d = space.dimension
    if space.norm == "sup":
        return rng.uniform(-eps, eps, (count, d))
    g = rng.standard_normal((count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (eps * rng.uniform(0.0, 1.0, count))[:, None]


def _grid_displacements(space, eps, count):
    if count == 0:
        return np.zeros(0) if space.is_scalar else np.zeros((0, space.dimension))
    if space.is_scalar:
        g = max(1, count // 2)
        radii = eps * (g - np.arange(g)) / (g + 1)
        return np.stack([radii, -radii], axis=1).reshape(-1)[:count]
    d = space.dimension
    per_radius = 2 * d
    g = max(1, math.ceil(count / per_radius))
    out = []
    for r in eps * (g - np.arange(g)) / (g + 1):
        for j in range(d):
            for sign in (1.0, -1.0):
                e = np.zeros(d)
                e[j] = sign * r
                out.append(e)
    return np.asarray(out[:count])


def displacements(space, eps, budget, rng):
    """Ordered perturbations ``h`` with ``d(0, h) < eps``: radial grid, then random."""
    n_grid, n_random = split_budget(budget)
    grid = _grid_displacements(space, eps, n_grid)
    rand = _random_displacements(space, eps, n_random, rng)
    return np.concatenate([grid, rand]) if len(grid) else rand


def _perturb(space, x, h):
    """Candidates ``x + h`` with a validity mask (inside the space, ``0 < d < eps``)."""
    y = space.normalize(np.asarray(x, dtype=float) + h)
    y = np.asarray(y, dtype=float)
    ok = np.asarray(space.contains(y))
    return y, ok


# -- single-point sensitivity -------------------------------------------------


@dataclass(frozen=True)
class SensitivityWitness:
    x: object
    y: object
    n: int
    separation: float
    eps_used: float
    delta: float

    def replay(self, seq, tol=0.0):
        """Re-check the invariants from stored data."""
        space = seq.space
        if not space.distance(self.x, self.y) < self.eps_used:
            return False
        fx = apply_window(seq, 1, self.n, self.x)
        fy = apply_window(seq, 1, self.n, self.y)
        sep = space.distance(fx, fy)
        return sep > self.delta and abs(sep - self.separation) <= tol

    def to_json(self):
        return {
            "x": _plain(self.x),
            "y": _plain(self.y),
            "n": self.n,
            "separation": self.separation,
            "eps": self.eps_used,
            "delta": self.delta,
        }


def _plain(p):
    if isinstance(p, np.ndarray):
        return [float(v) for v in p]
    return float(p)


@dataclass
class _PairScan:
    x: object
    eps: float
    ys: np.ndarray
    sep: np.ndarray  # (candidates, horizon), sep[c, n-1] = d(f^n x, f^n y_c)
    x_escape: int
    y_escapes: int

    @property
    def max_separation(self):
        if self.sep.size == 0:
            return 0.0
        with np.errstate(invalid="ignore"):
            m = np.nanmax(self.sep) if np.isfinite(self.sep).any() else 0.0
        return float(m)

    def witness(self, delta):
        if self.sep.size == 0:
            return None
        with np.errstate(invalid="ignore"):
            hit = self.sep > delta
        rows = hit.any(axis=1)
        if not rows.any():
            return None
        c = int(np.argmax(rows))
        n = int(np.argmax(hit[c])) + 1
        y = self.ys[c]
        return SensitivityWitness(
            _point(self.x), _point(y), n, float(self.sep[c, n - 1]), float(self.eps), float(delta)
        )


def _point(p):
    if isinstance(p, np.ndarray) and p.ndim > 0:
        return np.array(p)
    return float(p)


def _scan_pair(seq, x, eps, horizon, budget, rng_seed):
    space = seq.space
    x = space.as_point(x)
    h = displacements(space, eps, budget, _rng(rng_seed))
    ys, ok = _perturb(space, x, h)
    with np.errstate(invalid="ignore"):
        dist = np.asarray(space.distance(x, ys))
        ok &= (dist < eps) & (dist > 0)
    ys = ys[ok]
    pts, esc = orbit_batch(seq, np.concatenate([np.asarray(x)[None], ys]) if not space.is_scalar
                           else np.concatenate([[x], ys]), horizon)
    with np.errstate(invalid="ignore"):
        sep = np.asarray(space.distance(pts[:1, 1:], pts[1:, 1:]), dtype=float)
    sep = sep.reshape(len(ys), horizon)
    return _PairScan(x, eps, ys, sep, int(esc[0]), int((esc[1:] >= 0).sum()))


def find_witness(seq, x, eps, delta, horizon, budget=64, rng_seed=0):
    """First candidate ``y`` (in scan order) with ``d(f_1^n x, f_1^n y) > delta`` for some ``n <= horizon``."""
    if eps <= 0 or delta <= 0:
        raise PreconditionError("eps and delta must be positive")
    if horizon < 1:
        raise PreconditionError("horizon must be at least 1")
    return _scan_pair(seq, x, eps, horizon, budget, rng_seed).witness(delta)


def default_delta_ladder(space, eps_ladder=DEFAULT_EPS_LADDER):
    """Halving ladder from ``diam/2`` down to ``2^-20 diam``.

    Unbounded spaces use a reference diameter of 1.
    """
    diam = space.diameter if math.isfinite(space.diameter) else 1.0
    return [diam * 2.0 ** -t for t in range(1, 21)]


def default_base_points(space, n=32):
    if space.is_scalar:
        lo, hi = space.bounds
        return [lo + (hi - lo) * (j + 0.381966) / n for j in range(n)]
    rng = np.random.default_rng([n, space.dimension])
    return [v for v in rng.uniform(-1.0, 1.0, (n, space.dimension))]


@dataclass
class SensitivityReport:
    delta_estimate: float
    horizon: int
    base_points_tested: int
    eps_ladder: list
    delta_ladder: list
    witness_coverage: float
    witnesses: list
    verdict: str
    pairs_tested: int = 0
    budget: dict = field(default_factory=dict)
    rng_seed: object = 0
    escape_events: int = 0
    best_partial: dict | None = None

    def to_json(self):
        return {
            "delta_estimate": self.delta_estimate,
            "horizon": self.horizon,
            "base_points_tested": self.base_points_tested,
            "eps_ladder": list(self.eps_ladder),
            "delta_ladder": list(self.delta_ladder),
            "witness_coverage": self.witness_coverage,
            "pairs_tested": self.pairs_tested,
            "verdict": self.verdict,
            "budget": self.budget,
            "rng_seed": self.rng_seed,
            "escape_events": self.escape_events,
            "best_partial": self.best_partial,
            "witnesses": [w.to_json() for w in self.witnesses],
        }


def _check_ladder(eps_ladder):
    eps_ladder = [float(e) for e in eps_ladder]
    if not eps_ladder or any(e <= 0 for e in eps_ladder):
        raise PreconditionError("eps_ladder must be non-empty and positive")
    if any(b >= a for a, b in zip(eps_ladder, eps_ladder[1:])):
        raise PreconditionError("eps_ladder must be strictly decreasing")
    return eps_ladder


def _ladder_search(pairs, scores, ladder, satisfied):
    """Largest ladder value every testable pair satisfies.

    A value ``delta`` only tests pairs whose ``eps`` is below it, since
    perturbations of size ``eps`` trivially reach separations below ``eps``.
    Returns ``(delta, tested_indices, best_partial)``.
    """
    best = None
    for delta in ladder:
        tested = [j for j, (_, eps) in enumerate(pairs) if eps < delta]
        if not tested:
            continue
        ok = [j for j in tested if satisfied(scores[j], delta)]
        cov = len(ok) / len(tested)
        if len(ok) == len(tested):
            return delta, tested, best
        if ok and (best is None or cov > best["coverage"]):
            best = {"delta": delta, "coverage": cov}
    return None, [], best


def estimate_sensitivity_constant(
    seq, base_points, eps_ladder=DEFAULT_EPS_LADDER, horizon=64, budget=64, rng_seed=0, delta_ladder=None
):
    """Largest ladder ``delta`` witnessed at every base point and every ``eps < delta``.

    Pair ``j`` of ``(base point, eps)`` draws its random candidates from the
    stream ``(rng_seed, j)``.
    """
    if len(base_points) == 0:
        raise PreconditionError("base_points must be non-empty")
    eps_ladder = _check_ladder(eps_ladder)
    ladder = list(delta_ladder) if delta_ladder is not None else default_delta_ladder(seq.space, eps_ladder)
    pairs = [(x, eps) for x in base_points for eps in eps_ladder]
    scans = ordered_map(
        lambda j: _scan_pair(seq, pairs[j][0], pairs[j][1], horizon, budget, _stream(rng_seed, j)),
        range(len(pairs)),
    )
    scores = [s.max_separation for s in scans]
    delta, tested, best = _ladder_search(pairs, scores, ladder, lambda s, d: s > d)
    n_grid, n_random = split_budget(budget)
    common = dict(
        horizon=horizon,
        base_points_tested=len(base_points),
        eps_ladder=eps_ladder,
        delta_ladder=[float(d) for d in ladder],
        budget={"total": budget, "grid": n_grid, "random": n_random},
        rng_seed=rng_seed,
        escape_events=sum((s.x_escape >= 0) + s.y_escapes for s in scans),
        best_partial=best,
    )
    if delta is None:
        return SensitivityReport(0.0, witness_coverage=0.0, witnesses=[], verdict="no-witness-found",
                                 pairs_tested=0, **common)
    witnesses = [scans[j].witness(delta) for j in tested]
    return SensitivityReport(float(delta), witness_coverage=1.0, witnesses=witnesses,
                             verdict="evidence-sensitive", pairs_tested=len(tested), **common)


# -- collective and synchronous sensitivity -----------------------------------

X_AGAINST_Y = "x-against-y_i0"
Y_AGAINST_X = "y-against-x_i0"
SYNCHRONOUS = "synchronous"


@dataclass(frozen=True)
class CollectiveWitness:
    xs: list
    ys: list
    k: int
    i0: int | None  # 0-based
    mode: str
    separations: list
    eps: float
    delta: float

    def replay(self, seq):
        """Re-check both conditions of the definition from stored data."""
        space = seq.space
        n = len(self.xs)
        if any(not space.distance(a, b) < self.eps for a, b in zip(self.xs, self.ys)):
            return False
        for i in range(n):
            for j in range(i + 1, n):
                if space.distance(self.ys[i], self.ys[j]) <= POINT_IDENTITY_TOL:
                    return False
        fx = [apply_window(seq, 1, self.k, x) for x in self.xs]
        fy = [apply_window(seq, 1, self.k, y) for y in self.ys]
        if self.mode == SYNCHRONOUS:
            seps = [space.distance(a, b) for a, b in zip(fx, fy)]
        elif self.mode == X_AGAINST_Y:
            seps = [space.distance(a, fy[self.i0]) for a in fx]
        else:
            seps = [space.distance(b, fx[self.i0]) for b in fy]
        return all(s >= self.delta for s in seps)

    def as_sensitivity_witnesses(self):
        """Per-index single-point witnesses (meaningful for synchronous mode)."""
        return [
            SensitivityWitness(x, y, self.k, s, self.eps, self.delta)
            for x, y, s in zip(self.xs, self.ys, self.separations)
        ]

    def to_json(self):
        return {
            "xs": [_plain(x) for x in self.xs],
            "ys": [_plain(y) for y in self.ys],
            "k": self.k,
            "i0": self.i0,
            "mode": self.mode,
            "separations": list(self.separations),
            "eps": self.eps,
            "delta": self.delta,
        }


def _check_distinct(space, xs):
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            if space.distance(xs[i], xs[j]) <= POINT_IDENTITY_TOL:
                raise PreconditionError(f"points {i} and {j} coincide; xs must be pairwise distinct")


@dataclass
class _Block:
    ys: np.ndarray  # (c, n) or (c, n, d)
    D: np.ndarray  # (c, H, n, n); D[c, k-1, i, j] = d(f^k x_i, f^k y_j)


def _valid_families(space, xs, Y, eps):
    """Mask of candidate families that stay in the space, are eps-close and distinct."""
    c, n = Y.shape[0], Y.shape[1]
    ok = np.ones(c, dtype=bool)
    inside = np.asarray(space.contains(Y))
    ok &= inside.reshape(c, n).all(axis=1)
    with np.errstate(invalid="ignore"):
        dist = np.asarray(space.distance(np.asarray(xs)[None], Y)).reshape(c, n)
        ok &= ((dist < eps) & (dist > 0)).all(axis=1)
        for i in range(n):
            for j in range(i + 1, n):
                dij = np.asarray(space.distance(Y[:, i], Y[:, j])).reshape(c)
                ok &= dij > POINT_IDENTITY_TOL
    return ok


def _block(seq, X_orbit, xs, Y, eps, horizon):
    space = seq.space
    ok = _valid_families(space, xs, Y, eps)
    Y = Y[ok]
    c, n = Y.shape[0], len(xs)
    flat = Y.reshape((c * n,) + Y.shape[2:])
    pts, _ = orbit_batch(seq, flat, horizon)
    pts = pts.reshape((c, n) + pts.shape[1:])
    Xk = X_orbit[:, 1:]  # (n, H[, d])
    Yk = pts[:, :, 1:]  # (c, n, H[, d])
    if space.is_scalar:
        a = Xk.T[None, :, :, None]  # (1, H, n, 1)
        b = np.transpose(Yk, (0, 2, 1))[:, :, None, :]  # (c, H, 1, n)
    else:
        a = np.transpose(Xk, (1, 0, 2))[None, :, :, None, :]
        b = np.transpose(Yk, (0, 2, 1, 3))[:, :, None, :, :]
    with np.errstate(invalid="ignore"):
        D = np.asarray(space.distance(a, b), dtype=float)
    return _Block(Y, D.reshape(c, horizon, n, n))


def _scores(D, mode):
    """Best achievable delta per (candidate, time) for the mode."""
    with np.errstate(invalid="ignore"):
        if mode == SYNCHRONOUS:
            diag = np.diagonal(D, axis1=2, axis2=3)
            return np.min(diag, axis=2)
        a = np.max(np.min(D, axis=2), axis=2)  # exists j: min_i d(x_i, y_j)
        b = np.max(np.min(D, axis=3), axis=2)  # exists i0: min_j d(x_i0, y_j)
        return np.fmax(a, b)


class _CollectiveScan:
    def __init__(self, seq, xs, eps, horizon, budget, rng_seed):
        space = seq.space
        self.seq = seq
        self.xs = [space.as_point(x) for x in xs]
        _check_distinct(space, self.xs)
        self.eps = eps
        self.horizon = horizon
        self.budget = budget
        self.rng_seed = rng_seed
        X = np.asarray(self.xs)
        self.X_orbit, _ = orbit_batch(seq, X, horizon)
        self._blocks = []

    def blocks(self):
        """Shared-displacement block first, then independent perturbations (lazily)."""
        space = self.seq.space
        X = np.asarray(self.xs)
        n = len(self.xs)
        if not self._blocks:
            h = displacements(space, self.eps, self.budget, _rng(self.rng_seed))
            Y = space.normalize(X[None] + (h[:, None] if space.is_scalar else h[:, None, :]))
            self._blocks.append(_block(self.seq, self.X_orbit, self.xs, np.asarray(Y), self.eps, self.horizon))
        yield self._blocks[0]
        if n == 1:
            return
        if len(self._blocks) == 1:
            rng = _rng(self.rng_seed, 1)
            h = _random_displacements(space, self.eps, self.budget * n, rng)
            h = h.reshape((self.budget, n) + h.shape[1:])
            Y = space.normalize(X[None] + h)
            self._blocks.append(_block(self.seq, self.X_orbit, self.xs, np.asarray(Y), self.eps, self.horizon))
        yield self._blocks[1]

    def best_score(self, mode):
        best = 0.0
        for blk in self.blocks():
            if blk.D.size:
                s = _scores(blk.D, mode)
                if np.isfinite(s).any():
                    best = max(best, float(np.nanmax(s)))
        return best

    def witness(self, delta, mode):
        for blk in self.blocks():
            if not blk.D.size:
                continue
            with np.errstate(invalid="ignore"):
                if mode == SYNCHRONOUS:
                    diag = np.diagonal(blk.D, axis1=2, axis2=3)
                    cond = (diag >= delta).all(axis=2)
                    condA = condB = None
                else:
                    condA = (np.min(blk.D, axis=2) >= delta)  # (c, H, j)
                    condB = (np.min(blk.D, axis=3) >= delta)  # (c, H, i0)
                    cond = condA.any(axis=2) | condB.any(axis=2)
            rows = cond.any(axis=1)
            if not rows.any():
                continue
            c = int(np.argmax(rows))
            k = int(np.argmax(cond[c])) + 1
            D = blk.D[c, k - 1]
            ys = [_point(y) for y in blk.ys[c]]
            if mode == SYNCHRONOUS:
                return CollectiveWitness(list(self.xs), ys, k, None, SYNCHRONOUS,
                                         [float(v) for v in np.diagonal(D)], float(self.eps), float(delta))
            if condA[c, k - 1].any():
                i0 = int(np.argmax(condA[c, k - 1]))
                return CollectiveWitness(list(self.xs), ys, k, i0, X_AGAINST_Y,
                                         [float(v) for v in D[:, i0]], float(self.eps), float(delta))
            i0 = int(np.argmax(condB[c, k - 1]))
            return CollectiveWitness(list(self.xs), ys, k, i0, Y_AGAINST_X,
                                     [float(v) for v in D[i0, :]], float(self.eps), float(delta))
        return None


def check_collective(seq, xs, eps, delta, horizon, budget=64, rng_seed=0):
    """Search for distinct ``y_i`` within ``eps`` of ``x_i`` and a time ``k`` meeting either
    anchor form of the collective condition; the first witness in scan order is returned.
    """
    if eps <= 0 or delta <= 0:
        raise PreconditionError("eps and delta must be positive")
    return _CollectiveScan(seq, xs, eps, horizon, budget, rng_seed).witness(delta, "collective")


def check_synchronous(seq, xs, eps, delta, horizon, budget=64, rng_seed=0):
    """As :func:`check_collective` but every pair must separate at one common time."""
    if eps <= 0 or delta <= 0:
        raise PreconditionError("eps and delta must be positive")
    return _CollectiveScan(seq, xs, eps, horizon, budget, rng_seed).witness(delta, SYNCHRONOUS)


@dataclass
class CollectiveReport:
    mode: str
    delta_estimate: float
    horizon: int
    families_tested: int
    eps_ladder: list
    delta_ladder: list
    witness_coverage: float
    witnesses: list
    verdict: str
    pairs_tested: int = 0
    rng_seed: object = 0
    best_partial: dict | None = None

    def to_json(self):
        return {
            "mode": self.mode,
            "delta_estimate": self.delta_estimate,
            "horizon": self.horizon,
            "families_tested": self.families_tested,
            "eps_ladder": list(self.eps_ladder),
            "delta_ladder": list(self.delta_ladder),
            "witness_coverage": self.witness_coverage,
            "pairs_tested": self.pairs_tested,
            "verdict": self.verdict,
            "rng_seed": self.rng_seed,
            "best_partial": self.best_partial,
            "witnesses": [w.to_json() for w in self.witnesses],
        }


def estimate_collective_constant(
    seq, families, eps_ladder=DEFAULT_EPS_LADDER, horizon=64, budget=64, rng_seed=0,
    mode="collective", delta_ladder=None,
):
    """Collective (or synchronous) analogue of :func:`estimate_sensitivity_constant`."""
    if not families:
        raise PreconditionError("families must be non-empty")
    eps_ladder = _check_ladder(eps_ladder)
    ladder = list(delta_ladder) if delta_ladder is not None else default_delta_ladder(seq.space, eps_ladder)
    pairs = [(xs, eps) for xs in families for eps in eps_ladder]
    scans = ordered_map(
        lambda j: _CollectiveScan(seq, pairs[j][0], pairs[j][1], horizon, budget, _stream(rng_seed, j)),
        range(len(pairs)),
    )
    scores = [s.best_score(mode) for s in scans]
    delta, tested, best = _ladder_search(pairs, scores, ladder, lambda s, d: s >= d)
    common = dict(
        mode=SYNCHRONOUS if mode == SYNCHRONOUS else "collective",
        horizon=horizon,
        families_tested=len(families),
        eps_ladder=eps_ladder,
        delta_ladder=[float(d) for d in ladder],
        rng_seed=rng_seed,
        best_partial=best,
    )
    if delta is None:
        return CollectiveReport(delta_estimate=0.0, witness_coverage=0.0, witnesses=[],
                                verdict="no-witness-found", **common)
    witnesses = [scans[j].witness(delta, mode) for j in tested]
    return CollectiveReport(delta_estimate=float(delta), witness_coverage=1.0, witnesses=witnesses,
                            verdict="evidence-sensitive", pairs_tested=len(tested), **common)


# -- equicontinuity and iterate preservation ----------------------------------


def sup_lipschitz(seq, probe=64):
    """Largest structural Lipschitz bound over the maps of ``seq``, or None."""
    space = seq.space
    if seq.is_finitely_generated:
        maps = seq.generator_maps()
    else:
        maps = [seq.resolve_map(i) for i in range(1, probe + 1)]
        if isinstance(seq, UniformLimit):
            maps.append(seq.limit)
    bounds = [f.lipschitz(space) for f in maps]
    if any(b is None for b in bounds):
        return None
    return max(bounds)


def _window_predicate(seq, delta, window, grid, starts):
    space = seq.space

    def holds(e):
        h = np.array([0.999, -0.999, 0.5, -0.5]) * e
        X = np.repeat(grid, len(h))
        Y = space.normalize(X + np.tile(h, len(grid)))
        ok = np.asarray(space.contains(Y))
        X, Y = X[ok], np.asarray(Y)[ok]
        with np.errstate(invalid="ignore"):
            ok = np.asarray(space.distance(X, Y)) < e
        X, Y = X[ok], Y[ok]
        for i in starts:
            pts, esc = orbit_batch(seq, np.concatenate([X, Y]), window, start=i)
            m = len(X)
            live = (esc[:m] < 0) & (esc[m:] < 0)
            with np.errstate(invalid="ignore"):
                d = np.asarray(space.distance(pts[:m][live], pts[m:][live]))
            if d.size and not (d < delta).all():
                return False
        return True

    return holds


def _bisect_modulus(holds, diameter, floor_exp=40, steps=60):
    hi = diameter
    if holds(hi):
        return hi
    lo = diameter * 2.0 ** -floor_exp
    if not holds(lo):
        raise NoModulusFound(f"no modulus at scale {lo:g}")
    for _ in range(steps):
        mid = math.sqrt(lo * hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-6:
            break
    return lo


def equicontinuity_window_modulus(seq, delta, window, grid=None, method="auto"):
    """``eps_delta`` with ``d(x, y) < eps_delta  =>  d(f_i^l x, f_i^l y) < delta`` for ``l <= window``.

    Uses ``delta / L^window`` when every generator has a structural Lipschitz
    bound ``L`` (``L`` floored at 1); otherwise bisects on grid-sampled pairs
    over start indices covering one schedule cycle.
    """
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    if method in ("auto", "structural"):
        L = sup_lipschitz(seq)
        if L is not None:
            return delta / max(L, 1.0) ** window
        if method == "structural":
            raise NoModulusFound("a generator lacks a structural Lipschitz bound")
    space = seq.space
    if not space.is_scalar:
        raise NoModulusFound("grid estimation is only available on scalar spaces")
    grid = space.grid(257) if grid is None else np.asarray(grid, dtype=float)
    starts = seq.start_indices() if seq.is_finitely_generated else list(range(1, 17))
    return _bisect_modulus(_window_predicate(seq, delta, window, grid, starts), space.diameter)


@dataclass
class IterateCheckConfig:
    base_points: list | None = None
    families: list | None = None
    eps_ladder: tuple = DEFAULT_EPS_LADDER
    horizon: int = 64
    budget: int = 64
    rng_seed: int = 0
    delta_ladder: list | None = None

    def resolved(self, space):
        base = self.base_points if self.base_points is not None else default_base_points(space)
        fams = self.families
        if fams is None:
            fams = [base[2 * i : 2 * i + 2] for i in range(min(8, len(base) // 2))]
        return base, fams


@dataclass
class IterateCheckEntry:
    k: int
    measured_delta: float
    predicted_eps_delta: float | None
    measured_ge_predicted: bool
    witnesses_found: bool
    report: object

    def to_json(self):
        return {
            "k": self.k,
            "measured_delta": self.measured_delta,
            "predicted_eps_delta": self.predicted_eps_delta,
            "window": self.k + 2,
            "measured_ge_predicted": self.measured_ge_predicted,
            "witnesses_found": self.witnesses_found,
            "report": self.report.to_json(),
        }


@dataclass
class IterateCheckReport:
    mode: str
    hypothesis_met: bool
    base_report: object
    entries: list

    @property
    def all_preserved(self):
        return self.hypothesis_met and all(e.witnesses_found and e.measured_ge_predicted for e in self.entries)

    def to_json(self):
        return {
            "mode": self.mode,
            "hypothesis_met": self.hypothesis_met,
            "all_preserved": self.all_preserved,
            "base_report": self.base_report.to_json(),
            "entries": [e.to_json() for e in self.entries],
        }


def _run_mode(seq, mode, cfg, base, fams):
    if mode == "plain":
        return estimate_sensitivity_constant(seq, base, cfg.eps_ladder, cfg.horizon, cfg.budget,
                                             cfg.rng_seed, cfg.delta_ladder)
    return estimate_collective_constant(seq, fams, cfg.eps_ladder, cfg.horizon, cfg.budget, cfg.rng_seed,
                                        SYNCHRONOUS if mode == SYNCHRONOUS else "collective", cfg.delta_ladder)


def verify_iterate_preservation(seq, k_list, mode="plain", config=None):
    """Measure the sensitivity constant of each iterate system against the predicted one.

    The prediction is ``equicontinuity_window_modulus(seq, delta, k + 2)`` with
    ``delta`` the constant measured on ``seq`` itself.
    """
    if mode not in ("plain", "collective", SYNCHRONOUS):
        raise PreconditionError(f"unknown mode {mode!r}")
    if not (seq.is_finitely_generated or isinstance(seq, UniformLimit)):
        raise PreconditionError("needs a finitely generated or uniform-limit sequence")
    cfg = config or IterateCheckConfig()
    base, fams = cfg.resolved(seq.space)
    base_report = _run_mode(seq, mode, cfg, base, fams)
    met = base_report.verdict == "evidence-sensitive"
    entries = []
    for k in k_list:
        rep = _run_mode(iterate_system(seq, k), mode, cfg, base, fams)
        predicted = None
        if met:
            predicted = equicontinuity_window_modulus(seq, base_report.delta_estimate, k + 2)
        found = rep.verdict == "evidence-sensitive"
        entries.append(IterateCheckEntry(
            int(k), rep.delta_estimate, predicted,
            bool(predicted is not None and found and rep.delta_estimate >= predicted), found, rep,
        ))
    return IterateCheckReport(mode, met, base_report, entries)


@dataclass
class PowerConvergence:
    k: int
    eps: float
    N: int
    delta_eps: float
    probe_span: int
    sup_errors: list

    def to_json(self):
        return {
            "k": self.k,
            "eps": self.eps,
            "N": self.N,
            "delta_eps": self.delta_eps,
            "probe_span": self.probe_span,
            "sup_errors": self.sup_errors,
        }


def verify_power_convergence(seq, k, eps, grid=None, N_cap=1000, probe_span=8):
    """Smallest ``N`` with ``sup_x d(f_n^k x, f^k x) < eps`` for every ``n`` in ``[N, N + probe_span]``.

    Also returns ``delta_eps`` such that grid pairs closer than it stay within
    ``eps / 2`` under ``f_n^k`` for the probed ``n >= N``.
    """
    if not isinstance(seq, UniformLimit):
        raise PreconditionError("power convergence needs a uniform-limit sequence")
    if k < 1 or eps <= 0:
        raise PreconditionError("k must be positive and eps positive")
    space = seq.space
    grid = space.grid(10_000) if grid is None else np.asarray(grid, dtype=float)
    target = orbit_batch(seq.limit_system(), grid, k)[0][:, k]
    errors = []
    N = None
    for n in range(1, N_cap + probe_span + 1):
        vals = orbit_batch(seq, grid, k, start=n)[0][:, k]
        with np.errstate(invalid="ignore"):
            err = float(np.max(np.asarray(space.distance(vals, target))))
        errors.append(err if math.isfinite(err) else math.inf)
        lead = n - probe_span
        if lead >= 1 and max(errors[lead - 1 : n]) < eps:
            N = lead
            break
    if N is None:
        raise ConvergenceNotObserved(f"sup error stayed >= {eps} up to index {N_cap}")
    maps = [seq.resolve_map(i) for i in range(N, N + probe_span + k)] + [seq.limit]
    bounds = [f.lipschitz(space) for f in maps]
    if all(b is not None for b in bounds):
        delta_eps = (eps / 2) / max(max(bounds), 1.0) ** k
    else:
        starts = list(range(N, N + probe_span + 1))
        delta_eps = _bisect_modulus(_window_predicate(seq, eps / 2, k, grid[::10], starts), space.diameter)
    return PowerConvergence(int(k), float(eps), int(N), float(delta_eps), probe_span, errors)


__all__ = [
    "CollectiveWitness",
    "SensitivityReport",
    "SensitivityWitness",
    "check_collective",
    "check_synchronous",
    "default_base_points",
    "default_delta_ladder",
    "displacements",
    "IterateCheckConfig",
    "sup_lipschitz",
    "equicontinuity_window_modulus",
    "estimate_collective_constant",
    "estimate_sensitivity_constant",
    "find_witness",
    "verify_iterate_preservation",
    "verify_power_convergence",
]
