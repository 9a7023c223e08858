"""Grid transitivity evidence, Banks-type certificates and Devaney reports."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainEscape, PreconditionError
from .orbits import apply_window, orbit_batch
from .parallel import ordered_map
from .periodic import TAU_PERIODIC, dense_periodic_estimate, is_invariant_periodic_point
from .sensitivity import (
    DEFAULT_EPS_LADDER,
    POINT_IDENTITY_TOL,
    default_base_points,
    estimate_sensitivity_constant,
)

MAX_BALLS = 10_000
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Ball:
    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise PreconditionError("ball radius must be positive")

    def contains(self, space, y):
        return space.distance(y, self.center) < self.radius


def grid_balls(space, resolution):
    if not space.is_bounded or not space.is_scalar:
        raise PreconditionError("transitivity grids need a bounded scalar space")
    lo, hi = space.bounds
    n = max(1, math.ceil((hi - lo) / resolution - 1e-9))
    if n > MAX_BALLS:
        raise PreconditionError(f"resolution gives {n} balls, more than {MAX_BALLS}")
    r = resolution / 2
    return [Ball(lo + (j + 0.5) * resolution, r) for j in range(n)]


def ball_samples(ball, count, rng):
    """Center, then golden-ratio offsets, then uniform draws; all strictly inside."""
    n_det = (count + 1) // 2
    t = np.arange(n_det, dtype=float)
    off = (2.0 * np.mod(t * GOLDEN, 1.0) - 1.0) * 0.999
    det = ball.center + ball.radius * off
    rand = ball.center + ball.radius * rng.uniform(-0.999, 0.999, count - n_det)
    return np.concatenate([det, rand])


@dataclass
class TransitivityReport:
    resolution: float
    horizon: int
    samples_per_ball: int
    balls: list
    pair_matrix: np.ndarray  # least N per ordered (U, V), -1 when absent
    pair_samples: np.ndarray  # the sample u in U that reached V
    rng_seed: object = 0

    @property
    def hit_fraction(self):
        n = len(self.balls)
        return float((self.pair_matrix >= 0).sum()) / (n * n)

    @property
    def complete(self):
        return bool((self.pair_matrix >= 0).all())

    def replay(self, seq):
        space = seq.space
        for u_idx, v_idx in zip(*np.nonzero(self.pair_matrix >= 0)):
            N = int(self.pair_matrix[u_idx, v_idx])
            u = float(self.pair_samples[u_idx, v_idx])
            if not self.balls[u_idx].contains(space, u):
                return False
            if not self.balls[v_idx].contains(space, apply_window(seq, 1, N, u)):
                return False
        return True

    def pair_rows(self):
        for u_idx, v_idx in zip(*np.nonzero(self.pair_matrix >= 0)):
            yield int(u_idx), int(v_idx), int(self.pair_matrix[u_idx, v_idx])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["U_index", "V_index", "N"])
        w.writerows(self.pair_rows())
        return buf.getvalue()

    def to_json(self):
        return {
            "resolution": self.resolution,
            "horizon": self.horizon,
            "samples_per_ball": self.samples_per_ball,
            "n_balls": len(self.balls),
            "hit_fraction": self.hit_fraction,
            "pairs_hit": int((self.pair_matrix >= 0).sum()),
            "rng_seed": self.rng_seed,
        }


def _scan_ball(seq, balls, centers, idx, horizon, samples, rng_seed):
    space = seq.space
    lo = space.bounds[0]
    res = 2 * balls[0].radius
    n = len(balls)
    us = ball_samples(balls[idx], samples, np.random.default_rng([int(rng_seed), idx]))
    pts, _ = orbit_batch(seq, us, horizon)
    P = pts[:, 1:].T  # (H, samples), time-major so the scan order is N first
    with np.errstate(invalid="ignore"):
        cell = np.floor((P - lo) / res)
        ok = np.isfinite(cell)
        cell = np.clip(np.where(ok, cell, 0), 0, n - 1).astype(np.int64)
        near = np.asarray(space.distance(P, centers[cell])) < balls[0].radius
    hit = ok & near
    flat_cell = cell[hit]
    t, s = np.nonzero(hit)
    row_N = np.full(n, -1, dtype=np.int64)
    row_u = np.full(n, np.nan)
    v, first = np.unique(flat_cell, return_index=True)
    row_N[v] = t[first] + 1
    row_u[v] = us[s[first]]
    return row_N, row_u


def check_transitivity(seq, resolution, horizon, samples_per_ball=16, rng_seed=0):
    """Least ``N <= horizon`` with a sampled ``u`` in ``U`` and ``f_1^N(u)`` in ``V``, per ordered ball pair."""
    if horizon < 1 or samples_per_ball < 1:
        raise PreconditionError("horizon and samples_per_ball must be positive")
    balls = grid_balls(seq.space, resolution)
    centers = np.array([b.center for b in balls])
    rows = ordered_map(
        lambda j: _scan_ball(seq, balls, centers, j, horizon, samples_per_ball, rng_seed), range(len(balls))
    )
    return TransitivityReport(
        float(resolution), int(horizon), int(samples_per_ball), balls,
        np.stack([r[0] for r in rows]), np.stack([r[1] for r in rows]), rng_seed,
    )


@dataclass
class DisjointOrbits:
    p1: object
    p2: object
    orbit1: list
    orbit2: list
    min_distance: float
    delta: float

    def to_json(self):
        return {
            "p1": self.p1,
            "p2": self.p2,
            "orbit1": list(self.orbit1),
            "orbit2": list(self.orbit2),
            "min_distance": self.min_distance,
            "delta": self.delta,
        }


def _certified_orbit(seq, x, N_max, k_max, tol):
    try:
        ok, rep = is_invariant_periodic_point(seq, x, N_max, k_max, tol)
    except DomainEscape:
        return None
    return rep.orbit_points if ok else None


def find_disjoint_invariant_periodic_orbits(seq, candidates, N_max=10, k_max=None, tol=TAU_PERIODIC):
    """First candidate pair (in scan order) of invariant periodic points with disjoint orbits.

    ``delta`` is a third of the least distance between the two orbit sets.
    """
    if len(candidates) == 0:
        raise PreconditionError("candidates must be non-empty")
    space = seq.space
    orbits = [_certified_orbit(seq, x, N_max, k_max, tol) for x in candidates]
    for i in range(len(candidates)):
        if orbits[i] is None:
            continue
        for j in range(i + 1, len(candidates)):
            if orbits[j] is None:
                continue
            m = min(space.distance(a, b) for a in orbits[i] for b in orbits[j])
            if m > POINT_IDENTITY_TOL:
                return DisjointOrbits(
                    orbits[i][0], orbits[j][0], orbits[i], orbits[j], float(m), float(m) / 3.0
                )
    return None


@dataclass
class BanksConfig:
    resolution: float = 1 / 16
    horizon: int = 64
    samples_per_ball: int = 16
    density_resolution: float = 1 / 64
    density_threshold: float = 0.95
    N_max: int = 10
    Q_max: int = 128
    candidates: list | None = None
    base_points: list | None = None
    n_base_points: int = 32
    eps_ladder: tuple = DEFAULT_EPS_LADDER
    sensitivity_horizon: int = 64
    budget: int = 64
    rng_seed: int = 0

    def to_json(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


CERTIFIED = "certified-at-desk-scale"
UNMET = "hypothesis-unmet"
EXHAUSTED = "search-budget-exhausted"


@dataclass
class BanksCertificate:
    verdict: str
    unmet: list
    transitivity_evidence: TransitivityReport
    density_evidence: object
    orbits: DisjointOrbits | None
    sensitivity_confirmation: object = None
    config: BanksConfig = field(default_factory=BanksConfig)

    @property
    def delta(self):
        return None if self.orbits is None else self.orbits.delta

    @property
    def eta(self):
        return None if self.orbits is None else self.orbits.delta / 8

    @property
    def eta_coverage(self):
        s = self.sensitivity_confirmation
        if s is None:
            return None
        if s.delta_estimate > 0:
            return s.witness_coverage
        return s.best_partial["coverage"] if s.best_partial else 0.0

    def to_json(self):
        o = self.orbits
        return {
            "verdict": self.verdict,
            "unmet": list(self.unmet),
            "p1": None if o is None else o.p1,
            "p2": None if o is None else o.p2,
            "orbit1": None if o is None else list(o.orbit1),
            "orbit2": None if o is None else list(o.orbit2),
            "min_distance": None if o is None else o.min_distance,
            "delta": self.delta,
            "eta": self.eta,
            "eta_coverage": self.eta_coverage,
            "transitivity": self.transitivity_evidence.to_json(),
            "density": self.density_evidence.to_json(),
            "sensitivity": None if self.sensitivity_confirmation is None else self.sensitivity_confirmation.to_json(),
            "config": self.config.to_json(),
        }


def banks_certify(seq, config=None):
    """Check the three hypotheses, derive ``delta`` and ``eta = delta / 8``, then confirm ``eta`` by witness search.

    The confirmation only runs when every hypothesis has complete evidence.
    """
    cfg = config or BanksConfig()
    if not seq.is_finitely_generated:
        raise PreconditionError("Banks certification needs a finitely generated sequence")
    space = seq.space
    trans = check_transitivity(seq, cfg.resolution, cfg.horizon, cfg.samples_per_ball, cfg.rng_seed)
    dens = dense_periodic_estimate(seq, cfg.density_resolution, cfg.N_max, Q_max=cfg.Q_max)
    if cfg.candidates is not None:
        cands = list(cfg.candidates)
    else:
        cands = [p for _, (p, _) in sorted(dens.representatives.items())]
    orbits = find_disjoint_invariant_periodic_orbits(seq, cands, cfg.N_max) if cands else None
    unmet = []
    if not trans.complete:
        unmet.append("transitivity")
    if not dens.coverage >= cfg.density_threshold:
        unmet.append("dense-periodic-points")
    if orbits is None:
        unmet.append("disjoint-invariant-periodic-orbits")
    if unmet:
        return BanksCertificate(UNMET, unmet, trans, dens, orbits, None, cfg)
    eta = orbits.delta / 8
    base = cfg.base_points if cfg.base_points is not None else default_base_points(space, cfg.n_base_points)
    sens = estimate_sensitivity_constant(
        seq, base, cfg.eps_ladder, cfg.sensitivity_horizon, cfg.budget, cfg.rng_seed, delta_ladder=[eta]
    )
    verdict = CERTIFIED if sens.delta_estimate == eta and sens.witness_coverage == 1.0 else EXHAUSTED
    return BanksCertificate(verdict, [], trans, dens, orbits, sens, cfg)


@dataclass
class DevaneyReport:
    periodic_density: bool
    transitivity: bool
    sensitivity: bool
    density_evidence: object
    transitivity_evidence: TransitivityReport
    sensitivity_evidence: object

    @property
    def all_positive(self):
        return self.periodic_density and self.transitivity and self.sensitivity

    def to_json(self):
        return {
            "flags": {
                "periodic_density": self.periodic_density,
                "transitivity": self.transitivity,
                "sensitivity": self.sensitivity,
            },
            "density": self.density_evidence.to_json(),
            "transitivity": self.transitivity_evidence.to_json(),
            "sensitivity": self.sensitivity_evidence.to_json(),
        }


def devaney_report(seq, config=None):
    """Evidence flags for dense periodic points, transitivity and sensitivity."""
    cfg = config or BanksConfig()
    dens = dense_periodic_estimate(seq, cfg.density_resolution, cfg.N_max, Q_max=cfg.Q_max)
    trans = check_transitivity(seq, cfg.resolution, cfg.horizon, cfg.samples_per_ball, cfg.rng_seed)
    base = cfg.base_points if cfg.base_points is not None else default_base_points(seq.space, cfg.n_base_points)
    sens = estimate_sensitivity_constant(seq, base, cfg.eps_ladder, cfg.sensitivity_horizon, cfg.budget, cfg.rng_seed)
    return DevaneyReport(
        bool(dens.coverage >= cfg.density_threshold),
        trans.complete,
        sens.verdict == "evidence-sensitive",
        dens, trans, sens,
    )
