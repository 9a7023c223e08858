"""Linear systems on finite-dimensional truncations.

The constructions build multi-point witnesses from a single pair
``z1, z2`` near the origin whose images separate: ``y_i = x_i + z1`` and
``y_i* = x_i + z2``. Linearity transfers the separation of ``(z1, z2)`` to
every ``(y_i, y_i*)``, and the triangle inequality then guarantees one of the
two branches is far from the anchor image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .orbits import check_commutative, orbit_batch
from .sensitivity import POINT_IDENTITY_TOL, SYNCHRONOUS, Y_AGAINST_X, CollectiveWitness
from .spaces import TAU_METRIC

TAU_LIN = 1e-9


@dataclass(frozen=True)
class LinearSystemSpec:
    sequence: object
    probe: int = 16  # maps checked when the sequence is not finitely generated

    def __post_init__(self):
        if self.sequence.space.kind != "vector":
            raise PreconditionError("linear systems need a vector space")

    @property
    def space(self):
        return self.sequence.space

    @property
    def dimension(self):
        return self.space.dimension

    @property
    def norm(self):
        return self.space.norm

    def maps(self):
        seq = self.sequence
        if seq.is_finitely_generated:
            return list(seq.generator_maps())
        return [seq.resolve_map(i) for i in range(1, self.probe + 1)]


@dataclass
class LinearValidation:
    passed: bool
    violations: list

    def __bool__(self):
        return self.passed

    def to_json(self):
        return {"passed": self.passed, "violations": self.violations}


def _samples(d, n, rng):
    """Coefficients and points; the first sample is ``a = b = 1``, ``x = y = ones``."""
    a = np.concatenate([[1.0], rng.uniform(-2, 2, n - 1)])
    b = np.concatenate([[1.0], rng.uniform(-2, 2, n - 1)])
    X = np.vstack([np.ones(d), rng.uniform(-1, 1, (n - 1, d))])
    Y = np.vstack([np.ones(d), rng.uniform(-1, 1, (n - 1, d))])
    return a, b, X, Y


def validate_linear_system(spec, samples=32, tol=TAU_LIN, rng_seed=0):
    """Sampled linearity of every map and translation invariance of the metric."""
    if samples < 1:
        raise PreconditionError("samples must be at least 1")
    space = spec.space
    rng = np.random.default_rng(rng_seed)
    a, b, X, Y = _samples(spec.dimension, samples, rng)
    Z = rng.uniform(-1, 1, X.shape)
    violations = []
    for g, f in enumerate(spec.maps()):
        lhs = f.apply_batch(a[:, None] * X + b[:, None] * Y, space)
        rhs = a[:, None] * f.apply_batch(X, space) + b[:, None] * f.apply_batch(Y, space)
        err = np.asarray(space.distance(lhs, rhs))
        scale = 1.0 + np.asarray(space.norm_of(lhs))
        for s in np.flatnonzero(~(err <= tol * scale)):
            violations.append({
                "kind": "linearity", "generator": g, "map": f.name, "a": float(a[s]), "b": float(b[s]),
                "x": X[s].tolist(), "y": Y[s].tolist(), "error": float(err[s]),
            })
            break
    d0 = np.asarray(space.distance(X, Y))
    d1 = np.asarray(space.distance(X + Z, Y + Z))
    bad = np.flatnonzero(~(np.abs(d1 - d0) <= tol * (1.0 + d0)))
    if bad.size:
        s = bad[0]
        violations.append({
            "kind": "translation-invariance", "x": X[s].tolist(), "y": Y[s].tolist(), "z": Z[s].tolist(),
            "error": float(abs(d1[s] - d0[s])),
        })
    return LinearValidation(not violations, violations)


@dataclass(frozen=True)
class ZeroWitness:
    z1: np.ndarray
    z2: np.ndarray
    k: int
    separation: float
    eps: float
    eta: float

    def replay(self, spec):
        space = spec.space
        if not (space.norm_of(self.z1) < self.eps and space.norm_of(self.z2) < self.eps):
            return False
        pts, _ = orbit_batch(spec.sequence, np.stack([self.z1, self.z2]), self.k)
        return space.distance(pts[0, self.k], pts[1, self.k]) > self.eta

    def to_json(self):
        return {
            "z1": self.z1.tolist(),
            "z2": self.z2.tolist(),
            "k": self.k,
            "separation": self.separation,
            "eps": self.eps,
            "eta": self.eta,
        }


def search_directions(space, budget, rng):
    """Unit vectors: the basis first, then random directions."""
    d = space.dimension
    dirs = [np.eye(d)]
    extra = max(0, budget - d)
    if extra:
        g = rng.standard_normal((extra, d))
        dirs.append(g / np.asarray(space.norm_of(g))[:, None])
    return np.vstack(dirs)


def lemma_zero_witness(spec, eps, eta, horizon=32, budget=64, rng_seed=0):
    """``z1 = s u`` and ``z2 = -s u`` (``s`` just below ``eps``) with ``d(f_1^k z1, f_1^k z2) > eta``.

    Scans times first and directions second, so the returned ``k`` is the
    least one any direction achieves.
    """
    if eps <= 0 or eta <= 0:
        raise PreconditionError("eps and eta must be positive")
    space = spec.space
    s = 0.999 * eps
    U = search_directions(space, budget, np.random.default_rng(rng_seed))
    Z = np.vstack([s * U, -s * U]) + 0.0
    pts, _ = orbit_batch(spec.sequence, Z, horizon)
    c = len(U)
    sep = np.asarray(space.distance(pts[:c, 1:], pts[c:, 1:]))  # (c, H)
    hit = sep > eta
    times = hit.any(axis=0)
    if not times.any():
        return None
    k = int(np.argmax(times)) + 1
    j = int(np.argmax(hit[:, k - 1]))
    return ZeroWitness(Z[j].copy(), Z[c + j].copy(), k, float(sep[j, k - 1]), float(eps), float(eta))


@dataclass
class ConstructionConfig:
    eta: float = 0.5
    horizon: int = 32
    budget: int = 64
    rng_seed: int = 0
    validation_samples: int = 32
    max_m: int = 4
    max_n: int = 4

    def to_json(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class TraceEntry:
    check: str
    i: int | None
    lhs: float
    rhs: float
    relation: str
    holds: bool

    def to_json(self):
        return dict(self.__dict__)


@dataclass
class ConstructionResult:
    verdict: str  # witness-constructed | hypothesis-unmet | numerical-tolerance-event
    mode: str
    dimension: int
    unmet: list = field(default_factory=list)
    zero_witness: ZeroWitness | None = None
    witness: CollectiveWitness | None = None
    constant: float | None = None
    trace: list = field(default_factory=list)
    failure: dict | None = None
    validation: LinearValidation | None = None
    commutativity: object = None

    def revalidate(self, spec):
        """Recompute every traced inequality from the stored points."""
        if self.zero_witness is None or self.witness is None:
            return False
        again, _, _ = _trace(spec, self.witness.xs, self.zero_witness, self.mode)
        if len(again) != len(self.trace):
            return False
        return all(a.holds and a == b for a, b in zip(again, self.trace))

    def to_json(self):
        c = self.commutativity
        return {
            "verdict": self.verdict,
            "mode": self.mode,
            "dimension": self.dimension,
            "unmet": self.unmet,
            "constant": self.constant,
            "zero_witness": None if self.zero_witness is None else self.zero_witness.to_json(),
            "witness": None if self.witness is None else self.witness.to_json(),
            "trace": [t.to_json() for t in self.trace],
            "failure": self.failure,
            "validation": None if self.validation is None else self.validation.to_json(),
            "commutative": None if c is None else c.commutative,
        }


def _trace(spec, xs, zw, mode):
    """Trace entries, the selected ``x_i*`` and their separations for a z-pair."""
    space = spec.space
    X = np.asarray(xs, dtype=float)
    n, k, eta = len(X), zw.k, zw.eta
    Y, Ys = X + zw.z1, X + zw.z2
    pts, _ = orbit_batch(spec.sequence, np.vstack([X, Y, Ys, [zw.z1, zw.z2]]), k)
    fk = pts[:, k]
    fX, fY, fYs = fk[:n], fk[n : 2 * n], fk[2 * n : 3 * n]
    fz1, fz2 = fk[3 * n], fk[3 * n + 1]
    d = space.distance
    zsep = d(fz1, fz2)
    entries = []

    def add(check, i, lhs, rhs, relation, holds):
        entries.append(TraceEntry(check, i, float(lhs), float(rhs), relation, bool(holds)))

    n1, n2 = space.norm_of(zw.z1), space.norm_of(zw.z2)
    add("d(0,z1) < eps", None, n1, zw.eps, "<", n1 < zw.eps)
    add("d(0,z2) < eps", None, n2, zw.eps, "<", n2 < zw.eps)
    add("d(f^k z1, f^k z2) > eta", None, zsep, eta, ">", zsep > eta)
    chosen, seps = [], []
    for i in range(n):
        a, b = d(X[i], Y[i]), d(X[i], Ys[i])
        add("d(x_i,y_i) = d(0,z1)", i, a, n1, "~", abs(a - n1) <= TAU_METRIC)
        add("d(x_i,y_i*) = d(0,z2)", i, b, n2, "~", abs(b - n2) <= TAU_METRIC)
        add("d(x_i,y_i) < eps", i, a, zw.eps, "<", a < zw.eps)
        add("d(x_i,y_i*) < eps", i, b, zw.eps, "<", b < zw.eps)
        s = d(fY[i], fYs[i])
        add("d(f^k y_i, f^k y_i*) = d(f^k z1, f^k z2)", i, s, zsep, "~", abs(s - zsep) <= TAU_LIN * (1.0 + zsep))
        add("d(f^k y_i, f^k y_i*) > eta", i, s, eta, ">", s > eta)
        anchor = fX[0] if mode != SYNCHRONOUS else fX[i]
        s1, s2 = d(anchor, fY[i]), d(anchor, fYs[i])
        add("max(d(anchor, f^k y_i), d(anchor, f^k y_i*)) > eta/2", i, max(s1, s2), eta / 2, ">",
            s1 > eta / 2 or s2 > eta / 2)
        if s1 > eta / 2:
            chosen.append(Y[i])
            seps.append(float(s1))
        elif s2 > eta / 2:
            chosen.append(Ys[i])
            seps.append(float(s2))
        else:
            chosen.append(None)
            seps.append(float(max(s1, s2)))
    picked = [c for c in chosen if c is not None]
    distinct = min(
        (d(picked[i], picked[j]) for i in range(len(picked)) for j in range(i + 1, len(picked))),
        default=np.inf,
    )
    if n > 1:
        add("min_{i<j} d(x_i*, x_j*) > identity tolerance", None, distinct, POINT_IDENTITY_TOL, ">",
            distinct > POINT_IDENTITY_TOL)
    return entries, chosen, seps


def _construct(spec, xs, eps, config, mode):
    cfg = config or ConstructionConfig()
    if len(xs) == 0:
        raise PreconditionError("xs must be non-empty")
    space = spec.space
    xs = [space.as_point(x) for x in xs]
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            if space.distance(xs[i], xs[j]) <= POINT_IDENTITY_TOL:
                raise PreconditionError(f"points {i} and {j} coincide; xs must be pairwise distinct")
    validation = validate_linear_system(spec, cfg.validation_samples, rng_seed=cfg.rng_seed)
    comm = check_commutative(spec.sequence, xs, cfg.max_m, cfg.max_n)
    unmet = []
    if not validation.passed:
        unmet.append("linearity")
    if not comm.commutative:
        unmet.append("commutativity")
    zw = None
    if not unmet:
        zw = lemma_zero_witness(spec, eps, cfg.eta, cfg.horizon, cfg.budget, cfg.rng_seed)
        if zw is None:
            unmet.append("zero-witness")
    base = dict(mode=mode, dimension=spec.dimension, validation=validation, commutativity=comm)
    if unmet:
        return ConstructionResult("hypothesis-unmet", unmet=unmet, zero_witness=zw, **base)
    trace, chosen, seps = _trace(spec, xs, zw, mode)
    constant = zw.eta / 2
    bad = [i for i, c in enumerate(chosen) if c is None]
    if bad or not all(t.holds for t in trace):
        failure = None
        if bad:
            i = bad[0]
            failure = {"i": i, "x": xs[i].tolist(), "y": (xs[i] + zw.z1).tolist(),
                       "y_star": (xs[i] + zw.z2).tolist()}
        return ConstructionResult("numerical-tolerance-event", zero_witness=zw, constant=constant,
                                  trace=trace, failure=failure, **base)
    w = CollectiveWitness(
        list(xs), [np.array(c) for c in chosen], zw.k, None if mode == SYNCHRONOUS else 0,
        mode, seps, float(eps), float(constant),
    )
    return ConstructionResult("witness-constructed", zero_witness=zw, witness=w, constant=constant,
                              trace=trace, **base)


def collective_from_transitivity(spec, xs, eps, config=None):
    """Collective witness at constant ``eta / 2`` anchored at ``x_0``, with a full inequality trace."""
    return _construct(spec, xs, eps, config, Y_AGAINST_X)


def synchronous_from_transitivity(spec, xs, eps, config=None):
    """Synchronous witness at constant ``eta / 2``, choosing a branch per index."""
    return _construct(spec, xs, eps, config, SYNCHRONOUS)
