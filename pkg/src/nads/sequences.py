"""Map sequences ``f_1, f_2, ...`` and their k-th iterate systems.

Indices are 1-based throughout, matching ``f_i``. Generator indices inside a
:class:`Schedule` are 0-based positions in the generator list.

Every sequence exposes :meth:`MapSequence.plan`, which lists the maps needed
for a window of consecutive indices as a small table plus an index array.
The orbit engine consumes plans, so windows, trajectories and iterate
systems all share one evaluation path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, IndexUnresolvable, PreconditionError
from .maps import IDENTITY, MapExpr, Scaled, compose_chain, map_from_json
from .spaces import StateSpace


@dataclass(frozen=True)
class Schedule:
    """Assignment of sequence indices to generator indices.

    ``constant``: every index uses ``pattern[0]``. ``periodic``: index ``i``
    uses ``pattern[(i - 1) % p]``. ``explicit``: the first ``len(prefix)``
    indices use ``prefix``; later ones cycle through ``pattern`` (the tail),
    which may be empty, in which case later indices are unresolvable.
    """

    kind: str
    pattern: tuple[int, ...]
    prefix: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "periodic", "explicit"):
            raise ConfigError(f"unknown schedule kind {self.kind!r}", "schedule.kind")
        if self.kind != "explicit" and not self.pattern:
            raise ConfigError("pattern must be non-empty", "schedule.pattern")
        if self.kind == "constant" and len(self.pattern) != 1:
            raise ConfigError("constant schedule takes one index", "schedule.index")
        if self.kind == "explicit" and not (self.prefix or self.pattern):
            raise ConfigError("explicit schedule is empty", "schedule")

    @classmethod
    def constant(cls, index=0):
        return cls("constant", (int(index),))

    @classmethod
    def periodic(cls, pattern):
        return cls("periodic", tuple(int(p) for p in pattern))

    @classmethod
    def explicit(cls, prefix, tail=()):
        return cls("explicit", tuple(int(p) for p in tail), tuple(int(p) for p in prefix))

    @property
    def period(self):
        """Eventual period of the tail, or None if there is no tail."""
        return len(self.pattern) or None

    @property
    def preperiod(self):
        return len(self.prefix)

    @property
    def exactly_periodic(self):
        return self.kind in ("constant", "periodic")

    def used(self):
        return sorted(set(self.prefix) | set(self.pattern))

    def index(self, i):
        if i < 1:
            raise PreconditionError(f"sequence indices start at 1, got {i}")
        j = i - 1
        if j < len(self.prefix):
            return self.prefix[j]
        if not self.pattern:
            raise IndexUnresolvable(f"index {i} lies past the explicit schedule and there is no tail")
        return self.pattern[(j - len(self.prefix)) % len(self.pattern)]

    def indices(self, start, count):
        """Generator indices for sequence indices ``start .. start + count - 1``."""
        if start < 1:
            raise PreconditionError(f"sequence indices start at 1, got {start}")
        if count == 0:
            return np.zeros(0, dtype=np.int64)
        j = np.arange(start - 1, start - 1 + count, dtype=np.int64)
        out = np.empty(count, dtype=np.int64)
        pre = len(self.prefix)
        in_pre = j < pre
        if in_pre.any():
            out[in_pre] = np.asarray(self.prefix, dtype=np.int64)[j[in_pre]]
        if (~in_pre).any():
            if not self.pattern:
                raise IndexUnresolvable(
                    f"index {start + count - 1} lies past the explicit schedule and there is no tail"
                )
            pat = np.asarray(self.pattern, dtype=np.int64)
            out[~in_pre] = pat[(j[~in_pre] - pre) % len(pat)]
        return out

    def to_json(self):
        if self.kind == "constant":
            return {"kind": "constant", "index": self.pattern[0]}
        if self.kind == "periodic":
            return {"kind": "periodic", "pattern": list(self.pattern)}
        return {"kind": "explicit", "prefix": list(self.prefix), "tail": list(self.pattern)}

    @classmethod
    def from_json(cls, data, where="schedule"):
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigError("expected an object with a 'kind'", where)
        kind = data["kind"]
        if kind == "constant":
            return cls.constant(data.get("index", 0))
        if kind == "periodic":
            return cls.periodic(data.get("pattern", []))
        if kind == "explicit":
            return cls.explicit(data.get("prefix", []), data.get("tail", []))
        raise ConfigError(f"unknown schedule kind {kind!r}", f"{where}.kind")


class MapSequence:
    """A non-autonomous system ``(X, f_{1,inf})``."""

    space: StateSpace

    def resolve_map(self, i) -> MapExpr:
        raise NotImplementedError

    def plan(self, start, count):
        """``(table, sched, stride)`` covering ``count`` steps from index ``start``.

        The engine applies ``table[sched[t]]`` at base step ``t`` and keeps
        every ``stride``-th point.
        """
        maps = [self.resolve_map(i) for i in range(start, start + count)]
        table, sched = _dedupe(maps)
        return table, sched, 1

    @property
    def is_finitely_generated(self):
        return False

    @property
    def period(self):
        """Exact period of the sequence, when known structurally."""
        return None

    def generator_maps(self):
        """Distinct maps of a finitely generated sequence, in first-use order."""
        raise PreconditionError("sequence is not finitely generated")

    def start_indices(self):
        """Indices whose windows cover one full cycle of the schedule."""
        raise PreconditionError("sequence is not finitely generated")

    def to_json(self):
        raise PreconditionError(f"{type(self).__name__} has no JSON form")


def _dedupe(maps):
    table, pos, sched = [], {}, []
    for f in maps:
        if f not in pos:
            pos[f] = len(table)
            table.append(f)
        sched.append(pos[f])
    return tuple(table), np.asarray(sched, dtype=np.int64)


def _check_generators(generators, space):
    for k, g in enumerate(generators):
        if not isinstance(g, MapExpr):
            raise ConfigError(f"generator {k} is not a map expression", f"generators[{k}]")
        g.check_space(space)


@dataclass(frozen=True)
class FinitelyGenerated(MapSequence):
    space: StateSpace
    generators: tuple
    schedule: Schedule = field(default_factory=Schedule.constant)

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        if not self.generators:
            raise ConfigError("at least one generator is required", "generators")
        _check_generators(self.generators, self.space)
        for g in self.schedule.prefix + self.schedule.pattern:
            if not 0 <= g < len(self.generators):
                raise ConfigError(
                    f"schedule index {g} out of range for {len(self.generators)} generators",
                    "schedule",
                )

    def resolve_map(self, i):
        return self.generators[self.schedule.index(i)]

    def plan(self, start, count):
        return self.generators, self.schedule.indices(start, count), 1

    @property
    def is_finitely_generated(self):
        return self.schedule.period is not None

    @property
    def period(self):
        return self.schedule.period if self.schedule.exactly_periodic else None

    def generator_maps(self):
        return [self.generators[g] for g in self.schedule.used()]

    def start_indices(self):
        if self.schedule.period is None:
            raise PreconditionError("schedule has no periodic tail")
        return list(range(1, self.schedule.preperiod + self.schedule.period + 1))

    def to_json(self):
        return {
            "variant": "finitely-generated",
            "generators": [g.to_json() for g in self.generators],
            "schedule": self.schedule.to_json(),
        }


@dataclass(frozen=True)
class ExplicitPrefix(MapSequence):
    """Arbitrary leading maps followed by a schedule over generators."""

    space: StateSpace
    prefix: tuple
    generators: tuple
    tail: Schedule

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "generators", tuple(self.generators))
        _check_generators(self.prefix + self.generators, self.space)
        for g in self.tail.prefix + self.tail.pattern:
            if not 0 <= g < len(self.generators):
                raise ConfigError(f"tail index {g} out of range", "tail")

    def resolve_map(self, i):
        if i < 1:
            raise PreconditionError(f"sequence indices start at 1, got {i}")
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        return self.generators[self.tail.index(i - len(self.prefix))]

    def plan(self, start, count):
        table = self.prefix + self.generators
        npre = len(self.prefix)
        idx = np.arange(start, start + count, dtype=np.int64)
        sched = np.empty(count, dtype=np.int64)
        head = idx <= npre
        sched[head] = idx[head] - 1
        if (~head).any():
            first = int(idx[~head][0]) - npre
            sched[~head] = npre + self.tail.indices(first, int((~head).sum()))
        return table, sched, 1

    @property
    def is_finitely_generated(self):
        return self.tail.period is not None

    def generator_maps(self):
        seen = list(dict.fromkeys(self.prefix))
        for g in self.tail.used():
            if self.generators[g] not in seen:
                seen.append(self.generators[g])
        return seen

    def start_indices(self):
        if self.tail.period is None:
            raise PreconditionError("tail schedule has no periodic part")
        return list(range(1, len(self.prefix) + self.tail.preperiod + self.tail.period + 1))

    def to_json(self):
        return {
            "variant": "explicit-prefix",
            "prefix": [g.to_json() for g in self.prefix],
            "generators": [g.to_json() for g in self.generators],
            "tail": self.tail.to_json(),
        }


@dataclass(frozen=True)
class ScaledRule:
    """``f_n = (1 - c / (n + offset)) * base``."""

    base: MapExpr
    c: float = 1.0
    offset: float = 2.0

    def __call__(self, n):
        return Scaled(self.base, 1.0 - self.c / (n + self.offset))

    def to_json(self):
        return {"kind": "scaled", "base": self.base.to_json(), "c": self.c, "offset": self.offset}


@dataclass(frozen=True)
class ConstantRule:
    f: MapExpr

    def __call__(self, n):
        return self.f

    def to_json(self):
        return {"kind": "constant", "map": self.f.to_json()}


@dataclass(frozen=True)
class UniformLimit(MapSequence):
    """A sequence given by an index rule together with its uniform limit."""

    space: StateSpace
    rule: Callable[[int], MapExpr]
    limit: MapExpr

    def __post_init__(self):
        self.limit.check_space(self.space)
        self.rule(1).check_space(self.space)

    def resolve_map(self, i):
        if i < 1:
            raise PreconditionError(f"sequence indices start at 1, got {i}")
        return self.rule(i)

    def limit_system(self):
        return FinitelyGenerated(self.space, (self.limit,), Schedule.constant(0))

    def to_json(self):
        if not hasattr(self.rule, "to_json"):
            raise PreconditionError("rule has no JSON form")
        return {"variant": "uniform-limit", "rule": self.rule.to_json(), "limit": self.limit.to_json()}


@dataclass(frozen=True)
class IterateSequence(MapSequence):
    """The k-th iterate system: the j-th map is the window ``f_{(j-1)k+1}^k``."""

    base: MapSequence
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise PreconditionError(f"iterate order must be positive, got {self.k}")

    @property
    def space(self):
        return self.base.space

    def resolve_map(self, j):
        if j < 1:
            raise PreconditionError(f"sequence indices start at 1, got {j}")
        s = (j - 1) * self.k + 1
        return compose_chain(self.base.resolve_map(i) for i in range(s, s + self.k))

    def plan(self, start, count):
        table, sched, stride = self.base.plan((start - 1) * self.k + 1, count * self.k)
        return table, sched, stride * self.k

    @property
    def is_finitely_generated(self):
        return self.base.is_finitely_generated

    @property
    def period(self):
        p = self.base.period
        return None if p is None else p // math.gcd(p, self.k)

    def start_indices(self):
        base = self.base.start_indices()
        # windows repeat once the base cycle has been covered
        n = math.ceil(len(base) / self.k) + len(base)
        return list(range(1, n + 1))

    def generator_maps(self):
        return list(dict.fromkeys(self.resolve_map(j) for j in self.start_indices()))


def constant_sequence(space, f):
    return FinitelyGenerated(space, (f,), Schedule.constant(0))


def identity_sequence(space):
    return constant_sequence(space, IDENTITY)


def sequence_from_json(data, space, where="sequence"):
    if not isinstance(data, dict) or "variant" not in data:
        raise ConfigError("expected an object with a 'variant'", where)
    variant = data["variant"]

    def maps(key):
        items = data.get(key)
        if not isinstance(items, list):
            raise ConfigError("expected a list of maps", f"{where}.{key}")
        return tuple(map_from_json(m, f"{where}.{key}[{n}]") for n, m in enumerate(items))

    if variant == "finitely-generated":
        if "schedule" not in data:
            raise ConfigError("missing schedule", f"{where}.schedule")
        return FinitelyGenerated(space, maps("generators"), Schedule.from_json(data["schedule"], f"{where}.schedule"))
    if variant == "explicit-prefix":
        return ExplicitPrefix(
            space, maps("prefix"), maps("generators"), Schedule.from_json(data.get("tail"), f"{where}.tail")
        )
    if variant == "uniform-limit":
        rule = data.get("rule")
        if not isinstance(rule, dict):
            raise ConfigError("missing rule", f"{where}.rule")
        limit = map_from_json(data.get("limit"), f"{where}.limit")
        if rule.get("kind") == "scaled":
            r = ScaledRule(
                map_from_json(rule.get("base"), f"{where}.rule.base"),
                float(rule.get("c", 1.0)),
                float(rule.get("offset", 2.0)),
            )
        elif rule.get("kind") == "constant":
            r = ConstantRule(map_from_json(rule.get("map"), f"{where}.rule.map"))
        else:
            raise ConfigError(f"unknown rule kind {rule.get('kind')!r}", f"{where}.rule.kind")
        return UniformLimit(space, r, limit)
    raise ConfigError(f"unknown sequence variant {variant!r}", f"{where}.variant")
