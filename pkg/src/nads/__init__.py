"""Numerical laboratory for non-autonomous discrete dynamical systems."""

from .kernels import BACKEND
from .maps import (
    Affine,
    Compose,
    Doubling,
    LinearOperator,
    Logistic,
    MapExpr,
    Negation,
    Scaled,
    Square,
    Tent,
    Translation,
    WeightedShift,
)
from .orbits import (
    Orbit,
    apply_window,
    check_commutative,
    iterate_system,
    orbit_batch,
    resolve_map,
    trajectory,
)
from .sequences import (
    ExplicitPrefix,
    FinitelyGenerated,
    IterateSequence,
    MapSequence,
    Schedule,
    ScaledRule,
    UniformLimit,
    constant_sequence,
    identity_sequence,
)
from .spaces import StateSpace

__version__ = "0.1.0"
