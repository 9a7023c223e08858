import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nads.errors import DomainEscape, PreconditionError, UnderSpecifiedCheck
from nads.maps import Affine, Tent
from nads.periodic import (
    dense_periodic_estimate, detect_periodic_point, is_invariant_periodic_point, is_invariant_set,
)
from nads.sequences import ScaledRule, UniformLimit, constant_sequence
from nads.spaces import StateSpace


@pytest.mark.parametrize("x, period", [(0.0, 1), (1 / 3, 2), (1 / 7, 3), (1 / 5, 4), (1 / 31, 5)])
def test_doubling_periods(doubling, x, period):
    rep = detect_periodic_point(doubling, x, 10, 10)
    assert rep is not None and rep.period == period
    assert len(rep.orbit_points) == period


def test_doubling_aperiodic_point_has_no_period(doubling):
    assert detect_periodic_point(doubling, 0.1, 10, 10) is None  # preperiodic, 0.1 -> 0.2 -> ...


def test_f_system_point_is_periodic_not_invariant(f_system):
    rep = detect_periodic_point(f_system, 1.0, 10, 10)
    assert rep.period == 2 and rep.orbit_points == [1.0, 2.0]
    check = is_invariant_set(f_system, [1.0, 2.0])
    assert not check
    v = check.violation
    assert (v.map_index, v.point, v.image) == (1, 2.0, 3.0)
    ok, _ = is_invariant_periodic_point(f_system, 1.0)
    assert not ok


def test_g_system_invariant_points(g_system):
    ok, rep = is_invariant_periodic_point(g_system, -1.0)
    assert ok and rep.period == 2 and sorted(rep.orbit_points) == [-1.0, 1.0]
    ok, rep = is_invariant_periodic_point(g_system, 0.0)
    assert ok and rep.period == 1 and rep.orbit_points == [0.0]


def test_horizon_is_raised_for_periodic_schedules(f_system):
    rep = detect_periodic_point(f_system, 1.0, 4, 4)
    assert rep.checked_horizon == 2 * 2 * 2


def test_escaping_point_raises(g_system):
    with pytest.raises(DomainEscape):
        detect_periodic_point(g_system, 3.0, 4, 4)


def test_preconditions(doubling):
    with pytest.raises(PreconditionError):
        detect_periodic_point(doubling, 0.1, 0, 5)
    with pytest.raises(PreconditionError):
        detect_periodic_point(doubling, 0.1, 5, 2)
    with pytest.raises(PreconditionError):
        is_invariant_set(doubling, [])


def test_invariance_needs_horizon_without_finite_generation():
    I = StateSpace.interval()
    seq = UniformLimit(I, ScaledRule(Tent()), Tent())
    with pytest.raises(UnderSpecifiedCheck):
        is_invariant_set(seq, [0.0])
    assert is_invariant_set(seq, [0.0], horizon=20)


@settings(max_examples=40, deadline=None)
@given(N=st.integers(1, 6), data=st.data())
def test_doubling_rationals_with_odd_denominator(doubling, N, data):
    # p / (2^N - 1) has period dividing N under doubling
    q = 2**N - 1
    p = data.draw(st.integers(0, q - 1))
    rep = detect_periodic_point(doubling, p / q, 10, 10)
    assert rep is not None and N % rep.period == 0


def test_density_doubling(doubling):
    est = dense_periodic_estimate(doubling, 1 / 64)
    assert est.coverage == 1.0 and est.n_cells == 64 and not est.uncovered
    for cell, (x, n) in est.representatives.items():
        assert cell / 64 <= x < (cell + 1) / 64
        assert detect_periodic_point(doubling, x, 10, 10).period == n


def test_density_identity_and_rotation(identity, systems):
    assert dense_periodic_estimate(identity, 1 / 16).coverage == 1.0
    rot = systems["rotation"].sequence
    est = dense_periodic_estimate(rot, 1 / 16)
    assert est.coverage == 0.0 and len(est.uncovered) == 16


def test_density_f_system_marks_escaping_cells(f_system):
    est = dense_periodic_estimate(f_system, 1 / 8)
    assert est.coverage == 1.0
    # the top unit of the window maps outside it
    assert all(c >= 56 for c in est.undetermined)


def test_density_monotone_in_candidates(doubling):
    small = dense_periodic_estimate(doubling, 1 / 64, Q_max=16)
    big = dense_periodic_estimate(doubling, 1 / 64, Q_max=128)
    assert big.coverage >= small.coverage
