import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nads.errors import ConvergenceNotObserved, NoModulusFound, PreconditionError
from nads.maps import Tent
from nads.orbits import iterate_system
from nads.sensitivity import (
    SYNCHRONOUS, X_AGAINST_Y, Y_AGAINST_X, IterateCheckConfig, check_collective, check_synchronous,
    default_base_points, default_delta_ladder, displacements, equicontinuity_window_modulus,
    estimate_collective_constant, estimate_sensitivity_constant, find_witness, verify_iterate_preservation,
    verify_power_convergence,
)
from nads.sequences import ConstantRule, ScaledRule, UniformLimit, constant_sequence
from nads.spaces import StateSpace

from .conftest import circle_dist

C = StateSpace.circle()
I = StateSpace.interval()


def doubling_sep(x, y, n):
    """Separation of doubling orbits, by direct repeated doubling."""
    for _ in range(n):
        x, y = (2 * x) % 1.0, (2 * y) % 1.0
    return circle_dist(x, y)


# -- candidates ---------------------------------------------------------------

def test_displacements_order_and_bounds():
    h = displacements(C, 1e-3, 16, np.random.default_rng(0))
    assert len(h) == 16
    assert np.all(np.abs(h) < 1e-3)
    grid = h[:8]
    assert grid[0] == -grid[1] and abs(grid[0]) == np.max(np.abs(grid))  # largest radius first, both signs
    V = StateSpace.vector_space(3)
    hv = displacements(V, 0.5, 20, np.random.default_rng(0))
    assert hv.shape == (20, 3) and np.all(np.linalg.norm(hv, axis=1) < 0.5)


def test_delta_ladder_is_geometric():
    lad = default_delta_ladder(C)
    assert lad[0] == 0.25 and len(lad) == 20
    assert all(b == a / 2 for a, b in zip(lad, lad[1:]))
    assert lad[-1] == 0.5 * 2.0**-20


# -- single point -------------------------------------------------------------

def test_doubling_witness_matches_brute_force(doubling):
    x, eps, delta = 0.2, 1e-3, 0.25
    w = find_witness(doubling, x, eps, delta, 32)
    assert w is not None and w.replay(doubling)
    assert abs(w.y - x) < eps and w.separation > delta
    assert w.separation == pytest.approx(doubling_sep(x, w.y, w.n), abs=1e-12)
    # brute force: some grid y separates by about 8 steps
    n_star = math.ceil(math.log2(delta / eps))
    ys = x + np.linspace(-eps, eps, 201)[1:-1]
    assert any(doubling_sep(x, y, n) > delta for y in ys for n in range(1, n_star + 3))
    assert w.n <= n_star + 2


@settings(max_examples=30, deadline=None)
@given(x=st.floats(0, 1, exclude_max=True), eps=st.floats(1e-6, 0.1), seed=st.integers(0, 1000))
def test_identity_has_no_witness(identity, x, eps, seed):
    assert find_witness(identity, x, eps, eps * 1.0001, 50, 32, seed) is None


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-3, 2.9), eps=st.floats(1e-4, 0.09), seed=st.integers(0, 1000))
def test_f_system_isometry_null(f_system, x, eps, seed):
    assert find_witness(f_system, x, eps, 0.1, 100, 32, seed) is None


def test_f_system_spec_case(f_system):
    assert find_witness(f_system, 1.0, 0.01, 0.1, 100) is None


def test_witness_valid_at_longer_horizon(doubling):
    w = find_witness(doubling, 0.3, 1e-4, 0.2, 20)
    assert w.replay(doubling)
    assert find_witness(doubling, 0.3, 1e-4, 0.2, 60) is not None


def test_preconditions(doubling):
    with pytest.raises(PreconditionError):
        find_witness(doubling, 0.3, 0, 0.2, 20)
    with pytest.raises(PreconditionError):
        find_witness(doubling, 0.3, 0.1, 0.2, 0)
    with pytest.raises(PreconditionError):
        estimate_sensitivity_constant(doubling, [0.1], [1e-3, 1e-2])
    with pytest.raises(PreconditionError):
        check_collective(doubling, [0.1, 0.1], 1e-3, 0.2, 10)


# -- estimator ----------------------------------------------------------------

def test_doubling_constant(doubling):
    rep = estimate_sensitivity_constant(doubling, default_base_points(C), horizon=64)
    assert rep.delta_estimate >= 0.25 and rep.witness_coverage == 1.0
    assert rep.verdict == "evidence-sensitive"
    assert len(rep.witnesses) == 32 * 3
    assert all(w.replay(doubling) for w in rep.witnesses)


def test_identity_constant(identity):
    rep = estimate_sensitivity_constant(identity, default_base_points(C), horizon=64)
    assert rep.verdict == "no-witness-found" and rep.delta_estimate == 0 and not rep.witnesses


def test_iterate_constant(doubling):
    rep = estimate_sensitivity_constant(iterate_system(doubling, 2), default_base_points(C), horizon=64)
    assert rep.delta_estimate >= 0.25


def test_report_is_deterministic(doubling):
    a = estimate_sensitivity_constant(doubling, default_base_points(C, 8), rng_seed=7).to_json()
    b = estimate_sensitivity_constant(doubling, default_base_points(C, 8), rng_seed=7).to_json()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


# -- collective and synchronous -----------------------------------------------

def _brute_collective(xs, eps, delta, horizon):
    for t in range(1, 200):
        h = eps * t / 200
        ys = [(x + h) % 1.0 for x in xs]
        for k in range(1, horizon + 1):
            fx = [(x * 2**k) % 1.0 for x in xs]
            fy = [(y * 2**k) % 1.0 for y in ys]
            a = any(all(circle_dist(a_, fy[j]) >= delta for a_ in fx) for j in range(len(xs)))
            b = any(all(circle_dist(b_, fx[i]) >= delta for b_ in fy) for i in range(len(xs)))
            if a or b:
                return True
    return False


def test_doubling_collective(doubling):
    xs, eps, delta = [0.1, 0.3], 1e-3, 0.2
    assert _brute_collective(xs, eps, delta, 40)
    w = check_collective(doubling, xs, eps, delta, 40)
    assert w is not None and w.mode in (X_AGAINST_Y, Y_AGAINST_X) and w.replay(doubling)
    assert 0 <= w.i0 < len(xs)


def test_doubling_synchronous(doubling):
    w = check_synchronous(doubling, [0.1, 0.3, 0.6], 1e-3, 0.2, 40)
    assert w is not None and w.mode == SYNCHRONOUS and w.replay(doubling)
    for sw in w.as_sensitivity_witnesses():
        assert sw.replay(doubling, tol=1e-12)


def test_identity_multi_point_null(identity):
    assert check_collective(identity, [0.1, 0.3], 1e-3, 0.01, 100) is None
    assert check_synchronous(identity, [0.1, 0.3], 1e-3, 0.01, 100) is None


@settings(max_examples=40, deadline=None)
@given(
    name=st.sampled_from(["doubling", "identity", "rotation"]),
    x=st.floats(0, 1, exclude_max=True), eps=st.floats(1e-5, 1e-2), delta=st.floats(1e-3, 0.45),
    horizon=st.integers(1, 40), seed=st.integers(0, 2**31),
)
def test_singleton_collapse(systems, name, x, eps, delta, horizon, seed):
    seq = systems[name].sequence
    w = find_witness(seq, x, eps, delta, horizon, 32, seed)
    for check in (check_collective, check_synchronous):
        c = check(seq, [x], eps, delta, horizon, 32, seed)
        assert (w is None) == (c is None)
        if w is not None:
            assert (c.ys[0], c.k) == (w.y, w.n)


def test_collective_estimator(doubling, identity):
    fams = [[0.1, 0.3], [0.2, 0.55, 0.8]]
    rep = estimate_collective_constant(doubling, fams, horizon=64)
    assert rep.delta_estimate >= 0.125 and rep.witness_coverage == 1.0
    assert all(w.replay(doubling) for w in rep.witnesses)
    rep = estimate_collective_constant(identity, fams, horizon=64, mode=SYNCHRONOUS)
    assert rep.verdict == "no-witness-found"


# -- equicontinuity -----------------------------------------------------------

@pytest.mark.parametrize("name, expected", [("identity", 0.1), ("doubling", 0.003125)])
def test_window_modulus(systems, name, expected):
    assert equicontinuity_window_modulus(systems[name].sequence, 0.1, 5) == expected


def test_window_modulus_tent():
    assert equicontinuity_window_modulus(constant_sequence(I, Tent()), 0.1, 5) == 0.003125


def test_window_modulus_grid_matches_lipschitz(doubling):
    e = equicontinuity_window_modulus(doubling, 0.1, 5, method="grid")
    assert e == pytest.approx(0.003125, rel=1e-2)


def test_window_modulus_floor(doubling):
    with pytest.raises(NoModulusFound):
        equicontinuity_window_modulus(doubling, 1e-15, 5, method="grid")


# -- iterate preservation -----------------------------------------------------

def test_iterate_preservation_doubling(doubling):
    rep = verify_iterate_preservation(doubling, [2, 3, 4], "plain", IterateCheckConfig(base_points=default_base_points(C, 8)))
    assert rep.hypothesis_met and rep.all_preserved
    for e in rep.entries:
        assert e.predicted_eps_delta == rep.base_report.delta_estimate / 2 ** (e.k + 2)


@pytest.mark.parametrize("name, ks", [("identity", [1, 2]), ("f-system", [2])])
def test_iterate_preservation_unmet(systems, name, ks):
    seq = systems[name].sequence
    pts = [0.1, 0.6] if name == "identity" else [-2.5, 0.5]
    rep = verify_iterate_preservation(seq, ks, "plain", IterateCheckConfig(base_points=pts))
    assert not rep.hypothesis_met and not rep.all_preserved
    assert all(not e.witnesses_found for e in rep.entries)


# -- power convergence --------------------------------------------------------

def _sup_error(n, k, grid):
    def tent(x):
        return np.where(x <= 0.5, 2 * x, 2 * (1 - x))

    a = grid.copy()
    b = grid.copy()
    for j in range(k):
        a = (1 - 1 / (n + j + 2)) * tent(a)
        b = tent(b)
    return np.max(np.abs(a - b))


def test_power_convergence_constant():
    seq = UniformLimit(I, ConstantRule(Tent()), Tent())
    assert verify_power_convergence(seq, 2, 0.01).N == 1


def test_power_convergence_k1_eps_half(scaled_tent):
    assert verify_power_convergence(scaled_tent, 1, 0.5).N == 1


@pytest.mark.parametrize("k, eps", [(1, 0.05), (2, 0.1)])
def test_power_convergence_matches_direct_sup(scaled_tent, k, eps):
    res = verify_power_convergence(scaled_tent, k, eps)
    grid = np.linspace(0, 1, 10_000)
    span = res.probe_span
    errs = [_sup_error(n, k, grid) for n in range(1, res.N + span + 1)]
    assert max(errs[res.N - 1:]) < eps
    # no earlier N passes the same test
    assert all(max(errs[m - 1:m + span]) >= eps for m in range(1, res.N))
    assert res.sup_errors == pytest.approx(errs, abs=1e-12)


def test_power_convergence_cap():
    seq = UniformLimit(I, ScaledRule(Tent(), 1.0, 2.0), Tent())
    with pytest.raises(ConvergenceNotObserved):
        verify_power_convergence(seq, 1, 1e-3, N_cap=10)
