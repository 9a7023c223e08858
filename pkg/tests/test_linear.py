import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nads.errors import PreconditionError
from nads.linear import (
    ConstructionConfig, LinearSystemSpec, lemma_zero_witness, synchronous_from_transitivity,
    collective_from_transitivity, validate_linear_system,
)
from nads.maps import LinearOperator, Square, WeightedShift, linear_operator
from nads.orbits import orbit_batch
from nads.sequences import FinitelyGenerated, Schedule, constant_sequence, identity_sequence
from nads.spaces import StateSpace

V = StateSpace.vector_space(8)
E = np.eye(8)


@pytest.fixture(scope="module")
def spec(shift8):
    return LinearSystemSpec(shift8)


def zero_spec():
    return LinearSystemSpec(constant_sequence(V, linear_operator(np.zeros((8, 8)))))


def test_validation(spec):
    assert validate_linear_system(spec).passed
    assert validate_linear_system(zero_spec()).passed


def test_square_fails_linearity_at_ones():
    seq = FinitelyGenerated(V, (WeightedShift(8, scale=2.0), Square()), Schedule.periodic([0, 1]))
    res = validate_linear_system(LinearSystemSpec(seq))
    assert not res.passed
    v = res.violations[0]
    assert v["kind"] == "linearity" and v["map"] == "square"
    assert (v["a"], v["b"]) == (1.0, 1.0) and v["x"] == [1.0] * 8


def test_scalar_space_rejected(doubling):
    with pytest.raises(PreconditionError):
        LinearSystemSpec(doubling)


def test_lemma_on_scaled_shift(spec):
    zw = lemma_zero_witness(spec, 1e-2, 0.5, 32)
    assert zw is not None and zw.replay(spec) and zw.k <= 8
    # oracle: ||(2B)^k z|| = 2^k ||z|| while the support has not been absorbed
    s = 0.999e-2
    k_star = next(k for k in range(1, 8) if 2 * s * 2**k > 0.5)
    assert zw.k == k_star


def test_lemma_null_cases():
    ident = LinearSystemSpec(identity_sequence(V))
    assert lemma_zero_witness(ident, 1e-2, 2.1e-2, 64) is None
    assert lemma_zero_witness(zero_spec(), 1e-2, 1e-9, 64) is None


@settings(max_examples=25, deadline=None)
@given(c=st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3), seed=st.integers(0, 2**31), k=st.integers(1, 7))
def test_separation_scales_linearly(spec, c, seed, k):
    z = np.random.default_rng(seed).uniform(-1, 1, 8)
    pts, _ = orbit_batch(spec.sequence, np.stack([z, c * z, np.zeros(8)]), k)
    d1 = V.distance(pts[0, k], pts[2, k])
    dc = V.distance(pts[1, k], pts[2, k])
    assert dc == pytest.approx(abs(c) * d1, rel=1e-12, abs=1e-300)


def _check_result(spec, res, xs, mode):
    assert res.verdict == "witness-constructed"
    assert res.revalidate(spec)
    zw, w = res.zero_witness, res.witness
    n1 = V.norm_of(zw.z1)
    for x, y in zip(w.xs, w.ys):
        # translation identity holds for whichever branch was chosen
        assert abs(V.distance(x, y) - n1) <= 1e-12
    branch = [t for t in res.trace if t.check.startswith("max(")]
    assert len(branch) == len(xs) and all(t.holds for t in branch)
    assert w.replay(spec.sequence)
    assert w.delta == zw.eta / 2 and w.mode == mode


def test_collective_construction(spec):
    xs = [0.5 * E[0], 0.5 * E[1]]
    res = collective_from_transitivity(spec, xs, 1e-2)
    _check_result(spec, res, xs, "y-against-x_i0")
    assert res.witness.i0 == 0


def test_synchronous_construction(spec):
    xs = [0.5 * E[0], 0.5 * E[1], 0.5 * E[2]]
    res = synchronous_from_transitivity(spec, xs, 1e-2)
    _check_result(spec, res, xs, "synchronous")
    for sw in res.witness.as_sensitivity_witnesses():
        assert sw.separation > sw.delta


@pytest.mark.parametrize("fn", [collective_from_transitivity, synchronous_from_transitivity])
def test_singleton_is_plain_witness(spec, fn):
    res = fn(spec, [0.3 * E[4]], 1e-2)
    w = res.witness
    assert res.verdict == "witness-constructed"
    assert V.distance(w.xs[0], w.ys[0]) < 1e-2 and w.separations[0] > 0.25


@pytest.mark.parametrize("fn", [collective_from_transitivity, synchronous_from_transitivity])
def test_identity_unmet(fn):
    res = fn(LinearSystemSpec(identity_sequence(V)), [0.5 * E[0], 0.5 * E[1]], 1e-2)
    assert res.verdict == "hypothesis-unmet" and res.unmet == ["zero-witness"]


def test_noncommuting_sequence_unmet():
    A = linear_operator(np.diag(np.arange(1.0, 9.0)))
    B = WeightedShift(8, scale=2.0)
    seq = FinitelyGenerated(V, (A, B), Schedule.periodic([0, 1]))
    res = collective_from_transitivity(LinearSystemSpec(seq), [0.5 * E[0], 0.5 * E[7]], 1e-2)
    assert res.verdict == "hypothesis-unmet" and "commutativity" in res.unmet


def test_construction_is_deterministic(spec):
    xs = [0.5 * E[0], 0.5 * E[1]]
    cfg = ConstructionConfig(rng_seed=5)
    a = collective_from_transitivity(spec, xs, 1e-2, cfg).to_json()
    b = collective_from_transitivity(spec, xs, 1e-2, cfg).to_json()
    assert a == b
