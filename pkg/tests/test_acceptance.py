"""Acceptance criteria, one test each. Run with ``pytest -m acceptance -s`` to see the status lines."""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from nads.config import bundled_systems, load_config
from nads.linear import LinearSystemSpec, collective_from_transitivity, lemma_zero_witness, synchronous_from_transitivity
from nads.orbits import apply_window, trajectory
from nads.periodic import detect_periodic_point, is_invariant_periodic_point, is_invariant_set
from nads.pipelines import dumps, run
from nads.sensitivity import (
    IterateCheckConfig, default_base_points, equicontinuity_window_modulus, estimate_collective_constant,
    estimate_sensitivity_constant, verify_iterate_preservation, verify_power_convergence,
)
from nads.spaces import TAU_COMPOSE
from nads.transitivity import BanksConfig, banks_certify

from .conftest import sample_start

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def verdict(number, ok, seconds, limit, detail=""):
    ok = bool(ok) and seconds < limit
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail} ({seconds:.2f}s, limit {limit}s)")
    return ok


def test_1_worked_example(systems):
    t0 = time.perf_counter()
    f, g = systems["f-system"].sequence, systems["g-system"].sequence
    checks = {}
    checks["trajectory"] = trajectory(f, 1.0, 4).points == (1.0, 2.0, 1.0, 2.0, 1.0)
    rep = detect_periodic_point(f, 1.0, 10, 10)
    checks["period"] = rep is not None and rep.period == 2
    inv = is_invariant_set(f, [1.0, 2.0])
    v = inv.violation
    checks["not-invariant"] = (not inv) and (v.map_index, v.point, v.image) == (1, 2.0, 3.0)
    ok_g, rep_g = is_invariant_periodic_point(g, -1.0)
    checks["g-invariant"] = ok_g and sorted(rep_g.orbit_points) == [-1.0, 1.0]
    dt = time.perf_counter() - t0
    assert verdict(1, all(checks.values()), dt, 1, f"worked example {checks}")


def test_2_composition_law(systems):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    names = bundled_systems()
    worst, n = 0.0, 10_000
    for t in range(n):
        system = systems[names[t % len(names)]]
        seq, space = system.sequence, system.space
        i, m, k = int(rng.integers(1, 30)), int(rng.integers(0, 9)), int(rng.integers(0, 9))
        x = sample_start(space, rng)
        direct = apply_window(seq, i, m + k, x)
        split = apply_window(seq, i + m, k, apply_window(seq, i, m, x))
        worst = max(worst, float(space.distance(direct, split)))
    dt = time.perf_counter() - t0
    assert verdict(2, worst <= TAU_COMPOSE, dt, 10, f"{n} composition instances, worst gap {worst:.3g}")


def test_3_iterate_preservation(doubling):
    t0 = time.perf_counter()
    ks = list(range(2, 9))
    cfg = IterateCheckConfig(base_points=default_base_points(doubling.space, 32))
    lines, ok = [], True
    for mode in ("plain", "collective"):
        rep = verify_iterate_preservation(doubling, ks, mode, cfg)
        delta = rep.base_report.delta_estimate
        for e in rep.entries:
            # predicted bound recomputed from the window modulus
            modulus = equicontinuity_window_modulus(doubling, delta, e.k + 2)
            good = e.witnesses_found and e.measured_delta >= modulus and e.measured_delta >= delta / 2 ** (e.k + 2)
            ok &= good
            lines.append(f"{mode} k={e.k} measured={e.measured_delta:.6g} predicted={modulus:.6g}")
        ok &= rep.all_preserved
    dt = time.perf_counter() - t0
    print("\n  " + "\n  ".join(lines))
    assert verdict(3, ok, dt, 60, "doubling iterates k=2..8, plain and collective")


def test_4_banks(doubling):
    t0 = time.perf_counter()
    cert = banks_certify(doubling, BanksConfig(candidates=[0.0, 1 / 3]))
    checks = {
        "verdict": cert.verdict == "certified-at-desk-scale",
        "delta": cert.delta is not None and abs(cert.delta - 1 / 9) <= 1e-12,
        "eta": cert.eta is not None and abs(cert.eta - 1 / 72) <= 1e-12,
        "transitivity": cert.transitivity_evidence.hit_fraction == 1.0,
        "density": cert.density_evidence.coverage >= 0.95,
        "eta-coverage": cert.eta_coverage == 1.0 and cert.sensitivity_confirmation.base_points_tested == 32,
    }
    dt = time.perf_counter() - t0
    assert verdict(4, all(checks.values()), dt, 120, f"delta={cert.delta!r} eta={cert.eta!r} {checks}")


def _null_base_points(name, space):
    if name == "f-system":
        # orbits alternate x, x + 1; keep both inside the window
        return list(np.linspace(-3.5, 2.5, 16))
    return default_base_points(space, 16)


@pytest.mark.parametrize("name", ["f-system", "identity"])
def test_5_isometry_nulls(systems, name):
    t0 = time.perf_counter()
    system = systems[name]
    seq, space = system.sequence, system.space
    pts = _null_base_points(name, space)
    families = [pts[j:j + 2] for j in range(0, len(pts) - 1, 2)]
    eps = [1e-2, 1e-3, 1e-4]
    reps = {"sensitivity": estimate_sensitivity_constant(seq, pts, eps, horizon=1000)}
    for mode in ("collective", "synchronous"):
        reps[mode] = estimate_collective_constant(seq, families, eps, 1000, mode=mode)
    found = {k: len(r.witnesses) for k, r in reps.items()}
    checks = {k: r.verdict == "no-witness-found" and not r.witnesses and not getattr(r, "escape_events", 0) for k, r in reps.items()}
    cert = banks_certify(seq, BanksConfig())
    checks["banks"] = cert.verdict == "hypothesis-unmet"
    dt = time.perf_counter() - t0
    assert verdict(5, all(checks.values()), dt, 30, f"{name} witnesses={found} banks={cert.verdict} {cert.unmet}")


def test_6_linear_lab(shift8):
    t0 = time.perf_counter()
    spec = LinearSystemSpec(shift8)
    space = shift8.space
    zw = lemma_zero_witness(spec, 1e-2, 0.5)
    checks = {"lemma": zw is not None and zw.k <= 8 and zw.replay(spec)}
    xs = [0.5 * e for e in np.eye(8)[:3]]
    for fn in (collective_from_transitivity, synchronous_from_transitivity):
        res = fn(spec, xs, 1e-2)
        w, z = res.witness, res.zero_witness
        good = res.verdict == "witness-constructed" and res.revalidate(spec) and w.replay(shift8)
        d0 = space.norm_of(z.z1)
        good &= all(abs(space.distance(x, y) - d0) <= 1e-12 for x, y in zip(w.xs, w.ys))
        branch = [t for t in res.trace if t.check.startswith("max(")]
        good &= len(branch) == len(xs) and all(t.holds for t in branch)
        checks[fn.__name__] = bool(good)
    dt = time.perf_counter() - t0
    assert verdict(6, all(checks.values()), dt, 10, f"lemma k={zw.k if zw else None} {checks}")


def test_7_power_convergence(scaled_tent):
    t0 = time.perf_counter()
    grid = np.linspace(0.0, 1.0, 10_000)
    rows, ok = [], True
    for k in (1, 2, 3):
        n_fine = verify_power_convergence(scaled_tent, k, 0.05, grid).N
        n_coarse = verify_power_convergence(scaled_tent, k, 0.1, grid).N
        ok &= np.isfinite(n_fine) and n_coarse <= n_fine
        rows.append(f"k={k}: N(0.05)={n_fine} N(0.1)={n_coarse}")
    dt = time.perf_counter() - t0
    assert verdict(7, ok, dt, 30, "; ".join(rows))


def _strip(report):
    report = dict(report)
    report.pop("timing")
    return dumps(report)


def test_8_determinism(systems, doubling, shift8):
    t0 = time.perf_counter()
    paths = sorted(CONFIGS.glob("*.json"))
    diffs = [p.stem for p in paths if _strip(run(load_config(p)).report) != _strip(run(load_config(p)).report)]

    def api_runs():
        f = systems["f-system"].sequence
        return json.dumps([
            estimate_sensitivity_constant(doubling, default_base_points(doubling.space, 8), [1e-2]).to_json(),
            estimate_collective_constant(f, [[0.5, 1.5]], [1e-2], 1000, mode="synchronous").to_json(),
            banks_certify(doubling, BanksConfig(candidates=[0.0, 1 / 3])).to_json(),
            collective_from_transitivity(LinearSystemSpec(shift8), [0.5 * np.eye(8)[0]], 1e-2).to_json(),
        ], default=str, sort_keys=True)

    same_api = api_runs() == api_runs()
    dt = time.perf_counter() - t0
    assert verdict(8, not diffs and same_api, dt, 120, f"{len(paths)} configs rerun, differing: {diffs or 'none'}")
