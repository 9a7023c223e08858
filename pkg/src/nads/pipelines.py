"""Dispatch from a :class:`RunConfig` to the analysis pipelines."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import DomainEscape, NadsError
from .linear import ConstructionConfig, LinearSystemSpec, collective_from_transitivity, synchronous_from_transitivity
from .orbits import orbit_batch
from .periodic import dense_periodic_estimate, is_invariant_periodic_point
from .sensitivity import (
    SYNCHRONOUS,
    IterateCheckConfig,
    default_base_points,
    estimate_collective_constant,
    estimate_sensitivity_constant,
    verify_iterate_preservation,
)
from .transitivity import BanksConfig, banks_certify, check_transitivity, devaney_report

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_ABSENT = 0, 1, 2


@dataclass
class Outcome:
    verdict: str
    exit_code: int
    result: dict | None
    constants: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)  # file name -> CSV text


@dataclass
class RunResult:
    report: dict
    exit_code: int
    artifacts: dict

    def report_text(self):
        return dumps(self.report)


def clean(obj):
    """JSON-safe copy: numpy scalars and arrays become Python values, non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def dumps(report):
    return json.dumps(clean(report), sort_keys=True, indent=2) + "\n"


def _num(v):
    return f"{float(v):.17g}"


def _cell(p):
    if isinstance(p, (list, tuple, np.ndarray)):
        return ";".join(_num(v) for v in np.asarray(p).reshape(-1))
    return _num(p)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def witness_csv(witnesses):
    """One row per (x, y) pair; multi-point witnesses contribute a row per index."""
    rows = []
    for w in witnesses:
        if hasattr(w, "xs"):
            for x, y, s in zip(w.xs, w.ys, w.separations):
                rows.append([_cell(x), _cell(y), w.k, _num(s)])
        else:
            rows.append([_cell(w.x), _cell(w.y), w.n, _num(w.separation)])
    return _csv(["x", "y", "n", "separation"], rows)


def _points(space, values):
    return [space.as_point(v) for v in values]


def _base_points(space, p):
    if "base_points" in p:
        return _points(space, p["base_points"])
    return default_base_points(space, p["n_base_points"])


def _families(space, p):
    if "families" in p:
        return [_points(space, f) for f in p["families"]]
    return IterateCheckConfig(base_points=_base_points(space, p)).resolved(space)[1]


def _run_orbit(system, p, seed):
    space, seq = system.space, system.sequence
    x = space.as_point(p["x"])
    pts, esc = orbit_batch(seq, [x], p["horizon"])
    if esc[0] >= 0:
        raise DomainEscape(int(esc[0]), float(pts[0, esc[0]]), space.escape_window)
    orbit = pts[0]
    header = ["n", "x"] if space.is_scalar else ["n"] + [f"x{i}" for i in range(space.dimension)]
    rows = [[n, _num(v)] if space.is_scalar else [n] + [_num(c) for c in v] for n, v in enumerate(orbit)]
    return Outcome("computed", EXIT_OK, {"x": x, "horizon": p["horizon"], "points": orbit},
                   artifacts={"orbit.csv": _csv(header, rows)})


def _run_periodic(system, p, seed):
    seq = system.sequence
    k_max = p.get("k_max", p["N_max"])
    entries = []
    for x in _points(system.space, p["points"]):
        try:
            ok, rep = is_invariant_periodic_point(seq, x, p["N_max"], k_max, p["tolerance"], p.get("horizon"))
        except DomainEscape as exc:
            entries.append({"point": x, "status": "escaped", "error": str(exc)})
            continue
        if rep is None:
            entries.append({"point": x, "status": "not-periodic"})
        else:
            entries.append(dict(rep.to_json(), status="invariant-periodic" if ok else "periodic"))
    result = {"points": entries}
    if "density_resolution" in p:
        result["density"] = dense_periodic_estimate(
            seq, p["density_resolution"], p["N_max"], k_max, p.get("Q_max", 128), p["tolerance"]
        ).to_json()
    found = any(e["status"] in ("periodic", "invariant-periodic") for e in entries)
    return Outcome("periodic-points-found" if found else "no-periodic-point", EXIT_OK if found else EXIT_ABSENT, result)


def _sensitivity_outcome(rep):
    ok = rep.verdict == "evidence-sensitive"
    return Outcome(
        rep.verdict, EXIT_OK if ok else EXIT_ABSENT, rep.to_json(),
        constants={"delta": rep.delta_estimate},
        witnesses=[w.to_json() for w in rep.witnesses],
        artifacts={"witnesses.csv": witness_csv(rep.witnesses)},
    )


def _run_sensitivity(system, p, seed):
    rep = estimate_sensitivity_constant(
        system.sequence, _base_points(system.space, p), p["eps_ladder"], p["horizon"], p["budget"], seed,
        p.get("delta_ladder"),
    )
    return _sensitivity_outcome(rep)


def _collective(mode):
    def run(system, p, seed):
        rep = estimate_collective_constant(
            system.sequence, _families(system.space, p), p["eps_ladder"], p["horizon"], p["budget"], seed,
            mode, p.get("delta_ladder"),
        )
        return _sensitivity_outcome(rep)

    return run


def _run_iterate(system, p, seed):
    space = system.space
    cfg = IterateCheckConfig(
        base_points=_base_points(space, p),
        families=_families(space, p) if p["mode"] != "plain" else None,
        eps_ladder=tuple(p["eps_ladder"]), horizon=p["horizon"], budget=p["budget"], rng_seed=seed,
        delta_ladder=p.get("delta_ladder"),
    )
    rep = verify_iterate_preservation(system.sequence, p["k_list"], p["mode"], cfg)
    if not rep.hypothesis_met:
        verdict = "hypothesis-unmet"
    else:
        verdict = "preserved" if rep.all_preserved else "not-preserved"
    constants = {"delta": rep.base_report.delta_estimate}
    constants["eps_delta"] = {str(e.k): e.predicted_eps_delta for e in rep.entries}
    return Outcome(verdict, EXIT_OK if rep.all_preserved else EXIT_ABSENT, rep.to_json(), constants)


def _run_transitivity(system, p, seed):
    rep = check_transitivity(system.sequence, p["resolution"], p["horizon"], p["samples_per_ball"], seed)
    ok = rep.complete
    return Outcome(
        "transitive-at-resolution" if ok else "transitivity-incomplete", EXIT_OK if ok else EXIT_ABSENT,
        rep.to_json(), artifacts={"pair_matrix.csv": rep.to_csv()},
    )


def _banks_config(system, p, seed):
    space = system.space
    keys = (
        "resolution", "horizon", "samples_per_ball", "density_resolution", "density_threshold", "N_max",
        "Q_max", "n_base_points", "sensitivity_horizon", "budget",
    )
    cfg = BanksConfig(**{k: p[k] for k in keys}, eps_ladder=tuple(p["eps_ladder"]), rng_seed=seed)
    if "candidates" in p:
        cfg.candidates = _points(space, p["candidates"])
    if "base_points" in p:
        cfg.base_points = _points(space, p["base_points"])
    return cfg


def _run_banks(system, p, seed):
    cert = banks_certify(system.sequence, _banks_config(system, p, seed))
    witnesses = cert.sensitivity_confirmation.witnesses if cert.sensitivity_confirmation else []
    artifacts = {"pair_matrix.csv": cert.transitivity_evidence.to_csv()}
    if witnesses:
        artifacts["witnesses.csv"] = witness_csv(witnesses)
    return Outcome(
        cert.verdict, EXIT_OK if cert.verdict == "certified-at-desk-scale" else EXIT_ABSENT, cert.to_json(),
        constants={"delta": cert.delta, "eta": cert.eta},
        witnesses=[w.to_json() for w in witnesses], artifacts=artifacts,
    )


def _run_devaney(system, p, seed):
    rep = devaney_report(system.sequence, _banks_config(system, p, seed))
    return Outcome(
        "all-flags-positive" if rep.all_positive else "evidence-incomplete",
        EXIT_OK if rep.all_positive else EXIT_ABSENT, rep.to_json(),
        constants={"delta": rep.sensitivity_evidence.delta_estimate},
        artifacts={"pair_matrix.csv": rep.transitivity_evidence.to_csv()},
    )


def _linear(fn):
    def run(system, p, seed):
        spec = LinearSystemSpec(system.sequence)
        cfg = ConstructionConfig(eta=p["eta"], horizon=p["horizon"], budget=p["budget"], rng_seed=seed)
        res = fn(spec, _points(system.space, p["xs"]), p["eps"], cfg)
        ok = res.verdict == "witness-constructed"
        witnesses = [res.witness] if res.witness is not None else []
        return Outcome(
            res.verdict, EXIT_OK if ok else EXIT_ABSENT, res.to_json(),
            constants={"eta": p["eta"], "constant": res.constant},
            witnesses=[w.to_json() for w in witnesses],
            artifacts={"witnesses.csv": witness_csv(witnesses)} if witnesses else {},
        )

    return run


PIPELINES = {
    "orbit": _run_orbit,
    "periodic": _run_periodic,
    "sensitivity": _run_sensitivity,
    "collective": _collective("collective"),
    "synchronous": _collective(SYNCHRONOUS),
    "iterate-check": _run_iterate,
    "transitivity": _run_transitivity,
    "banks": _run_banks,
    "devaney": _run_devaney,
    "linear-collective": _linear(collective_from_transitivity),
    "linear-synchronous": _linear(synchronous_from_transitivity),
}


def build_report(config, outcome, seconds, system_data=None, error=None):
    echo = config.echo()
    echo["system_spec"] = system_data
    return clean({
        "schema_version": SCHEMA_VERSION,
        "tool": "nads",
        "version": __version__,
        "analysis": config.analysis,
        "config": echo,
        "verdict": outcome.verdict if outcome else "error",
        "exit_code": outcome.exit_code if outcome else EXIT_ERROR,
        "constants": outcome.constants if outcome else {},
        "result": outcome.result if outcome else None,
        "witnesses": outcome.witnesses if outcome else [],
        "error": error,
        "timing": {"seconds": seconds},
    })


def run(config):
    """Run the configured analysis; operational errors become exit code 1 with a report."""
    t0 = time.perf_counter()
    system_data = None
    try:
        system = config.load_system()
        system_data = system.data
        outcome = PIPELINES[config.analysis](system, config.parameters, config.rng_seed)
    except (NadsError, ValueError) as exc:
        report = build_report(config, None, time.perf_counter() - t0, system_data, f"{type(exc).__name__}: {exc}")
        return RunResult(report, EXIT_ERROR, {})
    report = build_report(config, outcome, time.perf_counter() - t0, system_data)
    return RunResult(report, outcome.exit_code, outcome.artifacts)
