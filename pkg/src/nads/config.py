"""Run configuration and system-spec loading."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from jsonschema import Draft202012Validator

from .errors import ConfigError
from .sequences import sequence_from_json
from .spaces import StateSpace

SCHEMA_VERSION = 1
ANALYSES = (
    "orbit", "periodic", "sensitivity", "collective", "synchronous", "iterate-check",
    "transitivity", "banks", "devaney", "linear-collective", "linear-synchronous",
)
BUNDLED_PREFIX = "bundled:"

_SENSITIVITY = {"horizon": 64, "budget": 64, "n_base_points": 32, "eps_ladder": [1e-2, 1e-3, 1e-4]}
_BANKS = {
    "resolution": 1 / 16, "horizon": 64, "samples_per_ball": 16, "density_resolution": 1 / 64,
    "density_threshold": 0.95, "N_max": 10, "Q_max": 128, "n_base_points": 32,
    "eps_ladder": [1e-2, 1e-3, 1e-4], "sensitivity_horizon": 64, "budget": 64,
}
DEFAULTS = {
    "orbit": {"horizon": 64},
    "periodic": {"N_max": 10, "tolerance": 1e-9},
    "sensitivity": dict(_SENSITIVITY),
    "collective": dict(_SENSITIVITY),
    "synchronous": dict(_SENSITIVITY),
    "iterate-check": dict(_SENSITIVITY, k_list=[2, 3, 4], mode="plain"),
    "transitivity": {"resolution": 1 / 16, "horizon": 64, "samples_per_ball": 16},
    "banks": dict(_BANKS),
    "devaney": dict(_BANKS),
    "linear-collective": {"eps": 1e-2, "eta": 0.5, "horizon": 32, "budget": 64},
    "linear-synchronous": {"eps": 1e-2, "eta": 0.5, "horizon": 32, "budget": 64},
}
REQUIRED = {
    "orbit": ("x",),
    "periodic": ("points",),
    "linear-collective": ("xs",),
    "linear-synchronous": ("xs",),
}


def _schema(name):
    text = resources.files("nads").joinpath("schemas", name).read_text()
    return json.loads(text)


def _field(error):
    parts = [str(p) for p in error.absolute_path]
    out = ""
    for p in parts:
        out += f"[{p}]" if p.isdigit() else (f".{p}" if out else p)
    return out or None


def _message(error):
    if error.validator == "required":
        missing = [r for r in error.validator_value if r not in (error.instance or {})]
        return f"{missing[0]} required" if missing else error.message
    if error.validator == "exclusiveMinimum":
        return f"must be greater than {error.validator_value} (got {error.instance!r})"
    if error.validator == "additionalProperties":
        return error.message
    return error.message


def validate(instance, schema_name):
    """Raise :class:`ConfigError` for the first schema violation, naming the field."""
    validator = Draft202012Validator(_schema(schema_name))
    errors = sorted(validator.iter_errors(instance), key=lambda e: (list(map(str, e.absolute_path)), e.validator))
    if errors:
        e = errors[0]
        if e.validator == "required":
            raise ConfigError(_message(e))
        raise ConfigError(_message(e), _field(e))


@dataclass(frozen=True)
class SystemSpec:
    ref: str
    data: dict
    space: StateSpace
    sequence: object

    @property
    def name(self):
        return self.data.get("name", self.ref)


def bundled_systems():
    root = resources.files("nads").joinpath("systems")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _read_json(path, what):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path} is not valid JSON: {exc.msg} at line {exc.lineno}") from exc


def load_system(ref, base_dir=None):
    """Load a system spec from ``bundled:<name>`` or a path (relative to ``base_dir``)."""
    if ref.startswith(BUNDLED_PREFIX):
        name = ref[len(BUNDLED_PREFIX):]
        if name not in bundled_systems():
            raise ConfigError(f"unknown bundled system {name!r}; have {', '.join(bundled_systems())}", "system")
        data = json.loads(resources.files("nads").joinpath("systems", f"{name}.json").read_text())
    else:
        path = Path(ref)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        data = _read_json(path, "system spec")
    return system_from_json(data, ref)


def system_from_json(data, ref="<inline>"):
    validate(data, "system.schema.json")
    space = StateSpace.from_json(data["space"])
    seq = sequence_from_json(data["sequence"], space)
    return SystemSpec(ref, data, space, seq)


@dataclass
class RunConfig:
    system: str
    analysis: str
    rng_seed: int
    parameters: dict
    defaults: list = field(default_factory=list)
    output: dict = field(default_factory=dict)
    base_dir: str | None = None

    def load_system(self):
        return load_system(self.system, self.base_dir)

    def echo(self):
        return {
            "system": self.system,
            "analysis": self.analysis,
            "rng_seed": self.rng_seed,
            "parameters": self.parameters,
            "defaults": list(self.defaults),
        }


def _check_finite(value, where):
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError("must be finite", where)
    if isinstance(value, list):
        for i, v in enumerate(value):
            _check_finite(v, f"{where}[{i}]")


def build_config(data, analysis=None, seed=None, base_dir=None):
    """Validate a parsed config and fill defaults (recorded in ``defaults``)."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    if seed is not None:
        data["rng_seed"] = seed
    validate(data, "config.schema.json")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {data['schema_version']}", "schema_version")
    chosen = analysis or data.get("analysis")
    if chosen is None:
        raise ConfigError("analysis required")
    if chosen not in ANALYSES:
        raise ConfigError(f"unknown analysis {chosen!r}", "analysis")
    if data.get("analysis") not in (None, chosen):
        raise ConfigError(f"config names {data['analysis']!r} but {chosen!r} was requested", "analysis")
    params = dict(data.get("parameters", {}))
    for key, value in params.items():
        _check_finite(value, f"parameters.{key}")
    for key in REQUIRED.get(chosen, ()):
        if key not in params:
            raise ConfigError(f"{key} required for {chosen}", f"parameters.{key}")
    ladder = params.get("eps_ladder")
    if ladder and any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ConfigError("must be strictly decreasing", "parameters.eps_ladder")
    defaults = []
    for key, value in DEFAULTS[chosen].items():
        if key not in params:
            params[key] = value
            defaults.append(key)
    return RunConfig(
        data["system"], chosen, int(data["rng_seed"]), params, sorted(defaults),
        dict(data.get("output", {})), None if base_dir is None else str(base_dir),
    )


def load_config(path, analysis=None, seed=None):
    """Read, validate and default a run configuration file."""
    path = Path(path)
    data = _read_json(path, "config")
    return build_config(data, analysis, seed, path.parent)
