"""Run configuration: one JSON document covering priors, discretization,
geometry thresholds, slice policy, candidate generation, and export options.

Angles live in the file as degrees (fields suffixed ``_deg``); parsing
converts them to the radian fields the rest of the package uses.  Every key
is optional and falls back to the module default, but present keys are
validated strictly against :data:`CONFIG_SCHEMA` — unknown keys are errors,
not typos to silently ignore.  :func:`serialize_config` emits a canonical
form (sorted keys, two-space indent, trailing newline) and is a fixpoint:
serializing what it parsed reproduces a canonicalized file byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from .discretize import (
    Channel,
    Discretization,
    DiscretizationError,
    IntentionPriors,
    TruncNorm,
)
from .geometry import GeometryParams
from .runtime import SlicePolicy
from .trajgen import LosParams

__all__ = [
    "CONFIG_SCHEMA",
    "ConfigError",
    "EXPORT_FORMATS",
    "RunConfig",
    "default_config",
    "load_config",
    "parse_config",
    "save_config",
    "serialize_config",
]

EXPORT_FORMATS = ("csv", "jsonl")

_THRESHOLD_PRIORS = (
    "safe_cpa",
    "safe_front_cross",
    "safe_midpoint",
    "ample_time",
    "safe_ground_side",
    "safe_ground_front",
)
_BERNOULLI_PRIORS = ("colregs_compliant", "good_seamanship", "ground_intent", "unmodeled")
_CHANNELS = ("cpa", "front_cross", "midpoint", "time_to_cpa", "ground_side", "ground_front")

#: geometry fields stored in radians internally but degrees in the file
_GEOMETRY_ANGLES = (
    "front_half_angle",
    "head_on_half_angle",
    "stern_half_angle",
    "wp_ahead_half_angle",
    "wp_bearing_deadband",
    "course_change_threshold",
)
_GEOMETRY_PLAIN = (
    "wp_window",
    "wp_distance_deadband",
    "course_changing_window",
    "speed_change_threshold",
)


class ConfigError(ValueError):
    """A configuration document that doesn't satisfy the published schema."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a replay or scoring run needs beyond the input data."""

    priors: IntentionPriors = IntentionPriors()
    discretization: Discretization = Discretization()
    geometry: GeometryParams = GeometryParams()
    slice_policy: SlicePolicy = SlicePolicy()
    trajectories: LosParams = LosParams()
    lookahead: float = 60.0
    ground_threshold: float = 2000.0
    map_densify_spacing: float | None = None
    export_format: str = "csv"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lookahead) and self.lookahead >= 0.0):
            raise ConfigError(f"lookahead must be finite and >= 0, got {self.lookahead}")
        if not (math.isfinite(self.ground_threshold) and self.ground_threshold > 0.0):
            raise ConfigError(
                f"ground_threshold must be finite and > 0, got {self.ground_threshold}"
            )
        if self.map_densify_spacing is not None and not self.map_densify_spacing > 0.0:
            raise ConfigError(
                f"map_densify_spacing must be positive or null, "
                f"got {self.map_densify_spacing}"
            )
        if self.export_format not in EXPORT_FORMATS:
            raise ConfigError(
                f"export_format must be one of {EXPORT_FORMATS}, "
                f"got {self.export_format!r}"
            )


def default_config() -> RunConfig:
    return RunConfig()


# --------------------------------------------------------------------------
# Published schema (draft-2020 JSON Schema subset; validated by _check below)


def _num(minimum: float | None = None, exclusive: bool = False, maximum: float | None = None) -> dict:
    out: dict[str, Any] = {"type": "number"}
    if minimum is not None:
        out["exclusiveMinimum" if exclusive else "minimum"] = minimum
    if maximum is not None:
        out["maximum"] = maximum
    return out


def _obj(properties: dict, required: tuple[str, ...] = ()) -> dict:
    out: dict[str, Any] = {
        "type": "object",
        "additionalProperties": False,
        "properties": properties,
    }
    if required:
        out["required"] = list(required)
    return out


_TRUNCNORM_SCHEMA = _obj(
    {
        "mu": _num(),
        "sigma": _num(0.0, exclusive=True),
        "lo": _num(),
        "hi": _num(),
    },
    required=("mu", "sigma", "lo", "hi"),
)

_PROBABILITY = _num(0.0, maximum=1.0)

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "shipintent run configuration",
    **_obj(
        {
            "priors": _obj(
                {
                    **{name: _TRUNCNORM_SCHEMA for name in _THRESHOLD_PRIORS},
                    **{name: _PROBABILITY for name in _BERNOULLI_PRIORS},
                    "priority": {
                        "type": "array",
                        "items": _PROBABILITY,
                        "minItems": 3,
                        "maxItems": 3,
                    },
                    "situation_concentration": _num(0.0, exclusive=True, maximum=1.0),
                }
            ),
            "discretization": _obj(
                {
                    name: _obj(
                        {
                            "upper": _num(0.0, exclusive=True),
                            "bins": {"type": "integer", "minimum": 2},
                        },
                        required=("upper", "bins"),
                    )
                    for name in _CHANNELS
                }
            ),
            "geometry": _obj(
                {
                    **{f"{name}_deg": _num(0.0, maximum=180.0) for name in _GEOMETRY_ANGLES},
                    "wp_window": _num(0.0, exclusive=True),
                    "wp_distance_deadband": _num(0.0),
                    "course_changing_window": _num(0.0, exclusive=True),
                    "speed_change_threshold": _num(0.0, exclusive=True),
                }
            ),
            "slice_policy": _obj(
                {
                    "max_age": _num(0.0, exclusive=True),
                    "min_age": _num(0.0),
                    "course_delta_deg": _num(0.0, exclusive=True, maximum=180.0),
                    "speed_delta": _num(0.0, exclusive=True),
                }
            ),
            "trajectories": _obj(
                {
                    "offsets_deg": {
                        "type": "array",
                        "items": _num(-180.0, maximum=180.0),
                        "minItems": 1,
                    },
                    "turn_rate_deg": _num(0.0, exclusive=True),
                    "horizon": _num(0.0, exclusive=True),
                    "dt": _num(0.0, exclusive=True),
                    "pursuit_lookahead": _num(0.0, exclusive=True),
                }
            ),
            "lookahead": _num(0.0),
            "ground_threshold": _num(0.0, exclusive=True),
            "map_densify_spacing": {"type": ["number", "null"], "exclusiveMinimum": 0.0},
            "export_format": {"type": "string", "enum": list(EXPORT_FORMATS)},
        }
    ),
}


def _check(value: Any, schema: dict, path: str) -> None:
    """Validate ``value`` against the JSON-Schema subset used above."""
    types = schema.get("type")
    if types is not None:
        allowed = (types,) if isinstance(types, str) else tuple(types)
        ok = False
        for t in allowed:
            if t == "object":
                ok |= isinstance(value, dict)
            elif t == "array":
                ok |= isinstance(value, list)
            elif t == "string":
                ok |= isinstance(value, str)
            elif t == "number":
                ok |= isinstance(value, (int, float)) and not isinstance(value, bool)
            elif t == "integer":
                ok |= isinstance(value, int) and not isinstance(value, bool)
            elif t == "null":
                ok |= value is None
        if not ok:
            raise ConfigError(f"{path}: expected {' or '.join(allowed)}")
    if value is None:
        return
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if not math.isfinite(value):
            raise ConfigError(f"{path}: must be finite")
        if "minimum" in schema and value < schema["minimum"]:
            raise ConfigError(f"{path}: must be >= {schema['minimum']}")
        if "exclusiveMinimum" in schema and value <= schema["exclusiveMinimum"]:
            raise ConfigError(f"{path}: must be > {schema['exclusiveMinimum']}")
        if "maximum" in schema and value > schema["maximum"]:
            raise ConfigError(f"{path}: must be <= {schema['maximum']}")
    if "enum" in schema and value not in schema["enum"]:
        raise ConfigError(f"{path}: must be one of {schema['enum']}")
    if isinstance(value, dict) and schema.get("type") == "object":
        props = schema.get("properties", {})
        if not schema.get("additionalProperties", True):
            unknown = sorted(set(value) - set(props))
            if unknown:
                raise ConfigError(f"{path}: unknown keys {unknown}")
        for key in schema.get("required", ()):
            if key not in value:
                raise ConfigError(f"{path}: missing required key {key!r}")
        for key, sub in props.items():
            if key in value:
                _check(value[key], sub, f"{path}.{key}" if path else key)
    if isinstance(value, list) and "items" in schema:
        if "minItems" in schema and len(value) < schema["minItems"]:
            raise ConfigError(f"{path}: needs at least {schema['minItems']} items")
        if "maxItems" in schema and len(value) > schema["maxItems"]:
            raise ConfigError(f"{path}: allows at most {schema['maxItems']} items")
        for i, item in enumerate(value):
            _check(item, schema["items"], f"{path}[{i}]")


# --------------------------------------------------------------------------
# Parse / serialize


def parse_config(text: str) -> RunConfig:
    """A RunConfig from a JSON document, defaults filling absent keys."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from exc
    _check(data, CONFIG_SCHEMA, "")
    defaults = RunConfig()
    try:
        priors = _parse_priors(data.get("priors", {}), defaults.priors)
        disc = _parse_discretization(data.get("discretization", {}), defaults.discretization)
        geometry = _parse_geometry(data.get("geometry", {}), defaults.geometry)
        policy = _parse_policy(data.get("slice_policy", {}), defaults.slice_policy)
        trajectories = _parse_trajectories(data.get("trajectories", {}), defaults.trajectories)
        return RunConfig(
            priors=priors,
            discretization=disc,
            geometry=geometry,
            slice_policy=policy,
            trajectories=trajectories,
            lookahead=float(data.get("lookahead", defaults.lookahead)),
            ground_threshold=float(data.get("ground_threshold", defaults.ground_threshold)),
            map_densify_spacing=(
                None
                if data.get("map_densify_spacing") is None
                else float(data["map_densify_spacing"])
            ),
            export_format=data.get("export_format", defaults.export_format),
        )
    except (DiscretizationError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _parse_priors(data: dict, base: IntentionPriors) -> IntentionPriors:
    kwargs: dict[str, Any] = {}
    for name in _THRESHOLD_PRIORS:
        if name in data:
            d = data[name]
            kwargs[name] = TruncNorm(
                float(d["mu"]), float(d["sigma"]), float(d["lo"]), float(d["hi"])
            )
    for name in _BERNOULLI_PRIORS:
        if name in data:
            kwargs[name] = float(data[name])
    if "priority" in data:
        kwargs["priority"] = tuple(float(p) for p in data["priority"])
    if "situation_concentration" in data:
        kwargs["situation_concentration"] = float(data["situation_concentration"])
    return replace(base, **kwargs)


def _parse_discretization(data: dict, base: Discretization) -> Discretization:
    kwargs = {
        name: Channel(float(data[name]["upper"]), int(data[name]["bins"]))
        for name in _CHANNELS
        if name in data
    }
    return replace(base, **kwargs)


def _parse_geometry(data: dict, base: GeometryParams) -> GeometryParams:
    kwargs: dict[str, float] = {}
    for name in _GEOMETRY_ANGLES:
        key = f"{name}_deg"
        if key in data:
            kwargs[name] = math.radians(float(data[key]))
    for name in _GEOMETRY_PLAIN:
        if name in data:
            kwargs[name] = float(data[name])
    return replace(base, **kwargs)


def _parse_policy(data: dict, base: SlicePolicy) -> SlicePolicy:
    kwargs: dict[str, float] = {}
    if "max_age" in data:
        kwargs["max_age"] = float(data["max_age"])
    if "min_age" in data:
        kwargs["min_age"] = float(data["min_age"])
    if "course_delta_deg" in data:
        kwargs["course_delta"] = math.radians(float(data["course_delta_deg"]))
    if "speed_delta" in data:
        kwargs["speed_delta"] = float(data["speed_delta"])
    return replace(base, **kwargs)


def _parse_trajectories(data: dict, base: LosParams) -> LosParams:
    kwargs: dict[str, Any] = {}
    if "offsets_deg" in data:
        kwargs["offsets"] = tuple(math.radians(float(o)) for o in data["offsets_deg"])
    if "turn_rate_deg" in data:
        kwargs["turn_rate"] = math.radians(float(data["turn_rate_deg"]))
    for name in ("horizon", "dt", "pursuit_lookahead"):
        if name in data:
            kwargs[name] = float(data[name])
    return replace(base, **kwargs)


def _config_dict(cfg: RunConfig) -> dict[str, Any]:
    pri = cfg.priors
    priors: dict[str, Any] = {
        name: {
            "mu": getattr(pri, name).mu,
            "sigma": getattr(pri, name).sigma,
            "lo": getattr(pri, name).lo,
            "hi": getattr(pri, name).hi,
        }
        for name in _THRESHOLD_PRIORS
    }
    priors.update({name: getattr(pri, name) for name in _BERNOULLI_PRIORS})
    priors["priority"] = list(pri.priority)
    priors["situation_concentration"] = pri.situation_concentration
    geo = {
        f"{name}_deg": math.degrees(getattr(cfg.geometry, name))
        for name in _GEOMETRY_ANGLES
    }
    geo.update({name: getattr(cfg.geometry, name) for name in _GEOMETRY_PLAIN})
    return {
        "priors": priors,
        "discretization": {
            name: {
                "upper": getattr(cfg.discretization, name).upper,
                "bins": getattr(cfg.discretization, name).bins,
            }
            for name in _CHANNELS
        },
        "geometry": geo,
        "slice_policy": {
            "max_age": cfg.slice_policy.max_age,
            "min_age": cfg.slice_policy.min_age,
            "course_delta_deg": math.degrees(cfg.slice_policy.course_delta),
            "speed_delta": cfg.slice_policy.speed_delta,
        },
        "trajectories": {
            "offsets_deg": [math.degrees(o) for o in cfg.trajectories.offsets],
            "turn_rate_deg": math.degrees(cfg.trajectories.turn_rate),
            "horizon": cfg.trajectories.horizon,
            "dt": cfg.trajectories.dt,
            "pursuit_lookahead": cfg.trajectories.pursuit_lookahead,
        },
        "lookahead": cfg.lookahead,
        "ground_threshold": cfg.ground_threshold,
        "map_densify_spacing": cfg.map_densify_spacing,
        "export_format": cfg.export_format,
    }


def serialize_config(cfg: RunConfig) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_config_dict(cfg), indent=2, sort_keys=True) + "\n"


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(serialize_config(cfg))
