"""Config documents: canonical serialization, strict schema, partial merge."""

import json
import math

import pytest

from shipintent.config import (
    CONFIG_SCHEMA,
    ConfigError,
    RunConfig,
    default_config,
    load_config,
    parse_config,
    save_config,
    serialize_config,
)
from shipintent.discretize import Channel, Discretization, IntentionPriors, TruncNorm
from shipintent.geometry import GeometryParams
from shipintent.trajgen import LosParams


# -- canonical round trips -----------------------------------------------------


def test_default_serialization_is_a_fixpoint():
    text = serialize_config(default_config())
    parsed = parse_config(text)
    assert serialize_config(parsed) == text  # byte for byte
    assert parsed == default_config()
    assert text.endswith("}\n")
    assert json.loads(text)  # well-formed JSON besides being canonical


def test_custom_config_round_trips_exactly():
    cfg = RunConfig(
        priors=IntentionPriors(
            safe_cpa=TruncNorm(700.0, 300.0, 0.0, 1500.0),
            unmodeled=0.05,
            priority=(0.2, 0.6, 0.2),
        ),
        discretization=Discretization(cpa=Channel(1200.0, 8)),
        geometry=GeometryParams(head_on_half_angle=math.radians(17.3)),
        trajectories=LosParams(offsets=(math.radians(-33.7), 0.0, math.radians(12.1))),
        lookahead=90.0,
        map_densify_spacing=25.0,
        export_format="jsonl",
    )
    text = serialize_config(cfg)
    parsed = parse_config(text)
    assert parsed == cfg
    assert serialize_config(parsed) == text


def test_empty_document_gives_defaults():
    assert parse_config("{}") == default_config()


def test_serialized_angles_are_degrees():
    doc = json.loads(serialize_config(default_config()))
    assert doc["geometry"]["head_on_half_angle_deg"] == pytest.approx(22.5)
    assert doc["geometry"]["stern_half_angle_deg"] == pytest.approx(67.5)
    assert doc["slice_policy"]["course_delta_deg"] == pytest.approx(5.0)
    assert doc["trajectories"]["offsets_deg"] == pytest.approx(
        [-90.0, -45.0, -20.0, 0.0, 20.0, 45.0]
    )
    assert doc["trajectories"]["turn_rate_deg"] == pytest.approx(2.0)


# -- partial documents merge over defaults -------------------------------------


def test_partial_merge_touches_only_named_fields():
    cfg = parse_config('{"slice_policy": {"max_age": 120.0}}')
    assert cfg.slice_policy.max_age == 120.0
    assert cfg.slice_policy.min_age == default_config().slice_policy.min_age
    assert cfg.slice_policy.course_delta == pytest.approx(math.radians(5.0))
    assert cfg.priors == default_config().priors
    assert cfg.discretization == default_config().discretization


def test_partial_priors_merge():
    cfg = parse_config(
        '{"priors": {"ample_time": {"mu": 2000, "sigma": 900, "lo": 0, "hi": 5000},'
        ' "colregs_compliant": 0.9}}'
    )
    assert cfg.priors.ample_time == TruncNorm(2000.0, 900.0, 0.0, 5000.0)
    assert cfg.priors.colregs_compliant == 0.9
    assert cfg.priors.safe_cpa == default_config().priors.safe_cpa


def test_integers_accepted_where_numbers_expected():
    cfg = parse_config('{"lookahead": 90, "ground_threshold": 1800}')
    assert cfg.lookahead == 90.0
    assert cfg.ground_threshold == 1800.0


# -- strict validation with dotted paths ---------------------------------------


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match=r"unknown keys \['bogus'\]"):
        parse_config('{"bogus": 1}')
    with pytest.raises(ConfigError, match=r"priors: unknown keys \['safe_cpaa'\]"):
        parse_config('{"priors": {"safe_cpaa": 1}}')


def test_nested_violations_name_their_path():
    with pytest.raises(ConfigError, match=r"discretization\.cpa\.upper: must be > 0"):
        parse_config('{"discretization": {"cpa": {"upper": -5, "bins": 10}}}')
    with pytest.raises(ConfigError, match=r"priors\.priority: needs at least 3"):
        parse_config('{"priors": {"priority": [0.1, 0.2]}}')
    with pytest.raises(ConfigError, match=r"priors\.priority\[2\]: expected number"):
        parse_config('{"priors": {"priority": [0.1, 0.2, "x"]}}')
    with pytest.raises(ConfigError, match=r"priors\.safe_cpa: missing required key 'hi'"):
        parse_config('{"priors": {"safe_cpa": {"mu": 1, "sigma": 1, "lo": 0}}}')
    with pytest.raises(ConfigError, match=r"trajectories\.offsets_deg\[0\]: must be <= 180"):
        parse_config('{"trajectories": {"offsets_deg": [200.0]}}')


def test_degree_fields_validate_their_range():
    assert parse_config(
        '{"geometry": {"head_on_half_angle_deg": 180.0}}'
    ).geometry.head_on_half_angle == pytest.approx(math.pi)
    with pytest.raises(ConfigError, match=r"head_on_half_angle_deg: must be <= 180"):
        parse_config('{"geometry": {"head_on_half_angle_deg": 180.5}}')
    with pytest.raises(ConfigError, match=r"head_on_half_angle_deg: must be >= 0"):
        parse_config('{"geometry": {"head_on_half_angle_deg": -1.0}}')
    with pytest.raises(ConfigError, match=r"course_delta_deg: must be > 0"):
        parse_config('{"slice_policy": {"course_delta_deg": 0.0}}')


def test_type_errors_are_strict():
    with pytest.raises(ConfigError, match="lookahead: expected number"):
        parse_config('{"lookahead": true}')  # bools are not numbers
    with pytest.raises(ConfigError, match=r"discretization\.cpa\.bins: expected integer"):
        parse_config('{"discretization": {"cpa": {"upper": 1500, "bins": 9.5}}}')
    with pytest.raises(ConfigError, match=r"bins: must be >= 2"):
        parse_config('{"discretization": {"cpa": {"upper": 1500, "bins": 1}}}')
    with pytest.raises(ConfigError, match="export_format: must be one of"):
        parse_config('{"export_format": "parquet"}')
    with pytest.raises(ConfigError, match="must be finite"):
        parse_config('{"lookahead": Infinity}')


def test_invalid_json_reported_as_config_error():
    with pytest.raises(ConfigError, match="not valid JSON"):
        parse_config("{priors: }")


def test_domain_validation_wrapped_as_config_error():
    # passes the schema (each component in [0, 1]) but not the priors contract
    with pytest.raises(ConfigError, match="priority distribution must sum to 1"):
        parse_config('{"priors": {"priority": [0.9, 0.9, 0.9]}}')


def test_run_config_constructor_validation():
    with pytest.raises(ConfigError):
        RunConfig(lookahead=-1.0)
    with pytest.raises(ConfigError):
        RunConfig(ground_threshold=0.0)
    with pytest.raises(ConfigError):
        RunConfig(map_densify_spacing=-5.0)
    with pytest.raises(ConfigError):
        RunConfig(export_format="xml")
    assert RunConfig(map_densify_spacing=None).map_densify_spacing is None


def test_schema_document_shape():
    assert CONFIG_SCHEMA["type"] == "object"
    assert CONFIG_SCHEMA["additionalProperties"] is False
    assert set(CONFIG_SCHEMA["properties"]) >= {
        "priors",
        "discretization",
        "geometry",
        "slice_policy",
        "trajectories",
        "export_format",
    }


# -- file handling --------------------------------------------------------------


def test_save_load_round_trip(tmp_path):
    cfg = RunConfig(lookahead=45.0, export_format="jsonl")
    path = tmp_path / "run.json"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_load_errors_name_the_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError, match=r"bad\.json: not valid JSON"):
        load_config(bad)
