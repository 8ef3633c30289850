"""Intention inference for ship encounters, with maneuver scoring.

The package models an observed vessel's navigation intentions as the roots
of a discrete Bayesian network, folds in measurements derived from AIS
tracks one time slice at a time, and scores candidate avoidance maneuvers
by how compatible each one is with the inferred intentions.
"""

from .bn import ContradictionError, joint_enumerate_oracle, posterior
from .config import (
    ConfigError,
    RunConfig,
    default_config,
    load_config,
    parse_config,
    save_config,
    serialize_config,
)
from .dataio import (
    AisRecord,
    DataError,
    RunRecord,
    export_run,
    load_ais_csv,
    load_map_geojson,
    load_run,
)
from .discretize import Discretization, IntentionPriors, TruncNorm
from .extract import (
    Encounter,
    ExtractionError,
    ExtractionResult,
    build_prior_config,
    extract_corpus,
    fit_truncnorm,
)
from .geometry import GeometryParams, PolygonMap, ShipState, Waypoint
from .runtime import (
    CandidateScore,
    ScoreResult,
    Session,
    SlicePolicy,
    StepRecord,
    init_session,
    measure_candidate,
    score_candidates,
    should_add_slice,
    step_update,
)
from .trajgen import CandidateTrajectory, LosParams, los_candidates

__version__ = "0.1.0"

__all__ = [
    "AisRecord",
    "CandidateScore",
    "CandidateTrajectory",
    "ConfigError",
    "ContradictionError",
    "DataError",
    "Discretization",
    "Encounter",
    "ExtractionError",
    "ExtractionResult",
    "GeometryParams",
    "IntentionPriors",
    "LosParams",
    "PolygonMap",
    "RunConfig",
    "RunRecord",
    "ScoreResult",
    "Session",
    "ShipState",
    "SlicePolicy",
    "StepRecord",
    "TruncNorm",
    "Waypoint",
    "build_prior_config",
    "default_config",
    "export_run",
    "extract_corpus",
    "fit_truncnorm",
    "init_session",
    "joint_enumerate_oracle",
    "load_ais_csv",
    "load_config",
    "load_map_geojson",
    "load_run",
    "los_candidates",
    "measure_candidate",
    "parse_config",
    "posterior",
    "save_config",
    "score_candidates",
    "serialize_config",
    "should_add_slice",
    "step_update",
]
