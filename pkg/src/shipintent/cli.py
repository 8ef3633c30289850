"""Command-line front end: prior extraction, encounter replay, and scoring.

Verbs
-----
``extract-priors``
    Fit threshold priors from a labeled AIS corpus plus a coastline map and
    write a complete run configuration alongside a fitting report.
``replay``
    Step an encounter through the intention engine, scoring the maneuver fan
    at every update, and export one row of beliefs per step.
``score``
    Replay an encounter up to a chosen time and print the candidate table.
``selftest``
    Run the built-in end-to-end checks and print ok/FAIL per check.

Exit status is 0 on success, 1 for invalid input (arguments, files, schema,
configuration), and 2 when observations contradict the model.

``SHIPINTENT_OUT`` prefixes relative output paths; ``SHIPINTENT_WORKERS``
sets the process count used for corpus extraction.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .bn import (
    ContradictionError,
    Factor,
    Network,
    binned,
    joint_enumerate_oracle,
    posterior,
    set_evidence,
    set_virtual_evidence,
)
from .config import ConfigError, RunConfig, default_config, load_config, save_config
from .dataio import DataError, RunRecord, export_run, load_ais_csv, load_map_geojson
from .discretize import Discretization, IntentionPriors, threshold_prior_masses
from .extract import (
    Encounter,
    collect_samples,
    merge_samples,
    priors_from_result,
    result_from_samples,
)
from .geometry import (
    GeometryParams,
    PolygonMap,
    ShipState,
    Waypoint,
    angle_diff,
    project_local,
)
from .netbuild import apply_measurement_evidence, assert_compatible, build_intention_dbn
from .runtime import ScoreResult, Session, init_session, score_candidates, step_update
from .trajgen import LosParams, los_candidates

THRESHOLD_NODES = (
    "safe_cpa",
    "safe_front_cross",
    "safe_midpoint",
    "ample_time",
    "safe_ground_side",
    "safe_ground_front",
)


# --------------------------------------------------------------------------
# Shared plumbing
# --------------------------------------------------------------------------


def _resolve_out(out: str) -> Path:
    """Apply the SHIPINTENT_OUT prefix and make sure the directory exists."""
    path = Path(out)
    prefix = os.environ.get("SHIPINTENT_OUT")
    if prefix and not path.is_absolute():
        path = Path(prefix) / path
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _env_workers() -> int:
    raw = os.environ.get("SHIPINTENT_WORKERS", "1")
    try:
        workers = int(raw)
    except ValueError as exc:
        raise ConfigError(f"SHIPINTENT_WORKERS={raw!r} is not an integer") from exc
    if workers < 1:
        raise ConfigError(f"SHIPINTENT_WORKERS={raw!r} must be >= 1")
    return workers


def _project_map(
    base_map: PolygonMap, origin: tuple[float, float] | None, spacing: float | None
) -> PolygonMap:
    """Re-project a geographic map about an encounter origin, then densify."""
    pmap = base_map
    if origin is not None and pmap.geo_rings:
        pmap = pmap.to_origin(origin)
    if spacing is not None and not pmap.is_empty:
        pmap = pmap.densified(spacing)
    return pmap


def _pick_encounter(
    encounters: Sequence[Encounter], wanted: str | None, path: str
) -> Encounter:
    if wanted is not None:
        for enc in encounters:
            if enc.name == wanted:
                return enc
        known = ", ".join(sorted(e.name for e in encounters))
        raise DataError(f"{path}: no encounter {wanted!r} (have: {known})")
    if len(encounters) != 1:
        known = ", ".join(sorted(e.name for e in encounters))
        raise DataError(
            f"{path}: {len(encounters)} encounters; pick one with"
            f" --encounter-id ({known})"
        )
    return encounters[0]


def _aligned_pairs(enc: Encounter) -> list[tuple[ShipState, ShipState]]:
    """Match reference and obstacle samples that share a timestamp."""
    by_t = {obs.t: obs for obs in enc.obstacle}
    pairs = [(own, by_t[own.t]) for own in enc.reference if own.t in by_t]
    if len(pairs) < 2:
        raise DataError(
            f"encounter {enc.name!r}: the vessels share only {len(pairs)}"
            " timestamps; replay needs synchronized samples"
        )
    return pairs


def _parse_waypoint(
    raw: str | None, origin: tuple[float, float] | None
) -> Waypoint | None:
    if raw is None:
        return None
    try:
        lat_text, lon_text = raw.split(",")
        lat, lon = float(lat_text), float(lon_text)
    except ValueError as exc:
        raise DataError(f"--waypoint {raw!r}: expected LAT,LON") from exc
    if origin is None:
        raise DataError("--waypoint needs an encounter with a geographic origin")
    x, y = project_local(lat, lon, origin)
    return Waypoint(x, y)


def _load_base_config(path: str | None) -> RunConfig:
    return load_config(path) if path else default_config()


def _open_session(
    pairs: Sequence[tuple[ShipState, ShipState]],
    cfg: RunConfig,
    *,
    hazard: PolygonMap | None,
    waypoint: Waypoint | None,
) -> Session:
    own0, obs0 = pairs[0]
    return init_session(
        own0,
        [obs0],
        priors=cfg.priors,
        disc=cfg.discretization,
        geom=cfg.geometry,
        policy=cfg.slice_policy,
        lookahead=cfg.lookahead,
        hazard=hazard,
        waypoint=waypoint,
    )


def _score_fan(session: Session, cfg: RunConfig) -> ScoreResult:
    fan = los_candidates(session.own_state, cfg.trajectories)
    return score_candidates(session, fan)


# --------------------------------------------------------------------------
# extract-priors
# --------------------------------------------------------------------------


def _collect_chunk(
    job: tuple[Encounter, PolygonMap, float, GeometryParams, float | None],
) -> dict[str, list[float]]:
    """Per-encounter sample collection; top level so worker processes can run it."""
    enc, base_map, dist_thresh, geom, spacing = job
    pmap = _project_map(base_map, enc.origin, spacing)
    return collect_samples([enc], pmap, dist_thresh=dist_thresh, params=geom)


def _cmd_extract_priors(args: argparse.Namespace) -> int:
    cfg = _load_base_config(args.config)
    encounters = load_ais_csv(args.corpus, labels_path=args.labels)
    if not encounters:
        raise DataError(f"{args.corpus}: no usable encounters")
    base_map = load_map_geojson(args.map)

    jobs = [
        (enc, base_map, cfg.ground_threshold, cfg.geometry, cfg.map_densify_spacing)
        for enc in encounters
    ]
    workers = _env_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_collect_chunk, jobs))
    else:
        parts = [_collect_chunk(job) for job in jobs]

    result = result_from_samples(merge_samples(parts), cfg.discretization)
    priors = priors_from_result(result, cfg.discretization, base=cfg.priors)

    out = _resolve_out(args.out)
    save_config(replace(cfg, priors=priors), out)
    report = result.report()
    Path(f"{out}.report.txt").write_text(report + "\n", encoding="utf-8")
    print(report)
    print(f"wrote {out}")
    return 0


# --------------------------------------------------------------------------
# replay / score
# --------------------------------------------------------------------------


def _cmd_replay(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    encounters = load_ais_csv(args.encounter, labels_path=args.labels)
    enc = _pick_encounter(encounters, args.encounter_id, args.encounter)
    base_map = load_map_geojson(args.map)
    hazard = _project_map(base_map, enc.origin, cfg.map_densify_spacing)
    waypoint = _parse_waypoint(args.waypoint, enc.origin)

    pairs = _aligned_pairs(enc)
    session = _open_session(pairs, cfg, hazard=hazard, waypoint=waypoint)
    records = [RunRecord(session.last_record, _score_fan(session, cfg))]
    for own, obstacle in pairs[1:]:
        step = step_update(session, own, [obstacle])
        records.append(RunRecord(step, _score_fan(session, cfg)))

    out = _resolve_out(args.out)
    export_run(records, out, cfg.export_format)
    span = pairs[-1][0].t - pairs[0][0].t
    print(
        f"replayed {enc.name!r}: {len(records)} steps over {span:g} s"
        f" ({session.slice_count} slices)"
    )
    print(f"wrote {out}")
    return 0


def _print_scores(result: ScoreResult) -> None:
    print(f"{'candidate':<16}{'raw':>12}{'score':>12}")
    for cand in result.scores:
        print(f"{cand.label:<16}{cand.raw:>12.6f}{cand.score:>12.6f}")
    if result.all_incompatible:
        print("note: every candidate fell below the score floor; uniform fallback")
    best = max(result.scores, key=lambda c: c.score)
    print(f"best: {best.label} (score {best.score:.6f})")


def _cmd_score(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    encounters = load_ais_csv(args.encounter, labels_path=args.labels)
    enc = _pick_encounter(encounters, args.encounter_id, args.encounter)
    waypoint = _parse_waypoint(args.waypoint, enc.origin)

    pairs = _aligned_pairs(enc)
    if args.at < 0.0:
        raise DataError(f"--at {args.at:g} is before the first sample")
    cutoff = pairs[0][0].t + args.at
    upto = [pair for pair in pairs if pair[0].t <= cutoff + 1e-9]

    session = _open_session(upto, cfg, hazard=None, waypoint=waypoint)
    for own, obstacle in upto[1:]:
        step_update(session, own, [obstacle])

    print(f"encounter {enc.name!r} at t+{upto[-1][0].t - pairs[0][0].t:g} s")
    _print_scores(_score_fan(session, cfg))
    return 0


# --------------------------------------------------------------------------
# selftest
# --------------------------------------------------------------------------


def _random_net(rng: np.random.Generator) -> tuple[Network, list[str]]:
    n = int(rng.integers(4, 9))
    net = Network()
    variables = []
    for i in range(n):
        var = binned(f"v{i}", int(rng.integers(2, 4)))
        n_parents = min(i, int(rng.integers(0, 3)))
        picked = rng.choice(i, size=n_parents, replace=False) if n_parents else []
        parents = [variables[int(j)] for j in picked]
        table = rng.random([p.cardinality for p in parents] + [var.cardinality]) + 0.05
        table /= table.sum(axis=-1, keepdims=True)
        net.add_variable(var)
        net.add_cpt(Factor.cpt(var, parents, table))
        variables.append(var)
    hard_idx, soft_idx = (int(j) for j in rng.choice(n, size=2, replace=False))
    hard = variables[hard_idx]
    set_evidence(net, hard.id, int(rng.integers(hard.cardinality)))
    soft = variables[soft_idx]
    set_virtual_evidence(net, soft.id, 0.1 + 0.9 * rng.random(soft.cardinality))
    return net, [v.id for v in variables if v.id != hard.id]


def _check_inference() -> str | None:
    rng = np.random.default_rng(20240817)
    for trial in range(20):
        net, queries = _random_net(rng)
        query = queries[int(rng.integers(len(queries)))]
        got = posterior(net, query).as_tuple()
        want = joint_enumerate_oracle(net, query).as_tuple()
        err = max(abs(g - w) for g, w in zip(got, want))
        if err > 1e-9:
            return f"trial {trial}: |delta|={err:.2e} on {query}"
    return None


def _check_discretization() -> str | None:
    priors, disc = IntentionPriors(), Discretization()
    for name in THRESHOLD_NODES:
        drift = abs(float(threshold_prior_masses(priors, disc, name).sum()) - 1.0)
        if drift > 1e-12:
            return f"{name} bin masses sum to 1{drift:+.2e}"
    return None


def _check_trajectories() -> str | None:
    start = ShipState(t=0.0, x=0.0, y=0.0, sog=5.0, cog=math.radians(30.0))
    params = LosParams()
    fan = {cand.label: cand for cand in los_candidates(start, params)}

    straight = fan["straight"]
    if any(s.cog != start.cog for s in straight.states):
        return "straight candidate drifts off course"

    heading = np.array([math.cos(start.cog), math.sin(start.cog)])
    normal = np.array([-heading[1], heading[0]])
    for port_s, stbd_s in zip(fan["port_45"].states, fan["starboard_45"].states):
        offsets = np.array([[port_s.x, port_s.y], [stbd_s.x, stbd_s.y]]) @ normal
        if abs(offsets[0] + offsets[1]) > 1e-9:
            return "port/starboard fans are not mirror images"

    per_step = params.turn_rate * params.dt + 1e-12
    for cand in fan.values():
        for a, b in zip(cand.states, cand.states[1:]):
            if abs(angle_diff(b.cog, a.cog)) > per_step:
                return f"{cand.label}: turn rate limit exceeded"
    return None


def _check_dual_route() -> str | None:
    own = ShipState(t=0.0, x=0.0, y=0.0, sog=5.0, cog=0.0)
    obstacle = ShipState(t=0.0, x=1800.0, y=120.0, sog=4.0, cog=math.pi)
    disc = Discretization().with_bins(3)
    session = init_session(own, [obstacle], disc=disc)

    net = build_intention_dbn(1, session.priors, disc, 1, situations=session.anchors)
    apply_measurement_evidence(net, 0, session.slice_measurements()[0])
    assert_compatible(net, 0)
    ((sa_in, pa_in),) = session.slice_carries()
    set_evidence(net, "turned_starboard_carry", sa_in)
    set_evidence(net, "turned_port_carry", pa_in)

    worst = 0.0
    for node, want in session.last_record.posterior.marginals.items():
        got = posterior(net, node).as_tuple()
        worst = max(worst, max(abs(g - w) for g, w in zip(got, want)))
    if worst > 1e-9:
        return f"session vs single-network posterior |delta|={worst:.2e}"
    return None


def _check_retraction() -> str | None:
    own = ShipState(t=0.0, x=0.0, y=0.0, sog=6.0, cog=0.3)
    obstacle = ShipState(t=0.0, x=2500.0, y=-300.0, sog=5.0, cog=3.5)
    session = init_session(own, [obstacle])
    for k in range(1, 4):
        step_update(session, own.advanced(30.0 * k), [obstacle.advanced(30.0 * k)])
    before = session.state_hash()
    score_candidates(session, los_candidates(session.own_state, LosParams()))
    if session.state_hash() != before:
        return "belief state changed across scoring"
    return None


_CHECKS = (
    ("exact inference matches enumeration", _check_inference),
    ("threshold bin masses are normalized", _check_discretization),
    ("candidate fan geometry", _check_trajectories),
    ("session matches single-network posterior", _check_dual_route),
    ("scoring leaves session state untouched", _check_retraction),
)


def _cmd_selftest(args: argparse.Namespace) -> int:
    failures = 0
    for name, check in _CHECKS:
        detail = check()
        if detail is None:
            print(f"ok   {name}")
        else:
            failures += 1
            print(f"FAIL {name}: {detail}")
    return 1 if failures else 0


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; keep 2 reserved for contradictions."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="shipintent",
        description="Infer ship intentions from AIS tracks and score maneuvers.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser(
        "extract-priors", help="fit threshold priors from a labeled corpus"
    )
    p.add_argument("corpus", help="AIS corpus CSV")
    p.add_argument("map", help="coastline GeoJSON")
    p.add_argument("-o", "--out", required=True, help="output config path")
    p.add_argument("--config", help="base configuration to inherit from")
    p.add_argument("--labels", help="label sidecar (default: <corpus>.labels.csv)")
    p.set_defaults(func=_cmd_extract_priors)

    p = sub.add_parser("replay", help="replay an encounter and export beliefs")
    p.add_argument("encounter", help="encounter CSV")
    p.add_argument("map", help="coastline GeoJSON")
    p.add_argument("config", help="run configuration")
    p.add_argument("-o", "--out", required=True, help="output table path")
    p.add_argument("--encounter-id", help="select one encounter from the file")
    p.add_argument("--labels", help="label sidecar path")
    p.add_argument("--waypoint", metavar="LAT,LON", help="planned track waypoint")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("score", help="score the maneuver fan at a point in time")
    p.add_argument("encounter", help="encounter CSV")
    p.add_argument("config", help="run configuration")
    p.add_argument(
        "--at", type=float, required=True, help="seconds after the first sample"
    )
    p.add_argument("--encounter-id", help="select one encounter from the file")
    p.add_argument("--labels", help="label sidecar path")
    p.add_argument("--waypoint", metavar="LAT,LON", help="planned track waypoint")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("selftest", help="run the built-in checks")
    p.set_defaults(func=_cmd_selftest)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None) -> None:
    print(f"warning: {message}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            return args.func(args)
    except ContradictionError as exc:
        print(f"contradiction: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
