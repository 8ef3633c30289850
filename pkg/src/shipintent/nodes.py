"""Node vocabulary and deterministic logic of the intention network.

The network has three layers:

* intention roots - what the observed vessel is presumed to want (safety
  thresholds, compliance switches, its view of the encounter);
* per-slice measurement roots - binned/classified geometry snapshots;
* per-slice model nodes - binary, fully deterministic consequences of their
  parents, each backed by one predicate in this module.

Per-ship nodes get a ``_<i>`` suffix (1-based obstacle index); slice copies
get ``@<k>``.  ``turned_starboard``/``turned_port`` latch across slices: they
OR the current course-change state with their previous-slice value, and slice
0 reads the ``*_carry`` roots so a session can seed earlier history.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

from .geometry import Side, Situation, SpeedTrend, Trend, Turn

# State tuples (index order is part of the network contract).
SIDE_STATES = tuple(m.value for m in Side)            # starboard, port
TURN_STATES = tuple(m.value for m in Turn)            # starboard, port, straight
SPEED_STATES = tuple(m.value for m in SpeedTrend)     # higher, lower, none
TREND_STATES = tuple(m.value for m in Trend)          # decreasing, increasing, neither
SITUATION_STATES = tuple(m.value for m in Situation)
PRIORITY_STATES = ("higher", "similar", "lower")

FALSE, TRUE = 0, 1
SB, PORT, STRAIGHT = 0, 1, 2
HIGHER, LOWER, NONE = 0, 1, 2
DECREASING, INCREASING, NEITHER = 0, 1, 2
OVERTAKING, OVERTAKEN, HEAD_ON, CROSSING_PORT, CROSSING_STARBOARD = range(5)
PRI_HIGHER, PRI_SIMILAR, PRI_LOWER = range(3)

INTENTION_REAL = (
    "safe_cpa",
    "safe_front_cross",
    "safe_midpoint",
    "ample_time",
    "safe_ground_side",
    "safe_ground_front",
)
INTENTION_BINARY = ("colregs_compliant", "good_seamanship", "ground_intent", "unmodeled")


def ship(base: str, i: int) -> str:
    return f"{base}_{i}"


def at(node: str, k: int) -> str:
    return f"{node}@{k}"


def intention_ids(n_ships: int) -> list[str]:
    ids = list(INTENTION_REAL) + list(INTENTION_BINARY)
    for i in range(1, n_ships + 1):
        ids += [ship("priority", i), ship("situation_view", i)]
    return ids


def measurement_ids(n_ships: int) -> list[str]:
    ids = [
        "meas_course_change",
        "meas_speed_change",
        "meas_course_changing",
        "meas_ground_sb",
        "meas_ground_ps",
        "meas_ground_front",
        "meas_wp_bearing",
        "meas_wp_distance",
        "meas_wp_ahead",
    ]
    for i in range(1, n_ships + 1):
        ids += [
            ship("meas_dcpa", i),
            ship("meas_front_cross", i),
            ship("meas_midpoint_dist", i),
            ship("meas_tcpa", i),
            ship("meas_passed", i),
            ship("meas_pass_side", i),
            ship("meas_midpoint_side", i),
            ship("meas_situation", i),
        ]
    return ids


@dataclass(frozen=True)
class ModelNodeSpec:
    """One deterministic binary node: id, ordered parents, truth predicate."""

    node_id: str
    parents: tuple[str, ...]
    predicate: Callable[..., bool]
    temporal: bool = False  # last parent refers to the previous slice


def model_node_truth(spec: ModelNodeSpec, assignment: Mapping[str, int]) -> bool:
    """Evaluate a node's predicate on a parent-state assignment."""
    try:
        states = tuple(assignment[p] for p in spec.parents)
    except KeyError as missing:
        raise ValueError(f"assignment is missing parent {missing.args[0]!r}") from None
    return bool(spec.predicate(*states))


def model_node_specs(n_ships: int) -> list[ModelNodeSpec]:
    """Registry of every model node for one time slice, dependency-ordered."""
    if n_ships < 1:
        raise ValueError("the network needs at least one obstacle ship")
    specs: list[ModelNodeSpec] = []

    specs.append(
        ModelNodeSpec(
            "turned_starboard",
            ("meas_course_change", "turned_starboard_prev"),
            lambda cic, prev: cic == SB or prev == TRUE,
            temporal=True,
        )
    )
    specs.append(
        ModelNodeSpec(
            "turned_port",
            ("meas_course_change", "turned_port_prev"),
            lambda cic, prev: cic == PORT or prev == TRUE,
            temporal=True,
        )
    )
    specs.append(
        ModelNodeSpec(
            "nav_maneuver",
            ("meas_wp_distance", "meas_wp_bearing", "meas_wp_ahead"),
            lambda wprd, wprb, wpah: wprd == DECREASING
            and (wprb == DECREASING or wpah == TRUE),
        )
    )
    specs.append(
        ModelNodeSpec(
            "ground_safe_side",
            ("meas_ground_sb", "meas_ground_ps", "safe_ground_side", "meas_course_change"),
            lambda sb, ps, thr, cic: (sb > thr and cic == SB)
            or (ps > thr and cic == PORT)
            or cic == STRAIGHT,
        )
    )
    specs.append(
        ModelNodeSpec(
            "ground_safe_front",
            ("meas_ground_front", "safe_ground_front", "meas_course_change"),
            lambda front, thr, cic: front > thr or cic != STRAIGHT,
        )
    )
    specs.append(
        ModelNodeSpec(
            "ground_safe",
            ("ground_safe_side", "ground_safe_front"),
            lambda side, front: side == TRUE and front == TRUE,
        )
    )

    for i in range(1, n_ships + 1):
        specs.append(
            ModelNodeSpec(
                ship("safe_distance", i),
                (ship("meas_dcpa", i), "safe_cpa", ship("meas_front_cross", i), "safe_front_cross"),
                lambda dcpa, thr_cpa, front, thr_front: dcpa > thr_cpa and front > thr_front,
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("passed_safely", i),
                (ship("meas_passed", i), ship("safe_distance", i)),
                lambda passed, sd: passed == TRUE and sd == TRUE,
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("overtaken_ok", i),
                (ship("safe_distance", i),),
                lambda sd: sd == TRUE,
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("overtaking_ok", i),
                (ship("safe_distance", i),),
                lambda sd: sd == TRUE,
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("head_on_ok", i),
                (ship("meas_midpoint_dist", i), "safe_midpoint", ship("meas_midpoint_side", i)),
                lambda dm, thr, side: dm > thr and side == PORT,
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("cross_starboard_ok", i),
                (ship("safe_distance", i), ship("meas_pass_side", i)),
                lambda sd, side: sd == TRUE and side == PORT,
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("cross_port_ok", i),
                (ship("safe_distance", i), "meas_course_change"),
                lambda sd, cic: sd == TRUE and cic != PORT,
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("nav_maneuver_ok", i),
                (
                    "nav_maneuver",
                    ship("safe_distance", i),
                    ship("situation_view", i),
                    ship("meas_passed", i),
                    ship("meas_midpoint_dist", i),
                    "safe_midpoint",
                ),
                lambda nav, sd, sit, passed, dm, thr: nav == TRUE
                and (
                    (sd == TRUE and sit != HEAD_ON)
                    or passed == TRUE
                    or (dm > thr and sit == HEAD_ON)
                ),
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("gives_way_role", i),
                (ship("priority", i), ship("situation_view", i)),
                lambda pri, sit: pri == PRI_LOWER
                or (pri == PRI_SIMILAR and sit in (HEAD_ON, CROSSING_STARBOARD, OVERTAKING)),
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("seamanlike_turn", i),
                ("turned_starboard", "turned_port", "meas_course_change", ship("meas_pass_side", i)),
                lambda sa, pa, cic, side: not (sa == TRUE and pa == TRUE) and cic != side,
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("evasive_ok", i),
                (
                    "good_seamanship",
                    ship("seamanlike_turn", i),
                    "colregs_compliant",
                    ship("situation_view", i),
                    ship("overtaking_ok", i),
                    ship("overtaken_ok", i),
                    ship("head_on_ok", i),
                    ship("cross_starboard_ok", i),
                    ship("cross_port_ok", i),
                ),
                lambda i_gs, gs, i_cc, sit, oting, oten, ho, crss, crps: (
                    i_gs == FALSE or gs == TRUE
                )
                and (
                    i_cc == FALSE
                    or (sit == OVERTAKING and oting == TRUE)
                    or (sit == OVERTAKEN and oten == TRUE)
                    or (sit == HEAD_ON and ho == TRUE)
                    or (sit == CROSSING_STARBOARD and crss == TRUE)
                    or (sit == CROSSING_PORT and crps == TRUE)
                ),
            )
        )

    for i in range(1, n_ships + 1):
        others = [j for j in range(1, n_ships + 1) if j != i]
        parents = ["meas_course_change", "meas_speed_change"]
        for j in others:
            parents += [ship("gives_way_role", j), ship("evasive_ok", j), ship("passed_safely", j)]

        def stands_on(cic: int, cis: int, *rest: int, _n: int = len(others)) -> bool:
            if cic == STRAIGHT and cis == NONE:
                return True
            return any(
                rest[3 * k] == TRUE and rest[3 * k + 1] == TRUE and rest[3 * k + 2] == FALSE
                for k in range(_n)
            )

        specs.append(ModelNodeSpec(ship("stands_on_ok", i), tuple(parents), stands_on))

    for i in range(1, n_ships + 1):
        specs.append(
            ModelNodeSpec(
                ship("gives_way_ok", i),
                (
                    ship("evasive_ok", i),
                    "meas_course_changing",
                    ship("meas_tcpa", i),
                    "ample_time",
                    ship("stands_on_ok", i),
                ),
                lambda cem, ccc, tcpa, thr, soc: cem == TRUE
                or ccc == TRUE
                or (tcpa > thr and soc == TRUE),
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("colav_ok", i),
                (
                    ship("passed_safely", i),
                    ship("gives_way_role", i),
                    ship("stands_on_ok", i),
                    ship("gives_way_ok", i),
                ),
                lambda p, role, soc, gwc: (p == FALSE and role == FALSE and soc == TRUE)
                or (p == FALSE and role == TRUE and gwc == TRUE),
            )
        )
        specs.append(
            ModelNodeSpec(
                ship("ship_compatible", i),
                (ship("colav_ok", i), ship("nav_maneuver_ok", i), "ground_safe", "ground_intent"),
                lambda colav, nav, sdg, ig: (colav == TRUE or nav == TRUE)
                and (sdg == TRUE or ig == TRUE),
            )
        )

    compat_parents = tuple(ship("ship_compatible", i) for i in range(1, n_ships + 1)) + ("unmodeled",)

    def compatible(*states: int) -> bool:
        return all(s == TRUE for s in states[:-1]) or states[-1] == TRUE

    specs.append(ModelNodeSpec("compatible", compat_parents, compatible))
    return specs


# Which measurement node pairs with which discretization channel.
MEASUREMENT_CHANNELS = {
    "meas_dcpa": "cpa",
    "meas_front_cross": "front_cross",
    "meas_midpoint_dist": "midpoint",
    "meas_tcpa": "time_to_cpa",
    "meas_ground_sb": "ground_side",
    "meas_ground_ps": "ground_side",
    "meas_ground_front": "ground_front",
}


@dataclass(frozen=True)
class ShipMeasurements:
    """Binned/classified geometry of the reference vessel against one ship."""

    dcpa_bin: int
    front_cross_bin: int
    midpoint_bin: int
    tcpa_bin: int
    passed: bool
    pass_side: Side
    midpoint_side: Side
    situation: Situation


@dataclass(frozen=True)
class MeasurementVector:
    """Evidence for one time slice: per-ship blocks plus shared channels."""

    ships: tuple[ShipMeasurements, ...]
    course_change: Turn
    speed_change: SpeedTrend
    course_changing: bool
    ground_sb_bin: int
    ground_ps_bin: int
    ground_front_bin: int
    wp_bearing: Trend
    wp_distance: Trend
    wp_ahead: bool

    def as_states(self) -> dict[str, int]:
        """Slice-local node id -> state index, for every measurement node."""
        out = {
            "meas_course_change": TURN_STATES.index(self.course_change.value),
            "meas_speed_change": SPEED_STATES.index(self.speed_change.value),
            "meas_course_changing": int(self.course_changing),
            "meas_ground_sb": self.ground_sb_bin,
            "meas_ground_ps": self.ground_ps_bin,
            "meas_ground_front": self.ground_front_bin,
            "meas_wp_bearing": TREND_STATES.index(self.wp_bearing.value),
            "meas_wp_distance": TREND_STATES.index(self.wp_distance.value),
            "meas_wp_ahead": int(self.wp_ahead),
        }
        for i, m in enumerate(self.ships, start=1):
            out[ship("meas_dcpa", i)] = m.dcpa_bin
            out[ship("meas_front_cross", i)] = m.front_cross_bin
            out[ship("meas_midpoint_dist", i)] = m.midpoint_bin
            out[ship("meas_tcpa", i)] = m.tcpa_bin
            out[ship("meas_passed", i)] = int(m.passed)
            out[ship("meas_pass_side", i)] = SIDE_STATES.index(m.pass_side.value)
            out[ship("meas_midpoint_side", i)] = SIDE_STATES.index(m.midpoint_side.value)
            out[ship("meas_situation", i)] = SITUATION_STATES.index(m.situation.value)
        return out
