"""Deterministic model-node predicates: truth tables and guard clauses."""

from itertools import product

import pytest

from shipintent.geometry import Side, Situation, SpeedTrend, Trend, Turn
from shipintent.nodes import (
    CROSSING_PORT,
    CROSSING_STARBOARD,
    DECREASING,
    FALSE,
    HEAD_ON,
    INCREASING,
    NEITHER,
    NONE,
    OVERTAKEN,
    OVERTAKING,
    PORT,
    PRI_HIGHER,
    PRI_LOWER,
    PRI_SIMILAR,
    SB,
    STRAIGHT,
    TRUE,
    MeasurementVector,
    ModelNodeSpec,
    ShipMeasurements,
    intention_ids,
    measurement_ids,
    model_node_specs,
    model_node_truth,
    ship,
)


def spec_map(n_ships=1):
    return {s.node_id: s for s in model_node_specs(n_ships)}


def truth(spec, **assignment):
    return model_node_truth(spec, assignment)


# -- registry shape -------------------------------------------------------------


def test_single_ship_registry_has_22_nodes():
    specs = model_node_specs(1)
    assert len(specs) == 22
    assert len({s.node_id for s in specs}) == 22


def test_registry_grows_by_15_per_ship():
    assert len(model_node_specs(2)) == 37
    assert len(model_node_specs(3)) == 52


def test_registry_is_dependency_ordered():
    for n in (1, 2, 3):
        defined = set(measurement_ids(n)) | set(intention_ids(n))
        for spec in model_node_specs(n):
            for p in spec.parents:
                assert p in defined or (spec.temporal and p.endswith("_prev")), (
                    f"{spec.node_id} uses undeclared parent {p}"
                )
            defined.add(spec.node_id)


def test_intention_ids_count():
    assert len(intention_ids(1)) == 12
    assert len(intention_ids(2)) == 14


def test_compatible_parents_cover_all_ships():
    spec = spec_map(2)["compatible"]
    assert spec.parents == ("ship_compatible_1", "ship_compatible_2", "unmodeled")


def test_missing_parent_raises():
    spec = spec_map()["ground_safe"]
    with pytest.raises(ValueError, match="ground_safe_front"):
        model_node_truth(spec, {"ground_safe_side": TRUE})


# -- distance/threshold nodes ------------------------------------------------------


def test_safe_distance_needs_both_margins():
    sd = spec_map()["safe_distance_1"]
    assert truth(sd, meas_dcpa_1=9, safe_cpa=3, meas_front_cross_1=9, safe_front_cross=2)
    assert not truth(sd, meas_dcpa_1=2, safe_cpa=3, meas_front_cross_1=9, safe_front_cross=2)
    assert not truth(sd, meas_dcpa_1=9, safe_cpa=3, meas_front_cross_1=1, safe_front_cross=2)
    # equal bins compare as "not greater"
    assert not truth(sd, meas_dcpa_1=3, safe_cpa=3, meas_front_cross_1=9, safe_front_cross=2)


def test_safe_distance_monotone_in_cpa_bin():
    sd = spec_map()["safe_distance_1"]
    for thr_cpa, front, thr_front in product(range(4), repeat=3):
        prev = False
        for dcpa in range(4):
            now = truth(sd, meas_dcpa_1=dcpa, safe_cpa=thr_cpa,
                        meas_front_cross_1=front, safe_front_cross=thr_front)
            assert not (prev and not now), "raising the CPA bin must never flip true->false"
            prev = now


def test_passed_safely_is_a_conjunction():
    p = spec_map()["passed_safely_1"]
    table = {(TRUE, TRUE): True, (TRUE, FALSE): False, (FALSE, TRUE): False, (FALSE, FALSE): False}
    for (passed, sd), want in table.items():
        assert truth(p, meas_passed_1=passed, safe_distance_1=sd) is want


def test_overtaking_nodes_mirror_safe_distance():
    m = spec_map()
    for node in ("overtaking_ok_1", "overtaken_ok_1"):
        assert truth(m[node], safe_distance_1=TRUE)
        assert not truth(m[node], safe_distance_1=FALSE)


def test_head_on_requires_port_midpoint_with_margin():
    ho = spec_map()["head_on_ok_1"]
    assert truth(ho, meas_midpoint_dist_1=5, safe_midpoint=2, meas_midpoint_side_1=PORT)
    assert not truth(ho, meas_midpoint_dist_1=5, safe_midpoint=2, meas_midpoint_side_1=SB)
    assert not truth(ho, meas_midpoint_dist_1=2, safe_midpoint=2, meas_midpoint_side_1=PORT)


def test_crossing_nodes():
    m = spec_map()
    assert truth(m["cross_starboard_ok_1"], safe_distance_1=TRUE, meas_pass_side_1=PORT)
    assert not truth(m["cross_starboard_ok_1"], safe_distance_1=TRUE, meas_pass_side_1=SB)
    assert truth(m["cross_port_ok_1"], safe_distance_1=TRUE, meas_course_change=STRAIGHT)
    assert truth(m["cross_port_ok_1"], safe_distance_1=TRUE, meas_course_change=SB)
    assert not truth(m["cross_port_ok_1"], safe_distance_1=TRUE, meas_course_change=PORT)


# -- waypoint navigation -------------------------------------------------------------


def test_nav_maneuver_table():
    nav = spec_map()["nav_maneuver"]
    assert truth(nav, meas_wp_distance=DECREASING, meas_wp_bearing=DECREASING, meas_wp_ahead=FALSE)
    assert truth(nav, meas_wp_distance=DECREASING, meas_wp_bearing=INCREASING, meas_wp_ahead=TRUE)
    assert not truth(nav, meas_wp_distance=DECREASING, meas_wp_bearing=NEITHER, meas_wp_ahead=FALSE)
    assert not truth(nav, meas_wp_distance=INCREASING, meas_wp_bearing=DECREASING, meas_wp_ahead=TRUE)
    assert not truth(nav, meas_wp_distance=NEITHER, meas_wp_bearing=DECREASING, meas_wp_ahead=TRUE)


def test_nav_ok_unconditional_once_passed():
    nav_ok = spec_map()["nav_maneuver_ok_1"]
    for sd, sit, dm, thr in product((FALSE, TRUE), range(5), range(3), range(3)):
        assert truth(
            nav_ok,
            nav_maneuver=TRUE,
            safe_distance_1=sd,
            situation_view_1=sit,
            meas_passed_1=TRUE,
            meas_midpoint_dist_1=dm,
            safe_midpoint=thr,
        )


def test_nav_ok_head_on_uses_midpoint_margin():
    nav_ok = spec_map()["nav_maneuver_ok_1"]
    common = dict(nav_maneuver=TRUE, safe_distance_1=TRUE, meas_passed_1=FALSE)
    assert truth(nav_ok, situation_view_1=HEAD_ON, meas_midpoint_dist_1=5, safe_midpoint=2, **common)
    assert not truth(nav_ok, situation_view_1=HEAD_ON, meas_midpoint_dist_1=1, safe_midpoint=2, **common)
    # outside head-on, safe distance is what counts
    assert truth(nav_ok, situation_view_1=CROSSING_PORT, meas_midpoint_dist_1=1, safe_midpoint=2, **common)
    assert not truth(nav_ok, situation_view_1=CROSSING_PORT, meas_midpoint_dist_1=5,
                     safe_midpoint=2, nav_maneuver=TRUE, safe_distance_1=FALSE, meas_passed_1=FALSE)


def test_nav_ok_requires_waypoint_progress():
    nav_ok = spec_map()["nav_maneuver_ok_1"]
    assert not truth(nav_ok, nav_maneuver=FALSE, safe_distance_1=TRUE,
                     situation_view_1=OVERTAKING, meas_passed_1=TRUE,
                     meas_midpoint_dist_1=9, safe_midpoint=0)


# -- roles and seamanship ---------------------------------------------------------------


def test_gives_way_role_cases():
    role = spec_map()["gives_way_role_1"]
    # similar priority: role follows the situation
    assert truth(role, priority_1=PRI_SIMILAR, situation_view_1=HEAD_ON)
    assert truth(role, priority_1=PRI_SIMILAR, situation_view_1=CROSSING_STARBOARD)
    assert truth(role, priority_1=PRI_SIMILAR, situation_view_1=OVERTAKING)
    assert not truth(role, priority_1=PRI_SIMILAR, situation_view_1=CROSSING_PORT)
    assert not truth(role, priority_1=PRI_SIMILAR, situation_view_1=OVERTAKEN)
    # priority dominates the situation
    for sit in range(5):
        assert truth(role, priority_1=PRI_LOWER, situation_view_1=sit)
        assert not truth(role, priority_1=PRI_HIGHER, situation_view_1=sit)


def test_seamanlike_turn_forbids_zigzag_and_turning_into_the_pass():
    st = spec_map()["seamanlike_turn_1"]
    common = dict(meas_course_change=STRAIGHT, meas_pass_side_1=SB)
    assert truth(st, turned_starboard=TRUE, turned_port=FALSE, **common)
    assert truth(st, turned_starboard=FALSE, turned_port=TRUE, **common)
    assert not truth(st, turned_starboard=TRUE, turned_port=TRUE, **common)
    # turning toward the side the ship passes on is unseamanlike
    assert not truth(st, turned_starboard=TRUE, turned_port=FALSE,
                     meas_course_change=SB, meas_pass_side_1=SB)
    assert truth(st, turned_starboard=TRUE, turned_port=FALSE,
                 meas_course_change=SB, meas_pass_side_1=PORT)


def test_turn_latches_or_current_with_previous():
    m = spec_map()
    sb, ps = m["turned_starboard"], m["turned_port"]
    assert sb.temporal and ps.temporal
    assert truth(sb, meas_course_change=SB, turned_starboard_prev=FALSE)
    assert truth(sb, meas_course_change=STRAIGHT, turned_starboard_prev=TRUE)
    assert not truth(sb, meas_course_change=PORT, turned_starboard_prev=FALSE)
    assert truth(ps, meas_course_change=PORT, turned_port_prev=FALSE)
    assert not truth(ps, meas_course_change=SB, turned_port_prev=FALSE)


def test_evasive_ok_releases_ignored_rules():
    ev = spec_map()["evasive_ok_1"]
    base = dict(seamanlike_turn_1=FALSE, situation_view_1=HEAD_ON, overtaking_ok_1=FALSE,
                overtaken_ok_1=FALSE, head_on_ok_1=FALSE, cross_starboard_ok_1=FALSE,
                cross_port_ok_1=FALSE)
    # caring about seamanship with an unseamanlike turn sinks the node
    assert not truth(ev, good_seamanship=TRUE, colregs_compliant=FALSE, **base)
    # not caring about either rule set makes the maneuver trivially fine
    assert truth(ev, good_seamanship=FALSE, colregs_compliant=FALSE, **base)
    # compliance demands the node that matches the believed situation
    ok_ho = dict(base, head_on_ok_1=TRUE, seamanlike_turn_1=TRUE)
    assert truth(ev, good_seamanship=TRUE, colregs_compliant=TRUE, **ok_ho)
    ok_wrong_slot = dict(base, cross_port_ok_1=TRUE, seamanlike_turn_1=TRUE)
    assert not truth(ev, good_seamanship=TRUE, colregs_compliant=TRUE, **ok_wrong_slot)


# -- stand-on / give-way composition -------------------------------------------------------


def test_stands_on_single_ship_means_holding_course_and_speed():
    soc = spec_map()["stands_on_ok_1"]
    assert truth(soc, meas_course_change=STRAIGHT, meas_speed_change=NONE)
    for cic, cis in product((SB, PORT, STRAIGHT), (0, 1, NONE)):
        if cic == STRAIGHT and cis == NONE:
            continue
        assert not truth(soc, meas_course_change=cic, meas_speed_change=cis)


def test_stands_on_two_ships_allows_maneuver_for_the_other():
    soc = spec_map(2)["stands_on_ok_1"]
    # maneuvering is fine while giving way to ship 2 (not yet passed)
    assert truth(soc, meas_course_change=SB, meas_speed_change=NONE,
                 gives_way_role_2=TRUE, evasive_ok_2=TRUE, passed_safely_2=FALSE)
    # ...but not once ship 2 is passed
    assert not truth(soc, meas_course_change=SB, meas_speed_change=NONE,
                     gives_way_role_2=TRUE, evasive_ok_2=TRUE, passed_safely_2=TRUE)
    assert not truth(soc, meas_course_change=SB, meas_speed_change=NONE,
                     gives_way_role_2=FALSE, evasive_ok_2=TRUE, passed_safely_2=FALSE)


def test_gives_way_ok_paths():
    gw = spec_map()["gives_way_ok_1"]
    assert truth(gw, evasive_ok_1=TRUE, meas_course_changing=FALSE,
                 meas_tcpa_1=0, ample_time=5, stands_on_ok_1=FALSE)
    assert truth(gw, evasive_ok_1=FALSE, meas_course_changing=TRUE,
                 meas_tcpa_1=0, ample_time=5, stands_on_ok_1=FALSE)
    assert truth(gw, evasive_ok_1=FALSE, meas_course_changing=FALSE,
                 meas_tcpa_1=9, ample_time=5, stands_on_ok_1=TRUE)
    assert not truth(gw, evasive_ok_1=FALSE, meas_course_changing=FALSE,
                     meas_tcpa_1=9, ample_time=5, stands_on_ok_1=FALSE)
    assert not truth(gw, evasive_ok_1=FALSE, meas_course_changing=FALSE,
                     meas_tcpa_1=5, ample_time=5, stands_on_ok_1=TRUE)


def test_colav_ok_role_dispatch():
    colav = spec_map()["colav_ok_1"]
    assert truth(colav, passed_safely_1=FALSE, gives_way_role_1=FALSE,
                 stands_on_ok_1=TRUE, gives_way_ok_1=FALSE)
    assert truth(colav, passed_safely_1=FALSE, gives_way_role_1=TRUE,
                 stands_on_ok_1=FALSE, gives_way_ok_1=TRUE)
    assert not truth(colav, passed_safely_1=FALSE, gives_way_role_1=TRUE,
                     stands_on_ok_1=TRUE, gives_way_ok_1=FALSE)
    # once passed, this node stops claiming anything
    for role, soc, gwc in product((FALSE, TRUE), repeat=3):
        assert not truth(colav, passed_safely_1=TRUE, gives_way_role_1=role,
                         stands_on_ok_1=soc, gives_way_ok_1=gwc)


# -- grounding zone nodes ----------------------------------------------------------------


def test_ground_safe_side_straight_clause():
    g = spec_map()["ground_safe_side"]
    for sb, ps, thr in product(range(3), range(3), range(3)):
        assert truth(g, meas_ground_sb=sb, meas_ground_ps=ps,
                     safe_ground_side=thr, meas_course_change=STRAIGHT)
    assert truth(g, meas_ground_sb=5, meas_ground_ps=0, safe_ground_side=2, meas_course_change=SB)
    assert not truth(g, meas_ground_sb=0, meas_ground_ps=5, safe_ground_side=2, meas_course_change=SB)
    assert truth(g, meas_ground_sb=0, meas_ground_ps=5, safe_ground_side=2, meas_course_change=PORT)


def test_ground_safe_front_turn_clause():
    g = spec_map()["ground_safe_front"]
    for front, thr in product(range(3), range(3)):
        assert truth(g, meas_ground_front=front, safe_ground_front=thr, meas_course_change=SB)
        assert truth(g, meas_ground_front=front, safe_ground_front=thr, meas_course_change=PORT)
    assert truth(g, meas_ground_front=5, safe_ground_front=2, meas_course_change=STRAIGHT)
    assert not truth(g, meas_ground_front=2, safe_ground_front=2, meas_course_change=STRAIGHT)


def test_ground_safe_truth_table():
    g = spec_map()["ground_safe"]
    want = {(TRUE, TRUE): True, (TRUE, FALSE): False, (FALSE, TRUE): False, (FALSE, FALSE): False}
    for (side, front), value in want.items():
        assert truth(g, ground_safe_side=side, ground_safe_front=front) is value


# -- per-ship and global compatibility ------------------------------------------------------


def test_ship_compatible_combines_colav_nav_and_grounding():
    sc = spec_map()["ship_compatible_1"]
    assert truth(sc, colav_ok_1=TRUE, nav_maneuver_ok_1=FALSE, ground_safe=TRUE, ground_intent=FALSE)
    assert truth(sc, colav_ok_1=FALSE, nav_maneuver_ok_1=TRUE, ground_safe=TRUE, ground_intent=FALSE)
    assert truth(sc, colav_ok_1=TRUE, nav_maneuver_ok_1=FALSE, ground_safe=FALSE, ground_intent=TRUE)
    assert not truth(sc, colav_ok_1=FALSE, nav_maneuver_ok_1=FALSE, ground_safe=TRUE, ground_intent=FALSE)
    assert not truth(sc, colav_ok_1=TRUE, nav_maneuver_ok_1=TRUE, ground_safe=FALSE, ground_intent=FALSE)


def test_compatible_disjunction_arms():
    c1 = spec_map()["compatible"]
    assert truth(c1, ship_compatible_1=TRUE, unmodeled=FALSE)
    assert truth(c1, ship_compatible_1=FALSE, unmodeled=TRUE)
    assert not truth(c1, ship_compatible_1=FALSE, unmodeled=FALSE)
    c2 = spec_map(2)["compatible"]
    assert truth(c2, ship_compatible_1=TRUE, ship_compatible_2=TRUE, unmodeled=FALSE)
    assert not truth(c2, ship_compatible_1=TRUE, ship_compatible_2=FALSE, unmodeled=FALSE)
    assert truth(c2, ship_compatible_1=FALSE, ship_compatible_2=FALSE, unmodeled=TRUE)


# -- measurement vector encoding -------------------------------------------------------------


def sample_vector():
    ships = (
        ShipMeasurements(dcpa_bin=4, front_cross_bin=9, midpoint_bin=2, tcpa_bin=7,
                         passed=False, pass_side=Side.PORT, midpoint_side=Side.STARBOARD,
                         situation=Situation.HEAD_ON),
    )
    return MeasurementVector(
        ships=ships, course_change=Turn.PORT, speed_change=SpeedTrend.NONE,
        course_changing=True, ground_sb_bin=9, ground_ps_bin=9, ground_front_bin=9,
        wp_bearing=Trend.DECREASING, wp_distance=Trend.DECREASING, wp_ahead=True,
    )


def test_as_states_covers_every_measurement_node():
    states = sample_vector().as_states()
    assert sorted(states) == sorted(measurement_ids(1))


def test_as_states_enum_encoding():
    states = sample_vector().as_states()
    assert states["meas_course_change"] == PORT
    assert states["meas_speed_change"] == NONE
    assert states["meas_course_changing"] == TRUE
    assert states[ship("meas_pass_side", 1)] == PORT
    assert states[ship("meas_midpoint_side", 1)] == SB
    assert states[ship("meas_situation", 1)] == HEAD_ON
    assert states[ship("meas_passed", 1)] == FALSE
    assert states[ship("meas_dcpa", 1)] == 4
