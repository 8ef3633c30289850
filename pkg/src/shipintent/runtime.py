"""Online intention inference and candidate-maneuver scoring for one encounter.

A :class:`Session` tracks one reference vessel against a fixed set of obstacle
ships.  Every update appends the latest kinematic states, derives the binned
measurement vector, keeps the time-slice bookkeeping, and produces exact
posteriors over the intention roots together with the probabilities of the
interesting per-slice model nodes.

Exactness without the full sliced network
-----------------------------------------
Running variable elimination over the monolithic sliced network is exact but
becomes intractable as slices accumulate: every slice's compatibility finding
couples all intention roots at once.  The session exploits the structure of
the model instead:

* measurement roots are observed, and the course-change latches and the
  waypoint-maneuver node are deterministic functions of observed values, so
  every per-slice model node collapses to a boolean function of the intention
  roots alone;
* conditioning a slice's ``compatible`` node on ``true`` splits, once we
  branch on ``unmodeled`` and ``ground_intent``, into (a) a constraint on the
  collision-avoidance side (the roots feeding ``colav_ok``/``nav_maneuver_ok``)
  and (b) two independent unary constraints on the grounding thresholds;
* slices are conditionally independent given the roots, so each frozen
  slice contributes one cached boolean message and the running products are
  enough to answer every query.

Posterior masses combine the three branches (``unmodeled``; modelled with
ground intent; modelled without) in closed form.  The per-node truth tables
are built straight from the model registry, so this path and the monolithic
network can never disagree about the logic.

Scoring candidate maneuvers clones the current belief into a detached
single-slice view: the step posteriors enter as virtual evidence on the
intention roots, the candidate's measurements (taken at a configurable
lookahead along its trajectory) act as the slice observation, and the score
is the probability that the slice's ``compatible`` node is true.  Scoring
never mutates the session.

The joint intention space grows by a factor of 15 per obstacle ship, so exact
sessions are practical for a handful of obstacles (the usual one or two are
cheap).
"""

from __future__ import annotations

import hashlib
import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np

from . import nodes
from .bn import ContradictionError
from .discretize import Discretization, IntentionPriors, real_to_bin
from .geometry import (
    GeometryParams,
    PolygonMap,
    ShipState,
    SpeedTrend,
    Trend,
    Turn,
    Waypoint,
    angle_diff,
    classify_colregs,
    course_speed_changes,
    cpa_linear,
    cross_front_distance,
    grounding_measurements,
    has_passed,
    midpoint_cpa,
    passing_side,
    waypoint_measurements,
)
from .netbuild import _measurement_variable, intention_prior_vector
from .nodes import MeasurementVector, ShipMeasurements, ship

__all__ = [
    "SlicePolicy",
    "IntentionPosterior",
    "StepRecord",
    "CandidateScore",
    "ScoreResult",
    "Session",
    "init_session",
    "should_add_slice",
    "step_update",
    "measure_candidate",
    "score_candidates",
]

# Raw candidate scores below this are treated as flat zero.
SCORE_FLOOR = 1e-12
# A candidate counts as "still turning" at the lookahead point when its course
# changes faster than this (rad/s), probed over the preceding few seconds.
CANDIDATE_TURN_RATE = math.radians(1.0)
CANDIDATE_TURN_PROBE = 5.0

_GROUND_ROOTS = ("safe_ground_side", "safe_ground_front", "ground_intent", "unmodeled")


class CandidateTrack(Protocol):
    """Anything that can report a ship state along a hypothetical track."""

    def state_at(self, t: float) -> ShipState: ...


@dataclass(frozen=True)
class SlicePolicy:
    """When the live time slice freezes and a new one starts.

    A new slice opens once the live one is older than ``max_age`` seconds, or
    earlier (but not before ``min_age``) as soon as any tracked vessel has
    changed course or speed by more than the thresholds since the slice was
    created.
    """

    max_age: float = 60.0
    min_age: float = 10.0
    course_delta: float = math.radians(5.0)
    speed_delta: float = 0.5

    def __post_init__(self) -> None:
        if self.max_age <= 0.0 or self.min_age < 0.0:
            raise ValueError("slice ages must be positive")
        if self.course_delta <= 0.0 or self.speed_delta <= 0.0:
            raise ValueError("change thresholds must be positive")


@dataclass(frozen=True)
class IntentionPosterior:
    """Posterior marginals over every intention root, keyed by node id."""

    marginals: Mapping[str, tuple[float, ...]]

    def probs(self, node: str) -> tuple[float, ...]:
        return self.marginals[node]

    def p_true(self, node: str) -> float:
        probs = self.marginals[node]
        if len(probs) != 2:
            raise ValueError(f"{node!r} is not a binary intention node")
        return probs[1]


@dataclass(frozen=True)
class StepRecord:
    """One update's outputs: posteriors plus live-slice node probabilities."""

    t: float
    step_index: int
    slice_index: int
    added_slice: bool
    measurements: MeasurementVector
    posterior: IntentionPosterior
    node_probs: Mapping[str, float]


@dataclass(frozen=True)
class CandidateScore:
    index: int
    label: str
    raw: float
    score: float
    measurements: MeasurementVector


@dataclass(frozen=True)
class ScoreResult:
    """Normalized candidate scores; flags the all-incompatible fallback."""

    scores: tuple[CandidateScore, ...]
    all_incompatible: bool


# --------------------------------------------------------------------------
# Root-axis layout and per-slice messages
# --------------------------------------------------------------------------


class _Layout:
    """Axis bookkeeping for the joint over the collision-avoidance roots.

    The four grounding/escape roots never mix with the rest (see the module
    docstring), so the dense joint spans only the thresholds, compliance
    switches and per-ship priority/situation views.
    """

    def __init__(
        self,
        n_ships: int,
        priors: IntentionPriors,
        disc: Discretization,
        situations: Sequence | None,
    ) -> None:
        self.n_ships = n_ships
        self.disc = disc
        self.prior_vec: dict[str, np.ndarray] = {
            name: np.asarray(intention_prior_vector(name, priors, disc, situations), dtype=float)
            for name in nodes.intention_ids(n_ships)
        }
        self.f_roots = tuple(r for r in nodes.intention_ids(n_ships) if r not in _GROUND_ROOTS)
        self.cards = tuple(len(self.prior_vec[r]) for r in self.f_roots)
        self.shape = self.cards
        self.axis = {r: j for j, r in enumerate(self.f_roots)}
        rank = len(self.f_roots)
        self.axis_arrays = {
            r: np.arange(self.cards[j]).reshape((1,) * j + (-1,) + (1,) * (rank - 1 - j))
            for r, j in self.axis.items()
        }
        weight = np.array(1.0)
        for r in self.f_roots:
            weight = weight[..., None] * self.prior_vec[r]
        self.weight = weight  # prior mass over the joint, sums to 1

        self.specs = nodes.model_node_specs(n_ships)
        spec_ids = {s.node_id for s in self.specs}
        # uint8, not bool: gathered node values feed back in as integer
        # indices, and numpy would treat boolean arrays as masks instead.
        self.tables: dict[str, np.ndarray] = {}
        for spec in self.specs:
            cards = tuple(self._parent_card(p, spec_ids) for p in spec.parents)
            table = np.empty(cards, dtype=np.uint8)
            for combo in itertools.product(*(range(c) for c in cards)):
                table[combo] = 1 if spec.predicate(*combo) else 0
            self.tables[spec.node_id] = table

    def _parent_card(self, parent: str, spec_ids: set[str]) -> int:
        if parent in self.prior_vec:
            return len(self.prior_vec[parent])
        if parent.endswith("_prev") or parent in spec_ids:
            return 2
        return _measurement_variable(parent, self.disc).cardinality

    def marginal_axes(self, root: str) -> tuple[int, ...]:
        keep = self.axis[root]
        return tuple(j for j in range(len(self.f_roots)) if j != keep)


@dataclass
class _SliceMessage:
    """One slice's evidence, folded down to functions of the intention roots."""

    f_side: np.ndarray  # bool over the layout joint: all ships' caps hold
    v_side: np.ndarray  # bool per safe_ground_side bin
    v_front: np.ndarray  # bool per safe_ground_front bin
    nav_maneuver: bool
    turned_sb: int
    turned_port: int
    node_arrays: dict[str, np.ndarray]  # exported per-ship indicator arrays


_SKIP_NODES = {"ground_safe_side", "ground_safe_front", "ground_safe", "compatible"}
_EXPORT_BASES = ("colav_ok", "nav_maneuver_ok", "evasive_ok")


def _slice_message(
    layout: _Layout, meas_states: Mapping[str, int], sa_in: int, pa_in: int
) -> _SliceMessage:
    """Fold one slice's observations into boolean root-space indicators.

    Walks the model registry in dependency order, evaluating each node's
    truth table on numpy index arrays: observed measurements and latch
    carries enter as integers, intention roots as broadcast axis arrays, and
    previously folded nodes as boolean arrays.
    """
    values: dict[str, object] = dict(meas_states)
    values.update(layout.axis_arrays)
    values["turned_starboard_prev"] = sa_in
    values["turned_port_prev"] = pa_in

    bins = len(layout.prior_vec["safe_ground_side"])
    v_side = v_front = None
    for spec in layout.specs:
        table = layout.tables[spec.node_id]
        if spec.node_id == "ground_safe_side":
            v_side = table[
                values["meas_ground_sb"],
                values["meas_ground_ps"],
                np.arange(bins),
                values["meas_course_change"],
            ]
            continue
        if spec.node_id == "ground_safe_front":
            v_front = table[
                values["meas_ground_front"], np.arange(bins), values["meas_course_change"]
            ]
            continue
        if spec.node_id in _SKIP_NODES or spec.node_id.startswith("ship_compatible_"):
            continue
        idx = tuple(values[p] for p in spec.parents)
        values[spec.node_id] = table[idx]

    f_side = np.array(True)
    node_arrays: dict[str, np.ndarray] = {}
    for i in range(1, layout.n_ships + 1):
        colav = np.asarray(values[ship("colav_ok", i)], dtype=bool)
        nav_ok = np.asarray(values[ship("nav_maneuver_ok", i)], dtype=bool)
        f_side = f_side & (colav | nav_ok)
        node_arrays[ship("colav_ok", i)] = colav
        node_arrays[ship("nav_maneuver_ok", i)] = nav_ok
        node_arrays[ship("evasive_ok", i)] = np.asarray(values[ship("evasive_ok", i)], dtype=bool)
    return _SliceMessage(
        f_side=np.broadcast_to(np.asarray(f_side, dtype=bool), layout.shape),
        v_side=np.asarray(v_side, dtype=bool),
        v_front=np.asarray(v_front, dtype=bool),
        nav_maneuver=bool(values["nav_maneuver"]),
        turned_sb=int(values["turned_starboard"]),
        turned_port=int(values["turned_port"]),
        node_arrays=node_arrays,
    )


def _branch_masses(
    layout: _Layout, z_f: float, z_s: float, z_fr: float
) -> tuple[float, float, float]:
    """Evidence mass of the three branches: unmodeled / ground / modelled."""
    p_u = float(layout.prior_vec["unmodeled"][1])
    p_g = float(layout.prior_vec["ground_intent"][1])
    a_u = p_u
    a_g = (1.0 - p_u) * z_f * p_g
    a_s = (1.0 - p_u) * z_f * (1.0 - p_g) * z_s * z_fr
    return a_u, a_g, a_s


def _posterior_bundle(
    layout: _Layout,
    frozen_f: np.ndarray,
    frozen_vs: np.ndarray,
    frozen_vf: np.ndarray,
    live: _SliceMessage,
) -> tuple[IntentionPosterior, dict[str, float]]:
    """Exact posteriors and live-node probabilities from the slice messages."""
    joint = frozen_f & live.f_side
    wm = layout.weight * joint
    z_f = float(wm.sum())

    pi_s = layout.prior_vec["safe_ground_side"]
    pi_f = layout.prior_vec["safe_ground_front"]
    u_s = pi_s * (frozen_vs & live.v_side)
    u_f = pi_f * (frozen_vf & live.v_front)
    z_s, z_fr = float(u_s.sum()), float(u_f.sum())

    p_u = float(layout.prior_vec["unmodeled"][1])
    p_g = float(layout.prior_vec["ground_intent"][1])
    a_u, a_g, a_s = _branch_masses(layout, z_f, z_s, z_fr)
    total = a_u + a_g + a_s
    if total <= 0.0:
        raise ContradictionError(
            "no intention assignment explains the observed behaviour", diagnosis="compatible"
        )

    rest = 1.0 - p_u
    marg: dict[str, tuple[float, ...]] = {}
    f_weight = rest * (p_g + (1.0 - p_g) * z_s * z_fr)
    for root in layout.f_roots:
        m_root = wm.sum(axis=layout.marginal_axes(root))
        vec = (a_u * layout.prior_vec[root] + f_weight * m_root) / total
        marg[root] = tuple(vec.tolist())
    vec_s = ((a_u + a_g) * pi_s + rest * z_f * (1.0 - p_g) * z_fr * u_s) / total
    vec_f = ((a_u + a_g) * pi_f + rest * z_f * (1.0 - p_g) * z_s * u_f) / total
    marg["safe_ground_side"] = tuple(vec_s.tolist())
    marg["safe_ground_front"] = tuple(vec_f.tolist())
    g_true = p_g * (p_u + rest * z_f)
    g_false = (1.0 - p_g) * (p_u + rest * z_f * z_s * z_fr)
    marg["ground_intent"] = (g_false / total, g_true / total)
    marg["unmodeled"] = ((a_g + a_s) / total, a_u / total)
    ordered = {name: marg[name] for name in nodes.intention_ids(layout.n_ships)}

    node_probs: dict[str, float] = {}
    post_weight = a_g + a_s
    for name, arr in live.node_arrays.items():
        e_prior = float((layout.weight * arr).sum())
        e_post = float((wm * arr).sum()) / z_f if z_f > 0.0 else 0.0
        node_probs[name] = (a_u * e_prior + post_weight * e_post) / total
    s_live = float((pi_s * live.v_side).sum())
    f_live = float((pi_f * live.v_front).sum())
    node_probs["ground_safe_side"] = ((a_u + a_g) * s_live + a_s) / total
    node_probs["ground_safe_front"] = ((a_u + a_g) * f_live + a_s) / total
    node_probs["nav_maneuver"] = float(live.nav_maneuver)
    node_probs["turned_starboard"] = float(live.turned_sb)
    node_probs["turned_port"] = float(live.turned_port)
    return IntentionPosterior(ordered), node_probs


# --------------------------------------------------------------------------
# Session state
# --------------------------------------------------------------------------


@dataclass
class _SliceState:
    created_t: float
    base_courses: tuple[float, ...]
    base_sogs: tuple[float, ...]
    sa_in: int
    pa_in: int
    meas: MeasurementVector | None = None
    message: _SliceMessage | None = None


class Session:
    """Belief state over one encounter; build with :func:`init_session`."""

    def __init__(
        self,
        own: ShipState,
        obstacles: Sequence[ShipState],
        *,
        priors: IntentionPriors,
        disc: Discretization,
        geom: GeometryParams,
        policy: SlicePolicy,
        lookahead: float,
        hazard: PolygonMap | None,
        waypoint: Waypoint | None,
    ) -> None:
        if not obstacles:
            raise ValueError("a session needs at least one obstacle ship")
        for obs in obstacles:
            if obs.t != own.t:
                raise ValueError("obstacle states must carry the reference timestamp")
        if lookahead < 0.0:
            raise ValueError("lookahead must be non-negative")
        self.priors = priors
        self.disc = disc
        self.geom = geom
        self.policy = policy
        self.lookahead = lookahead
        self.hazard = hazard
        self.waypoint = waypoint
        self.n_ships = len(obstacles)
        self.anchors = tuple(classify_colregs(own, obs, geom) for obs in obstacles)
        self.layout = _Layout(self.n_ships, priors, disc, self.anchors)

        self._own: list[ShipState] = [own]
        self._obstacles: list[list[ShipState]] = [[obs] for obs in obstacles]
        self._slices: list[_SliceState] = [
            _SliceState(
                created_t=own.t,
                base_courses=self._courses(own, obstacles),
                base_sogs=self._sogs(own, obstacles),
                sa_in=nodes.FALSE,
                pa_in=nodes.FALSE,
            )
        ]
        self._frozen_f = np.ones(self.layout.shape, dtype=bool)
        self._frozen_vs = np.ones(disc.ground_side.bins, dtype=bool)
        self._frozen_vf = np.ones(disc.ground_front.bins, dtype=bool)
        self._step_index = -1
        self.records: list[StepRecord] = []
        self._refresh(added_slice=False)

    @staticmethod
    def _courses(own: ShipState, obstacles: Sequence[ShipState]) -> tuple[float, ...]:
        return (own.cog,) + tuple(o.cog for o in obstacles)

    @staticmethod
    def _sogs(own: ShipState, obstacles: Sequence[ShipState]) -> tuple[float, ...]:
        return (own.sog,) + tuple(o.sog for o in obstacles)

    # -- read-only views ---------------------------------------------------

    @property
    def now(self) -> float:
        return self._own[-1].t

    @property
    def own_state(self) -> ShipState:
        return self._own[-1]

    @property
    def obstacle_states(self) -> tuple[ShipState, ...]:
        return tuple(track[-1] for track in self._obstacles)

    @property
    def start_course(self) -> float:
        return self._own[0].cog

    @property
    def start_sog(self) -> float:
        return self._own[0].sog

    @property
    def slice_count(self) -> int:
        return len(self._slices)

    @property
    def last_record(self) -> StepRecord:
        return self.records[-1]

    def slice_measurements(self) -> tuple[MeasurementVector, ...]:
        """Final (frozen) or current (live) measurement vector per slice."""
        return tuple(s.meas for s in self._slices if s.meas is not None)

    def slice_carries(self) -> tuple[tuple[int, int], ...]:
        """Latch carry-in states (turned starboard/port) per slice."""
        return tuple((s.sa_in, s.pa_in) for s in self._slices)

    # -- measurement assembly ----------------------------------------------

    def _ship_block(self, ref: ShipState, obs: ShipState) -> ShipMeasurements:
        tcpa, dcpa = cpa_linear(ref, obs)
        front = cross_front_distance(ref, obs)
        mid_dist, mid_side = midpoint_cpa(ref, obs)
        return ShipMeasurements(
            dcpa_bin=real_to_bin(dcpa, self.disc.cpa),
            front_cross_bin=real_to_bin(front, self.disc.front_cross),
            midpoint_bin=real_to_bin(mid_dist, self.disc.midpoint),
            tcpa_bin=real_to_bin(tcpa, self.disc.time_to_cpa),
            passed=has_passed(ref, obs),
            pass_side=passing_side(ref, obs),
            midpoint_side=mid_side,
            situation=classify_colregs(ref, obs, self.geom),
        )

    def _ground_bins(self, state: ShipState) -> tuple[int, int, int]:
        if self.hazard is None or self.hazard.is_empty:
            sb = ps = fr = math.inf
        else:
            sb, ps, fr = grounding_measurements(state, self.hazard, self.geom)
        return (
            real_to_bin(sb, self.disc.ground_side),
            real_to_bin(ps, self.disc.ground_side),
            real_to_bin(fr, self.disc.ground_front),
        )

    def _measure_now(self) -> MeasurementVector:
        own = self._own[-1]
        cic, cis, ccc = course_speed_changes(self._own, self.geom)
        sb_bin, ps_bin, fr_bin = self._ground_bins(own)
        if self.waypoint is None:
            wprb = wprd = Trend.NEITHER
            ahead = False
        else:
            wprb, wprd, ahead = waypoint_measurements(self._own, self.waypoint, self.geom)
        return MeasurementVector(
            ships=tuple(self._ship_block(own, track[-1]) for track in self._obstacles),
            course_change=cic,
            speed_change=cis,
            course_changing=ccc,
            ground_sb_bin=sb_bin,
            ground_ps_bin=ps_bin,
            ground_front_bin=fr_bin,
            wp_bearing=wprb,
            wp_distance=wprd,
            wp_ahead=ahead,
        )

    # -- slice lifecycle and posteriors --------------------------------------

    def _live(self) -> _SliceState:
        return self._slices[-1]

    def _freeze_live(self, t: float, own: ShipState, obstacles: Sequence[ShipState]) -> None:
        live = self._live()
        assert live.message is not None
        self._frozen_f = self._frozen_f & live.message.f_side
        self._frozen_vs = self._frozen_vs & live.message.v_side
        self._frozen_vf = self._frozen_vf & live.message.v_front
        sa, pa = live.message.turned_sb, live.message.turned_port
        live.message = None
        self._slices.append(
            _SliceState(
                created_t=t,
                base_courses=self._courses(own, obstacles),
                base_sogs=self._sogs(own, obstacles),
                sa_in=sa,
                pa_in=pa,
            )
        )

    def _refresh(self, added_slice: bool) -> StepRecord:
        live = self._live()
        live.meas = self._measure_now()
        live.message = _slice_message(
            self.layout, live.meas.as_states(), live.sa_in, live.pa_in
        )
        posterior, node_probs = _posterior_bundle(
            self.layout, self._frozen_f, self._frozen_vs, self._frozen_vf, live.message
        )
        self._step_index += 1
        record = StepRecord(
            t=self.now,
            step_index=self._step_index,
            slice_index=len(self._slices) - 1,
            added_slice=added_slice,
            measurements=live.meas,
            posterior=posterior,
            node_probs=node_probs,
        )
        self.records.append(record)
        return record

    def state_hash(self) -> str:
        """Digest of the full belief state; scoring must leave it unchanged."""
        h = hashlib.sha256()
        h.update(f"{self.n_ships},{self.disc.cpa.bins},{self._step_index}".encode())
        for track in [self._own, *self._obstacles]:
            arr = np.array([(s.t, s.x, s.y, s.sog, s.cog) for s in track], dtype=np.float64)
            h.update(arr.tobytes())
        for s in self._slices:
            h.update(f"{s.created_t},{s.sa_in},{s.pa_in}".encode())
            if s.meas is not None:
                h.update(repr(sorted(s.meas.as_states().items())).encode())
        h.update(self._frozen_f.tobytes())
        h.update(self._frozen_vs.tobytes())
        h.update(self._frozen_vf.tobytes())
        record = self.last_record
        for name, probs in record.posterior.marginals.items():
            h.update(name.encode())
            h.update(np.asarray(probs, dtype=np.float64).tobytes())
        for name in sorted(record.node_probs):
            h.update(name.encode())
            h.update(np.float64(record.node_probs[name]).tobytes())
        return h.hexdigest()


# --------------------------------------------------------------------------
# Public API
# --------------------------------------------------------------------------


def init_session(
    own: ShipState,
    obstacles: Sequence[ShipState],
    *,
    priors: IntentionPriors | None = None,
    disc: Discretization | None = None,
    geom: GeometryParams | None = None,
    policy: SlicePolicy | None = None,
    lookahead: float = 60.0,
    hazard: PolygonMap | None = None,
    waypoint: Waypoint | None = None,
) -> Session:
    """Open a session at the first observation of an encounter.

    The situation each obstacle presents right now anchors that ship's
    situation-view prior for the whole session; the initial states also pin
    the course/speed baselines that the turn and speed-change measurements
    are judged against.
    """
    return Session(
        own,
        obstacles,
        priors=priors or IntentionPriors(),
        disc=disc or Discretization(),
        geom=geom or GeometryParams(),
        policy=policy or SlicePolicy(),
        lookahead=lookahead,
        hazard=hazard,
        waypoint=waypoint,
    )


def should_add_slice(session: Session, own: ShipState, obstacles: Sequence[ShipState]) -> bool:
    """Apply the slice policy to the incoming states."""
    live = session._live()
    age = own.t - live.created_t
    policy = session.policy
    if age > policy.max_age:
        return True
    if age < policy.min_age:
        return False
    courses = Session._courses(own, obstacles)
    sogs = Session._sogs(own, obstacles)
    for base_c, base_s, cog, sog in zip(live.base_courses, live.base_sogs, courses, sogs):
        if abs(angle_diff(cog, base_c)) > policy.course_delta:
            return True
        if abs(sog - base_s) > policy.speed_delta:
            return True
    return False


def step_update(session: Session, own: ShipState, obstacles: Sequence[ShipState]) -> StepRecord:
    """Ingest one synchronized set of states and return the updated beliefs."""
    if len(obstacles) != session.n_ships:
        raise ValueError(
            f"expected {session.n_ships} obstacle states, got {len(obstacles)}"
        )
    if own.t <= session.now:
        raise ValueError("updates must move strictly forward in time")
    for obs in obstacles:
        if obs.t != own.t:
            raise ValueError("obstacle states must carry the reference timestamp")
    added = should_add_slice(session, own, obstacles)
    if added:
        session._freeze_live(own.t, own, obstacles)
    session._own.append(own)
    for track, obs in zip(session._obstacles, obstacles):
        track.append(obs)
    return session._refresh(added_slice=added)


def _classify_turn(course: float, reference: float, threshold: float) -> Turn:
    delta = angle_diff(course, reference)
    if delta < -threshold:
        return Turn.STARBOARD
    if delta > threshold:
        return Turn.PORT
    return Turn.STRAIGHT


def measure_candidate(
    session: Session, candidate: CandidateTrack, *, lookahead: float | None = None
) -> MeasurementVector:
    """Measurement vector a candidate maneuver would produce.

    The candidate is evaluated at ``lookahead`` seconds from now: obstacle
    ships are extrapolated at constant velocity to that instant, the
    relative-motion measurements are taken there, and the course/speed
    classifications compare the candidate's lookahead state against the
    session's initial baselines.
    """
    horizon = session.lookahead if lookahead is None else lookahead
    if horizon < 0.0:
        raise ValueError("lookahead must be non-negative")
    t_now = session.now
    t_la = t_now + horizon
    cand_now = candidate.state_at(t_now)
    cand_la = candidate.state_at(t_la)
    obstacles_la = [obs.advanced(t_la - obs.t) for obs in session.obstacle_states]

    cic = _classify_turn(cand_la.cog, session.start_course, session.geom.course_change_threshold)
    dsog = cand_la.sog - session.start_sog
    if dsog > session.geom.speed_change_threshold:
        cis = SpeedTrend.HIGHER
    elif dsog < -session.geom.speed_change_threshold:
        cis = SpeedTrend.LOWER
    else:
        cis = SpeedTrend.NONE
    probe_dt = min(CANDIDATE_TURN_PROBE, horizon)
    if probe_dt > 0.0:
        probe = candidate.state_at(t_la - probe_dt)
        ccc = abs(angle_diff(cand_la.cog, probe.cog)) / probe_dt > CANDIDATE_TURN_RATE
    else:
        ccc = False

    sb_bin, ps_bin, fr_bin = session._ground_bins(cand_la)
    if session.waypoint is None or horizon <= 0.0:
        wprb = wprd = Trend.NEITHER
        ahead = False
        if session.waypoint is not None:
            wprb, wprd, ahead = waypoint_measurements(
                [cand_la], session.waypoint, session.geom
            )
    else:
        wprb, wprd, ahead = waypoint_measurements(
            [cand_now, cand_la],
            session.waypoint,
            replace(session.geom, wp_window=horizon),
        )
    return MeasurementVector(
        ships=tuple(session._ship_block(cand_la, obs) for obs in obstacles_la),
        course_change=cic,
        speed_change=cis,
        course_changing=ccc,
        ground_sb_bin=sb_bin,
        ground_ps_bin=ps_bin,
        ground_front_bin=fr_bin,
        wp_bearing=wprb,
        wp_distance=wprd,
        wp_ahead=ahead,
    )


def _virtual_root_dists(layout: _Layout, posterior: IntentionPosterior) -> dict[str, np.ndarray]:
    """Per-root distributions after posteriors re-enter as virtual evidence."""
    out: dict[str, np.ndarray] = {}
    for name, prior in layout.prior_vec.items():
        weighted = prior * np.asarray(posterior.marginals[name], dtype=float)
        total = weighted.sum()
        if total <= 0.0:
            raise ContradictionError(
                f"virtual evidence on {name!r} has no overlap with its prior", diagnosis=name
            )
        out[name] = weighted / total
    return out


def score_candidates(
    session: Session,
    candidates: Sequence[CandidateTrack],
    *,
    lookahead: float | None = None,
) -> ScoreResult:
    """Rank candidate maneuvers by compatibility with the inferred intentions.

    Each candidate's raw score is the probability that a detached, single
    time slice observing the candidate's lookahead measurements (with the
    current turn latches carried in and the step posteriors applied as
    virtual evidence on the intention roots) finds the maneuver compatible.
    Raw scores below :data:`SCORE_FLOOR` clamp to zero; if every candidate
    clamps, the normalized scores fall back to uniform and the result is
    flagged ``all_incompatible``.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("need at least one candidate to score")
    layout = session.layout
    record = session.last_record
    dists = _virtual_root_dists(layout, record.posterior)
    weight = np.array(1.0)
    for root in layout.f_roots:
        weight = weight[..., None] * dists[root]
    rho_u = float(dists["unmodeled"][1])
    rho_g = float(dists["ground_intent"][1])
    live = session._live()

    raws: list[float] = []
    vectors: list[MeasurementVector] = []
    for cand in candidates:
        meas = measure_candidate(session, cand, lookahead=lookahead)
        msg = _slice_message(
            layout, meas.as_states(), live.message.turned_sb, live.message.turned_port
        )
        z_f = float((weight * msg.f_side).sum())
        z_s = float((dists["safe_ground_side"] * msg.v_side).sum())
        z_fr = float((dists["safe_ground_front"] * msg.v_front).sum())
        raw = rho_u + (1.0 - rho_u) * z_f * (rho_g + (1.0 - rho_g) * z_s * z_fr)
        raws.append(0.0 if raw < SCORE_FLOOR else raw)
        vectors.append(meas)

    total = sum(raws)
    all_incompatible = total <= 0.0
    scores = tuple(
        CandidateScore(
            index=i,
            label=str(getattr(cand, "label", None) or i),
            raw=raw,
            score=(1.0 / len(raws)) if all_incompatible else raw / total,
            measurements=meas,
        )
        for i, (cand, raw, meas) in enumerate(zip(candidates, raws, vectors))
    )
    return ScoreResult(scores=scores, all_incompatible=all_incompatible)
