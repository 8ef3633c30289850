"""Fitting intention-threshold priors from a labeled encounter corpus.

Each recorded two-vessel encounter contributes one sample per threshold it
exercised: the tightest front-sector clearance during a crossing, the refined
closest-approach distance of an overtaking, half of it for a head-on (the
midpoint clearance), the time still to run until closest approach, and the
hazard clearances at the closest-approach state when land was near enough to
have mattered.  Clamped truncated-normal fits over those samples become the
:class:`~shipintent.discretize.IntentionPriors` a session runs with.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .discretize import Channel, Discretization, IntentionPriors, TruncNorm
from .geometry import (
    GeometryParams,
    PolygonMap,
    ShipState,
    grounding_measurements,
    segment_cpa,
)

__all__ = [
    "COLREGS_LABELS",
    "Encounter",
    "ExtractionError",
    "ExtractionResult",
    "ExtractionWarning",
    "ROI_HALF_WIDTH",
    "build_prior_config",
    "collect_samples",
    "extract_corpus",
    "find_cpa",
    "find_dist2grd_cpa",
    "find_isdf_vals",
    "fit_truncnorm",
    "merge_samples",
    "priors_from_result",
    "result_from_samples",
]

COLREGS_LABELS = ("head-on", "overtaking", "crossing")

#: Half-width of the square region of interest clipped around the
#: closest-approach position before scanning hazard vertices.
ROI_HALF_WIDTH = 10_000.0

#: Hazard clearances beyond this many meters are treated as "land did not
#: constrain the encounter" and contribute no sample.
DEFAULT_GROUND_THRESHOLD = 2_000.0

_FRONT_GATE_HALF_ANGLE = math.pi / 8.0


class ExtractionError(ValueError):
    """Invalid encounter data or an impossible fit request."""


class ExtractionWarning(UserWarning):
    """Recoverable extraction oddities: skipped tracks, fallback priors."""


@dataclass(frozen=True)
class Encounter:
    """One reference/obstacle vessel pair with a COLREGS situation label.

    ``origin`` records the lat/lon the planar coordinates were projected
    about, when the encounter came from geographic data.
    """

    reference: tuple[ShipState, ...]
    obstacle: tuple[ShipState, ...]
    label: str | None = None
    name: str = ""
    origin: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "reference", tuple(self.reference))
        object.__setattr__(self, "obstacle", tuple(self.obstacle))
        for role, traj in (("reference", self.reference), ("obstacle", self.obstacle)):
            if len(traj) < 2:
                raise ExtractionError(
                    f"encounter {self.name!r}: {role} trajectory needs >= 2 samples"
                )
            ts = [s.t for s in traj]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ExtractionError(
                    f"encounter {self.name!r}: {role} timestamps must strictly increase"
                )
        if (
            self.reference[-1].t < self.obstacle[0].t
            or self.obstacle[-1].t < self.reference[0].t
        ):
            raise ExtractionError(
                f"encounter {self.name!r}: trajectories never overlap in time"
            )
        if self.label is not None and self.label not in COLREGS_LABELS:
            raise ExtractionError(
                f"encounter {self.name!r}: label must be one of {COLREGS_LABELS}, "
                f"got {self.label!r}"
            )

    @property
    def duration(self) -> float:
        return self.reference[-1].t - self.reference[0].t


def _paired_states(enc: Encounter) -> Iterable[tuple[ShipState, ShipState]]:
    """Sample-index-aligned (reference, obstacle) state pairs."""
    return zip(enc.reference, enc.obstacle)


def find_isdf_vals(
    encounters: Iterable[Encounter], params: GeometryParams = GeometryParams()
) -> list[float]:
    """Per crossing encounter, the closest the obstacle ever got while inside
    the reference ship's front cone.

    The gate is the normalized dot product of the reference heading and the
    relative position exceeding cos(pi/8), i.e. the obstacle bearing within
    22.5 degrees of dead ahead.  Encounters where the obstacle never enters
    the cone contribute nothing.
    """
    del params  # the front gate is a fixed 45-degree cone
    vals: list[float] = []
    for enc in encounters:
        if enc.label != "crossing":
            raise ExtractionError(
                f"encounter {enc.name!r}: front-crossing clearances are only "
                f"defined for crossing encounters, got label {enc.label!r}"
            )
        best = math.inf
        for ref, obs in _paired_states(enc):
            rel = obs.position - ref.position
            dist = float(np.hypot(*rel))
            if dist <= 0.0:
                continue
            if float(ref.heading @ rel) / dist > math.cos(_FRONT_GATE_HALF_ANGLE):
                best = min(best, dist)
        if math.isfinite(best):
            vals.append(best)
    return vals


def find_cpa(encounters: Iterable[Encounter]) -> tuple[list[float], list[float]]:
    """Refined distance and time of closest approach per encounter.

    Tracks the running minimum of the sampled inter-vessel distance; every new
    minimum is refined with :func:`segment_cpa` over the bracketing samples so
    a crossing that happens between two fixes is not missed.  Times count from
    the reference trajectory's first timestamp.
    """
    dcpa_vals: list[float] = []
    tcpa_vals: list[float] = []
    for enc in encounters:
        if len(enc.reference) < 2 or len(enc.obstacle) < 2:
            warnings.warn(
                f"encounter {enc.name!r}: fewer than 2 samples, skipping",
                ExtractionWarning,
                stacklevel=2,
            )
            continue
        t0 = enc.reference[0].t
        pairs = list(_paired_states(enc))
        min_dist = math.inf
        dcpa = math.inf
        tcpa = math.inf
        for i, (ref, obs) in enumerate(pairs):
            dist = float(np.hypot(*(obs.position - ref.position)))
            if dist >= min_dist:
                continue
            min_dist = dist
            if i + 1 < len(pairs):
                ref_next, obs_next = pairs[i + 1]
                t_opt, d_opt = segment_cpa(ref, ref_next, obs, obs_next)
            else:
                t_opt, d_opt = 0.0, dist
            if d_opt < dist:
                dcpa = d_opt
                tcpa = ref.t - t0 + t_opt
            else:
                dcpa = min_dist
                tcpa = ref.t - t0
        if math.isfinite(dcpa):
            dcpa_vals.append(dcpa)
            tcpa_vals.append(tcpa)
    return dcpa_vals, tcpa_vals


def _cpa_reference_state(enc: Encounter) -> ShipState:
    """Reference-ship state at the sampled minimum-distance timestep."""
    best = None
    best_dist = math.inf
    for ref, obs in _paired_states(enc):
        dist = float(np.hypot(*(obs.position - ref.position)))
        if dist < best_dist:
            best_dist = dist
            best = ref
    assert best is not None  # encounters are non-empty by construction
    return best


def _clip_roi(pmap: PolygonMap, x: float, y: float, half: float) -> PolygonMap:
    """Vertex subset of the map within a +-half box around (x, y).

    Only vertex distances matter downstream, so the survivors are packed into
    a single pseudo-ring rather than preserving polygon topology.
    """
    verts = pmap.vertices()
    if verts.shape[0] == 0:
        return PolygonMap()
    keep = (np.abs(verts[:, 0] - x) <= half) & (np.abs(verts[:, 1] - y) <= half)
    pts = verts[keep]
    if pts.shape[0] == 0:
        return PolygonMap()
    return PolygonMap(rings=(np.vstack([pts, pts[:1]]),))


def find_dist2grd_cpa(
    encounters: Iterable[Encounter],
    pmap: PolygonMap,
    dist_thresh: float = DEFAULT_GROUND_THRESHOLD,
    params: GeometryParams = GeometryParams(),
) -> tuple[list[float], list[float]]:
    """Hazard clearances at each encounter's closest-approach state.

    The map is clipped to a 10 km square region of interest around the
    reference ship's closest-approach position, then the nearest hazard vertex
    is found in the starboard, port, and front sectors of the ship domain.
    min(starboard, port) feeds the side list, front feeds the front list, and
    either only counts when at or below ``dist_thresh`` so open-water
    encounters don't masquerade as tight clearances.
    """
    sdgs_vals: list[float] = []
    sdgf_vals: list[float] = []
    for enc in encounters:
        state = _cpa_reference_state(enc)
        roi = _clip_roi(pmap, state.x, state.y, ROI_HALF_WIDTH)
        if roi.is_empty:
            continue
        sb, ps, fr = grounding_measurements(state, roi, params)
        side = min(sb, ps)
        if side <= dist_thresh:
            sdgs_vals.append(side)
        if fr <= dist_thresh:
            sdgf_vals.append(fr)
    return sdgs_vals, sdgf_vals


def fit_truncnorm(samples: Sequence[float], lo: float, hi: float) -> tuple[float, float]:
    """Sample mean and n-1 standard deviation after clamping into [lo, hi].

    A degenerate spread (all samples equal) is floored at 1% of the window so
    the resulting distribution stays usable, with a warning.
    """
    if not hi > lo:
        raise ExtractionError(f"truncation window must have hi > lo, got [{lo}, {hi}]")
    vals = np.clip(np.asarray(list(samples), dtype=float), lo, hi)
    if vals.size < 2:
        raise ExtractionError(f"need at least 2 samples to fit, got {vals.size}")
    mu = float(vals.mean())
    sigma = float(vals.std(ddof=1))
    if sigma == 0.0:
        sigma = 0.01 * (hi - lo)
        warnings.warn(
            f"degenerate fit: all {vals.size} samples equal {mu}; "
            f"flooring sigma to {sigma}",
            ExtractionWarning,
            stacklevel=2,
        )
    return mu, sigma


#: intention name -> (channel attribute, short description for reports)
_TARGETS = {
    "safe_front_cross": ("front_cross", "front clearance while crossing"),
    "safe_cpa": ("cpa", "closest approach while overtaking"),
    "safe_midpoint": ("midpoint", "midpoint clearance while head-on"),
    "ample_time": ("time_to_cpa", "time to closest approach"),
    "safe_ground_side": ("ground_side", "side hazard clearance"),
    "safe_ground_front": ("ground_front", "front hazard clearance"),
}


@dataclass(frozen=True)
class ExtractionResult:
    """Raw per-encounter samples plus the fits they produced.

    ``fitted`` maps intention names to (mu, sigma), or None where the corpus
    had too few samples and the stock prior was kept.
    """

    isdf_vals: tuple[float, ...]
    dcpa_vals: tuple[float, ...]
    tcpa_vals: tuple[float, ...]
    sdgs_vals: tuple[float, ...]
    sdgf_vals: tuple[float, ...]
    fitted: Mapping[str, tuple[float, float] | None]
    sample_counts: Mapping[str, int]

    def __post_init__(self) -> None:
        for name in ("isdf_vals", "dcpa_vals", "tcpa_vals", "sdgs_vals", "sdgf_vals"):
            vals = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, vals)
            if any(not math.isfinite(v) or v < 0.0 for v in vals):
                raise ExtractionError(f"{name} must be finite and non-negative")
        object.__setattr__(self, "fitted", dict(self.fitted))
        object.__setattr__(self, "sample_counts", dict(self.sample_counts))

    def report(self) -> str:
        """Human-readable summary: sample counts, fits, fallbacks."""
        lines = ["extraction report", "=================="]
        for name, (_, desc) in _TARGETS.items():
            count = self.sample_counts.get(name, 0)
            fit = self.fitted.get(name)
            if fit is None:
                lines.append(
                    f"{name:<18} {desc}: {count} samples, kept default prior"
                )
            else:
                mu, sigma = fit
                lines.append(
                    f"{name:<18} {desc}: {count} samples, "
                    f"mean {mu:.1f} sd {sigma:.1f}"
                )
        return "\n".join(lines)


def collect_samples(
    encounters: Sequence[Encounter],
    pmap: PolygonMap,
    *,
    dist_thresh: float = DEFAULT_GROUND_THRESHOLD,
    params: GeometryParams = GeometryParams(),
) -> dict[str, list[float]]:
    """Per-threshold sample lists from one corpus chunk.

    Keys are the six threshold names plus ``dcpa`` (closest approach for
    every encounter, label aside).  Chunks processed independently merge by
    key-wise concatenation — see :func:`merge_samples`.
    """
    encounters = list(encounters)
    by_label: dict[str, list[Encounter]] = {label: [] for label in COLREGS_LABELS}
    for enc in encounters:
        if enc.label is None:
            warnings.warn(
                f"encounter {enc.name!r}: unlabeled, only usable for timing "
                f"and hazard clearances",
                ExtractionWarning,
                stacklevel=2,
            )
        else:
            by_label[enc.label].append(enc)
    dcpa_overtaking, _ = find_cpa(by_label["overtaking"])
    dcpa_head_on, _ = find_cpa(by_label["head-on"])
    dcpa_all, tcpa_all = find_cpa(encounters)
    sdgs, sdgf = find_dist2grd_cpa(encounters, pmap, dist_thresh, params)
    return {
        "safe_front_cross": find_isdf_vals(by_label["crossing"], params),
        "safe_cpa": dcpa_overtaking,
        "safe_midpoint": [d / 2.0 for d in dcpa_head_on],
        "ample_time": tcpa_all,
        "safe_ground_side": sdgs,
        "safe_ground_front": sdgf,
        "dcpa": dcpa_all,
    }


def merge_samples(parts: Iterable[Mapping[str, list[float]]]) -> dict[str, list[float]]:
    """Concatenate chunked :func:`collect_samples` outputs in chunk order."""
    merged: dict[str, list[float]] = {name: [] for name in (*_TARGETS, "dcpa")}
    for part in parts:
        for name, vals in part.items():
            merged[name].extend(vals)
    return merged


def result_from_samples(
    samples: Mapping[str, list[float]], disc: Discretization = Discretization()
) -> ExtractionResult:
    """Fit whatever the collected samples support (>= 2 values per target)."""
    fitted: dict[str, tuple[float, float] | None] = {}
    counts: dict[str, int] = {}
    for name, (channel_attr, _) in _TARGETS.items():
        channel: Channel = getattr(disc, channel_attr)
        vals = samples[name]
        counts[name] = len(vals)
        fitted[name] = (
            fit_truncnorm(vals, 0.0, channel.upper) if len(vals) >= 2 else None
        )
    return ExtractionResult(
        isdf_vals=tuple(samples["safe_front_cross"]),
        dcpa_vals=tuple(samples["dcpa"]),
        tcpa_vals=tuple(samples["ample_time"]),
        sdgs_vals=tuple(samples["safe_ground_side"]),
        sdgf_vals=tuple(samples["safe_ground_front"]),
        fitted=fitted,
        sample_counts=counts,
    )


def extract_corpus(
    encounters: Sequence[Encounter],
    pmap: PolygonMap,
    disc: Discretization = Discretization(),
    *,
    dist_thresh: float = DEFAULT_GROUND_THRESHOLD,
    params: GeometryParams = GeometryParams(),
) -> ExtractionResult:
    """Run every extraction pass over the corpus and fit what it supports."""
    return result_from_samples(
        collect_samples(encounters, pmap, dist_thresh=dist_thresh, params=params),
        disc,
    )


def priors_from_result(
    result: ExtractionResult,
    disc: Discretization = Discretization(),
    base: IntentionPriors | None = None,
) -> IntentionPriors:
    """Swap fitted thresholds into ``base``, warning where the fit fell back."""
    base = IntentionPriors() if base is None else base
    updates: dict[str, TruncNorm] = {}
    for name, (channel_attr, desc) in _TARGETS.items():
        fit = result.fitted[name]
        if fit is None:
            stock: TruncNorm = getattr(base, name)
            warnings.warn(
                f"{name} ({desc}): {result.sample_counts[name]} samples in "
                f"corpus, keeping default N({stock.mu}, {stock.sigma})",
                ExtractionWarning,
                stacklevel=2,
            )
            continue
        channel: Channel = getattr(disc, channel_attr)
        updates[name] = TruncNorm(fit[0], fit[1], 0.0, channel.upper)
    return replace(base, **updates)


def build_prior_config(
    encounters: Sequence[Encounter],
    pmap: PolygonMap,
    disc: Discretization = Discretization(),
    *,
    dist_thresh: float = DEFAULT_GROUND_THRESHOLD,
    base: IntentionPriors | None = None,
    params: GeometryParams = GeometryParams(),
) -> IntentionPriors:
    """Fitted priors for the six real-valued thresholds, defaults elsewhere.

    Binary and categorical priors pass through from ``base`` untouched; any
    threshold whose sample list came up short keeps its ``base`` distribution,
    with a warning naming it.
    """
    result = extract_corpus(
        encounters, pmap, disc, dist_thresh=dist_thresh, params=params
    )
    return priors_from_result(result, disc, base)
