"""Shared builders for the test suite: random networks, tracks, corpora."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from shipintent.bn import Factor, Network, binned, set_evidence, set_virtual_evidence
from shipintent.dataio import math_to_compass
from shipintent.extract import Encounter
from shipintent.geometry import ShipState, local_to_geo


def random_network(
    rng: np.random.Generator,
    max_vars: int = 8,
    max_card: int = 4,
    joint_cap: int | None = None,
) -> tuple[Network, list[str]]:
    """A random DAG with random CPTs plus random hard and virtual evidence.

    Returns the network and the ids of the non-hard-evidence variables
    (valid query targets).
    """
    while True:
        n = int(rng.integers(3, max_vars + 1))
        cards = rng.integers(2, max_card + 1, size=n)
        if joint_cap is None or int(np.prod(cards.astype(np.int64))) <= joint_cap:
            break
    net = Network()
    variables = []
    for i in range(n):
        var = binned(f"v{i}", int(cards[i]))
        n_parents = min(i, int(rng.integers(0, 4)))
        picked = rng.choice(i, size=n_parents, replace=False) if n_parents else []
        parents = [variables[int(j)] for j in sorted(picked)]
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


def straight_track(
    start_xy: tuple[float, float],
    cog: float,
    sog: float,
    *,
    t0: float = 0.0,
    n: int = 10,
    dt: float = 10.0,
) -> list[ShipState]:
    """Constant course/speed samples, the workhorse fixture track."""
    x0, y0 = start_xy
    vx, vy = sog * math.cos(cog), sog * math.sin(cog)
    return [
        ShipState(t0 + k * dt, x0 + vx * k * dt, y0 + vy * k * dt, sog, cog)
        for k in range(n)
    ]


def straight_encounter(
    ref_start: tuple[float, float],
    ref_cog: float,
    ref_sog: float,
    obs_start: tuple[float, float],
    obs_cog: float,
    obs_sog: float,
    *,
    label: str | None = None,
    name: str = "enc",
    n: int = 61,
    dt: float = 10.0,
    origin: tuple[float, float] | None = None,
) -> Encounter:
    return Encounter(
        reference=tuple(straight_track(ref_start, ref_cog, ref_sog, n=n, dt=dt)),
        obstacle=tuple(straight_track(obs_start, obs_cog, obs_sog, n=n, dt=dt)),
        label=label,
        name=name,
        origin=origin,
    )


def corpus_rows(
    enc_id: str,
    role: str,
    mmsi: str,
    origin: tuple[float, float],
    states: list[ShipState],
) -> list[list[str]]:
    """CSV rows (geographic, compass degrees) for one trajectory."""
    rows = []
    for s in states:
        lat, lon = local_to_geo(s.x, s.y, origin)
        rows.append(
            [
                enc_id,
                role,
                mmsi,
                f"{s.t:.1f}",
                f"{lat:.8f}",
                f"{lon:.8f}",
                f"{s.sog:.3f}",
                f"{math_to_compass(s.cog):.4f}",
            ]
        )
    return rows


CORPUS_HEADER = [
    "encounter_id",
    "role",
    "mmsi",
    "timestamp",
    "lat",
    "lon",
    "sog_mps",
    "cog_deg",
]


def write_corpus(path: Path, rows: list[list[str]]) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CORPUS_HEADER)
        writer.writerows(rows)
    return path


def write_labels(path: Path, labels: dict[str, str]) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["encounter_id", "label"])
        writer.writerows(sorted(labels.items()))
    return path


def square_ring(
    cx: float, cy: float, half: float, *, closed: bool = True
) -> np.ndarray:
    pts = [
        (cx - half, cy - half),
        (cx + half, cy - half),
        (cx + half, cy + half),
        (cx - half, cy + half),
    ]
    if closed:
        pts.append(pts[0])
    return np.asarray(pts, dtype=float)
