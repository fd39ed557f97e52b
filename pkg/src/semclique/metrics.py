"""Forecast metrics: ADE, FDE, Best-of-N selection, mAC and collision rate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .predictors import PredictionSet, TrajectoryMode
from .scene import AgentState, Clique, Scene, TrajectoryHistory

DEFAULT_MU_FLOOR = 0.5
DEFAULT_STAMPS = (1.0, 2.0, 3.0, 4.0)


def _states(traj) -> list[AgentState]:
    if isinstance(traj, TrajectoryMode):
        return list(traj.states)
    if isinstance(traj, TrajectoryHistory):
        return [s for _, s in traj.states]
    return list(traj)


def _xy(traj) -> np.ndarray:
    if isinstance(traj, np.ndarray):
        return traj.reshape(-1, 2).astype(float)
    if isinstance(traj, (TrajectoryMode, TrajectoryHistory)):
        return traj.positions()
    items = list(traj)
    if items and isinstance(items[0], AgentState):
        return np.array([[s.x, s.y] for s in items], dtype=float)
    return np.asarray(items, dtype=float).reshape(-1, 2)


def _aligned(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    p, g = _xy(pred), _xy(gt)
    if len(p) != len(g):
        raise ValueError(f"trajectory length mismatch: {len(p)} vs {len(g)}")
    return p, g


def ade(pred, gt) -> float:
    """Mean L2 distance over aligned timesteps."""
    p, g = _aligned(pred, gt)
    if len(p) == 0:
        raise ValueError("empty trajectory")
    return float(np.mean(np.hypot(p[:, 0] - g[:, 0], p[:, 1] - g[:, 1])))


def stamp_index(at: float, dt: float, length: int) -> int:
    """Row of a trajectory that starts one ``dt`` after the present for time ``at``."""
    k = at / dt
    if abs(k - round(k)) > 1e-9 or not 1 <= round(k) <= length:
        raise ValueError(f"timestamp {at}s is not a step within the {length * dt:g}s horizon")
    return int(round(k)) - 1


def fde(pred, gt, at: float | None = None, dt: float | None = None) -> float:
    """L2 distance at time ``at`` (seconds after the present); final step if omitted."""
    p, g = _aligned(pred, gt)
    if len(p) == 0:
        raise ValueError("empty trajectory")
    i = len(p) - 1 if at is None else stamp_index(at, dt, len(p))
    return float(math.hypot(p[i, 0] - g[i, 0], p[i, 1] - g[i, 1]))


def top_n(modes: Sequence[TrajectoryMode], n: int) -> list[TrajectoryMode]:
    """The ``n`` highest-confidence modes, ties by mode index."""
    if not modes:
        raise ValueError("empty mode list")
    if not 1 <= n <= len(modes):
        raise ValueError(f"n must be in [1, {len(modes)}], got {n}")
    order = sorted(range(len(modes)), key=lambda i: (-modes[i].confidence, i))
    return [modes[i] for i in order[:n]]


def best_of_n(modes: Sequence[TrajectoryMode], n: int, gt=None) -> TrajectoryMode:
    """Among the top-``n`` modes, the one with the smallest final displacement to ``gt``.

    Without ground truth this is simply the most confident mode. Ties keep the
    more confident candidate.
    """
    cands = top_n(modes, n)
    if gt is None:
        return cands[0]
    g = _xy(gt)[: len(cands[0])]
    return min(cands, key=lambda m: fde(m, g))


def _gt_states(gt, length: int) -> list[AgentState]:
    st = _states(gt)
    if len(st) < length:
        raise ValueError(f"ground truth has {len(st)} steps, need {length}")
    return st[:length]


def mac_hits(
    predictions: PredictionSet,
    gt: Mapping[str, object],
    agent_ids: Sequence[str],
    eta: float,
    n: int,
    mu_floor: float,
    histories: Mapping[str, object],
) -> dict[str, bool]:
    """Per-agent true-positive flags for the mAC test."""
    out = {}
    for aid in agent_ids:
        if aid not in gt:
            raise ValueError(f"missing ground truth for agent {aid!r}")
        if aid not in predictions.modes:
            raise ValueError(f"missing prediction for agent {aid!r}")
        cands = top_n(predictions.modes[aid], n)
        g = _gt_states(gt[aid], len(cands[0]))
        final = g[-1]
        ux, uy = math.cos(final.heading), math.sin(final.heading)
        hist = _states(histories[aid])
        mu_lon = max(float(np.mean([abs(s.vx * ux + s.vy * uy) for s in hist])), mu_floor)
        mu_lat = max(float(np.mean([abs(-s.vx * uy + s.vy * ux) for s in hist])), mu_floor)
        tol_lon = eta / 3.0 * mu_lon
        tol_lat = eta / 3.0 * mu_lat
        hit = False
        for m in cands:
            last = m.states[-1]
            ex, ey = last.x - final.x, last.y - final.y
            if abs(ex * ux + ey * uy) <= tol_lon and abs(-ex * uy + ey * ux) <= tol_lat:
                hit = True
                break
        out[aid] = hit
    return out


def mac_per_clique(predictions, gt, cliques, eta, n, mu_floor, histories) -> list[float]:
    fractions = []
    for c in cliques:
        hits = mac_hits(predictions, gt, c.member_ids, eta, n, mu_floor, histories)
        fractions.append(sum(not h for h in hits.values()) / len(c))
    return fractions


def mac(
    predictions: PredictionSet,
    gt: Mapping[str, object],
    cliques: Sequence[Clique],
    eta: float,
    n: int,
    mu_floor: float = DEFAULT_MU_FLOOR,
    histories: Mapping[str, object] | None = None,
) -> float:
    """Mean over cliques of the fraction of members missed, in percent.

    A member is a hit when any of its ``n`` most confident modes ends within
    (eta/3) * mu of the true final position along both the longitudinal and the
    lateral axis of the true final heading. mu per axis is the mean absolute
    historical speed along that axis, floored at ``mu_floor``.
    """
    if histories is None:
        raise ValueError("histories are required to scale the thresholds")
    if not cliques:
        return 0.0
    fr = mac_per_clique(predictions, gt, cliques, eta, n, mu_floor, histories)
    return 100.0 * float(np.mean(fr))


def collision_rate(predictions: PredictionSet, scene: Scene) -> float:
    """Fraction of (agent pair, timestep) cells where top modes overlap footprints."""
    ids = predictions.agent_ids
    if len(ids) < 2:
        return 0.0
    tracks = [predictions.top_mode(a).positions() for a in ids]
    T = len(tracks[0])
    if any(len(tr) != T for tr in tracks) or T == 0:
        raise ValueError("predicted tracks must share a nonzero length")
    pos = np.stack(tracks)  # (A, T, 2)
    radii = np.array([scene.agent(a).agent_type.footprint_radius for a in ids])
    iu, ju = np.triu_indices(len(ids), k=1)
    diff = pos[iu] - pos[ju]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    hits = dist < (radii[iu] + radii[ju])[:, None]
    return float(hits.sum()) / (len(iu) * T)


@dataclass
class EvalReport:
    scene_id: str
    ade: dict[str, float]
    fde: dict[str, dict[float, float]]
    clique_ids: dict[str, tuple[str, ...]]
    mac_per_clique: dict[str, float]
    mac: float
    collision_rate: float
    n: int
    stamps: tuple[float, ...]
    extra: dict[str, float] = field(default_factory=dict)

    @property
    def mean_ade(self) -> float:
        return float(np.mean(list(self.ade.values()))) if self.ade else 0.0

    def mean_fde(self, stamp: float) -> float:
        vals = [v[stamp] for v in self.fde.values()]
        return float(np.mean(vals)) if vals else 0.0

    def check(self) -> list[str]:
        vals = list(self.ade.values()) + [x for d in self.fde.values() for x in d.values()]
        vals += list(self.mac_per_clique.values()) + [self.collision_rate]
        problems = []
        if not all(math.isfinite(v) and v >= 0 for v in vals):
            problems.append("negative or non-finite metric")
        if not all(0 <= f <= 1 for f in [*self.mac_per_clique.values(), self.collision_rate]):
            problems.append("fraction outside [0, 1]")
        return problems


def evaluate(
    scene: Scene,
    predictions: PredictionSet,
    cliques: Sequence[Clique],
    n: int = 1,
    stamps: Sequence[float] = DEFAULT_STAMPS,
    mu_floor: float = DEFAULT_MU_FLOOR,
) -> EvalReport:
    if not scene.ground_truth:
        raise ValueError(f"scene {scene.scene_id!r} has no ground truth")
    steps = scene.horizon_steps
    stamps = tuple(float(s) for s in stamps)
    for s in stamps:
        stamp_index(s, scene.dt, steps)
    ade_by, fde_by = {}, {}
    for aid, modes in predictions.modes.items():
        if aid not in scene.ground_truth:
            raise ValueError(f"missing ground truth for agent {aid!r}")
        g = _xy(_gt_states(scene.ground_truth[aid], steps))
        best = best_of_n(modes, n, g)
        ade_by[aid] = ade(best, g)
        fde_by[aid] = {s: fde(best, g, s, scene.dt) for s in stamps}
    histories = {a.agent_id: a.history for a in scene.agents}
    fr = mac_per_clique(predictions, scene.ground_truth, cliques, scene.horizon_eta, n, mu_floor, histories)
    cids = {f"c{k}": c.member_ids for k, c in enumerate(cliques)}
    return EvalReport(
        scene_id=scene.scene_id,
        ade=ade_by,
        fde=fde_by,
        clique_ids=cids,
        mac_per_clique=dict(zip(cids, fr)),
        mac=100.0 * float(np.mean(fr)) if fr else 0.0,
        collision_rate=collision_rate(predictions, scene),
        n=n,
        stamps=stamps,
    )
