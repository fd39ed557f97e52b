"""Deterministic multimodal baseline predictors behind a common interface.

Every predictor maps (clique, scene, n_modes) to a :class:`PredictionSet` whose
modes start one step after the clique timestep and run to the horizon.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .scene import AgentState, Clique, Scene, SemanticMap, normalize_angle
from .semantics import DEFAULT_LANE_RADIUS, associate_lane, project_onto_polyline


@dataclass(frozen=True)
class TrajectoryMode:
    states: tuple[AgentState, ...]
    confidence: float

    def __len__(self) -> int:
        return len(self.states)

    def positions(self) -> np.ndarray:
        return np.array([[s.x, s.y] for s in self.states], dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class PredictionSet:
    modes: Mapping[str, tuple[TrajectoryMode, ...]]
    fallbacks: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "modes", {k: tuple(v) for k, v in sorted(self.modes.items())})
        object.__setattr__(self, "fallbacks", dict(sorted(self.fallbacks.items())))

    @property
    def agent_ids(self) -> list[str]:
        return list(self.modes)

    def top_mode(self, agent_id: str) -> TrajectoryMode:
        """Highest-confidence mode; ties go to the lowest mode index."""
        modes = self.modes[agent_id]
        return max(enumerate(modes), key=lambda im: (im[1].confidence, -im[0]))[1]

    def check(self) -> list[str]:
        problems = []
        for aid, modes in self.modes.items():
            if not modes:
                problems.append(f"{aid}: no modes")
                continue
            total = sum(m.confidence for m in modes)
            if abs(total - 1.0) > 1e-9:
                problems.append(f"{aid}: confidences sum to {total}")
            if any(not 0.0 <= m.confidence <= 1.0 for m in modes):
                problems.append(f"{aid}: confidence outside [0, 1]")
            if len({len(m) for m in modes}) != 1:
                problems.append(f"{aid}: modes differ in length")
        return problems

    @staticmethod
    def merge(sets: Iterable["PredictionSet"]) -> "PredictionSet":
        modes: dict[str, tuple[TrajectoryMode, ...]] = {}
        fallbacks: dict[str, str] = {}
        for ps in sets:
            for aid in ps.modes:
                if aid in modes:
                    raise ValueError(f"agent {aid!r} predicted twice")
            modes.update(ps.modes)
            fallbacks.update(ps.fallbacks)
        return PredictionSet(modes, fallbacks)


def geometric_confidences(n: int) -> list[float]:
    """Weights proportional to 1, 1/2, 1/4, ... normalised to sum to one."""
    w = [2.0 ** -m for m in range(n)]
    total = sum(w)
    return [x / total for x in w]


def perturbation_offsets(n: int, step: float) -> list[float]:
    """0, +step, -step, +2 step, -2 step, ... for ``n`` modes."""
    out = [0.0]
    for m in range(1, n):
        k = (m + 1) // 2
        out.append(k * step if m % 2 else -k * step)
    return out


def cv_rollout(state: AgentState, steps: int, dt: float, rotate: float = 0.0) -> tuple[AgentState, ...]:
    vx, vy, heading = state.vx, state.vy, state.heading
    if rotate:
        c, s = math.cos(rotate), math.sin(rotate)
        vx, vy = c * state.vx - s * state.vy, s * state.vx + c * state.vy
        heading = heading + rotate
    return tuple(
        AgentState(state.x + (k * dt) * vx, state.y + (k * dt) * vy, heading, vx, vy)
        for k in range(1, steps + 1)
    )


def ctrv_rollout(state: AgentState, speed: float, omega: float, steps: int, dt: float) -> tuple[AgentState, ...]:
    """Constant turn rate and speed along the heading; omega == 0 is the CV rollout."""
    if abs(omega) < 1e-12:
        return cv_rollout(state, steps, dt)
    th0 = state.heading
    r = speed / omega
    out = []
    for k in range(1, steps + 1):
        th = th0 + omega * (k * dt)
        out.append(
            AgentState(
                state.x + r * (math.sin(th) - math.sin(th0)),
                state.y + r * (math.cos(th0) - math.cos(th)),
                th,
                speed * math.cos(th),
                speed * math.sin(th),
            )
        )
    return tuple(out)


class Predictor:
    """Interface: subclasses implement :meth:`predict_agent`."""

    name = "base"

    def predict(self, clique: Clique, scene: Scene, n_modes: int) -> PredictionSet:
        if n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        modes, fallbacks = {}, {}
        for aid in sorted(set(clique.member_ids)):
            try:
                agent = scene.agent(aid)
            except KeyError:
                raise ValueError(f"unknown agent {aid!r} in clique") from None
            state = agent.history.state_at(clique.timestep_index)
            if state is None:
                raise ValueError(f"agent {aid!r} not observed at timestep {clique.timestep_index}")
            agent_modes, reason = self.predict_agent(aid, clique.timestep_index, scene, n_modes)
            modes[aid] = agent_modes
            if reason:
                fallbacks[aid] = reason
        return PredictionSet(modes, fallbacks)

    def predict_agent(self, agent_id: str, t: int, scene: Scene, n_modes: int) -> tuple[tuple[TrajectoryMode, ...], str | None]:
        raise NotImplementedError


@dataclass(frozen=True)
class CVPredictor(Predictor):
    """Constant velocity; extra modes rotate the velocity by +-k * dtheta."""

    dtheta: float = 0.1
    name = "cv"

    def modes_for(self, state: AgentState, steps: int, dt: float, n_modes: int) -> tuple[TrajectoryMode, ...]:
        conf = geometric_confidences(n_modes)
        offsets = perturbation_offsets(n_modes, self.dtheta)
        return tuple(TrajectoryMode(cv_rollout(state, steps, dt, off), c) for off, c in zip(offsets, conf))

    def predict_agent(self, agent_id, t, scene, n_modes):
        state = scene.agent(agent_id).history.state_at(t)
        return self.modes_for(state, scene.horizon_steps, scene.dt, n_modes), None


@dataclass(frozen=True)
class CTRVPredictor(Predictor):
    """Constant turn rate and speed. The turn rate comes from the last two headings;
    extra modes offset it by +-k * domega."""

    domega: float = 0.1
    name = "ctrv"

    def predict_agent(self, agent_id, t, scene, n_modes):
        agent = scene.agent(agent_id)
        past = agent.history.up_to(t)
        if not agent.agent_type.is_vehicle:
            return CVPredictor().modes_for(past[-1], scene.horizon_steps, scene.dt, n_modes), "pedestrian"
        if len(past) < 2:
            return CVPredictor().modes_for(past[-1], scene.horizon_steps, scene.dt, n_modes), "insufficient_history"
        state = past[-1]
        omega = normalize_angle(state.heading - past[-2].heading) / agent.history.dt
        conf = geometric_confidences(n_modes)
        offsets = perturbation_offsets(n_modes, self.domega)
        return (
            tuple(
                TrajectoryMode(ctrv_rollout(state, state.speed, omega + off, scene.horizon_steps, scene.dt), c)
                for off, c in zip(offsets, conf)
            ),
            None,
        )


def _direction(a, b) -> tuple[float, float]:
    dx, dy = b[0] - a[0], b[1] - a[1]
    L = math.hypot(dx, dy)
    return dx / L, dy / L


def _turn(u: tuple[float, float], v: tuple[float, float]) -> float:
    """Absolute angle between two unit vectors."""
    return abs(math.atan2(u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1]))


class PolylinePath:
    """Concatenated divider geometry walked by arc length."""

    def __init__(self, points: list[tuple[float, float]]):
        self.points = points
        self.cum = [0.0]
        for a, b in zip(points[:-1], points[1:]):
            self.cum.append(self.cum[-1] + math.dist(a, b))

    @property
    def length(self) -> float:
        return self.cum[-1]

    def at(self, s: float) -> tuple[float, float, float, float]:
        """(x, y, ux, uy) at arc length ``s``; past either end the end segment is extended."""
        k = bisect.bisect_right(self.cum, s) - 1
        k = min(max(k, 0), len(self.points) - 2)
        a, b = self.points[k], self.points[k + 1]
        ux, uy = _direction(a, b)
        off = s - self.cum[k]
        return a[0] + off * ux, a[1] + off * uy, ux, uy


def lane_paths(start: str, needed: float, smap: SemanticMap, limit: int = 64) -> list[tuple[tuple[str, ...], tuple[float, ...]]]:
    """Divider sequences from ``start`` long enough to cover ``needed`` metres.

    Each result carries the absolute heading change at every junction. Search
    stops early at dead ends and after ``limit`` complete paths.
    """
    out: list[tuple[tuple[str, ...], tuple[float, ...]]] = []
    stack = [((start,), (), smap.polyline(start).length())]
    while stack and len(out) < limit:
        ids, turns, covered = stack.pop()
        succ = smap.successors(ids[-1])
        if covered >= needed or not succ or len(ids) >= 32:
            out.append((ids, turns))
            continue
        last = smap.polyline(ids[-1]).points
        u = _direction(last[-2], last[-1])
        for nxt in reversed(succ):
            pts = smap.polyline(nxt).points
            v = _direction(pts[0], pts[1])
            stack.append((ids + (nxt,), turns + (_turn(u, v),), covered + smap.polyline(nxt).length()))
    return out


@dataclass(frozen=True)
class LaneFollowPredictor(Predictor):
    """Follows the associated divider at current speed, one mode per successor branch.

    Branches are ranked by heading change at each junction (smallest first);
    confidence is proportional to prod((1 + cos turn) / 2). When the lane graph
    offers fewer branches than requested modes the remainder are zero-confidence
    CV perturbation modes, so every agent carries exactly ``n_modes``.
    """

    radius: float = DEFAULT_LANE_RADIUS
    dtheta: float = 0.1
    name = "lane"

    def predict_agent(self, agent_id, t, scene, n_modes):
        agent = scene.agent(agent_id)
        state = agent.history.state_at(t)
        steps, dt = scene.horizon_steps, scene.dt
        cv = CVPredictor(self.dtheta)
        if not agent.agent_type.is_vehicle:
            return cv.modes_for(state, steps, dt, n_modes), "pedestrian"
        div = associate_lane(state, scene.map, self.radius)
        if div is None:
            return cv.modes_for(state, steps, dt, n_modes), "no_lane"

        pts = scene.map.polyline(div).points
        _, _, s0 = project_onto_polyline(state.position, pts)
        speed = state.speed
        needed = s0 + speed * steps * dt
        paths = lane_paths(div, needed, scene.map)
        paths.sort(key=lambda p: (p[1], p[0]))
        paths = paths[:n_modes]

        weights = [math.prod((1.0 + math.cos(a)) / 2.0 for a in turns) for _, turns in paths]
        total = sum(weights)
        conf = [w / total for w in weights] if total > 0 else [1.0 / len(paths)] * len(paths)

        modes = []
        for (ids, _), c in zip(paths, conf):
            geom = list(scene.map.polyline(ids[0]).points)
            for nxt in ids[1:]:
                geom.extend(scene.map.polyline(nxt).points[1:])
            walk = PolylinePath(geom)
            states = []
            for k in range(1, steps + 1):
                x, y, ux, uy = walk.at(s0 + speed * (k * dt))
                states.append(AgentState(x, y, math.atan2(uy, ux), speed * ux, speed * uy))
            modes.append(TrajectoryMode(tuple(states), c))
        if len(modes) < n_modes:
            pad = cv.modes_for(state, steps, dt, n_modes)[len(modes):]
            modes.extend(TrajectoryMode(m.states, 0.0) for m in pad)
        return tuple(modes), None


PREDICTORS: dict[str, type[Predictor]] = {
    "cv": CVPredictor,
    "ctrv": CTRVPredictor,
    "lane": LaneFollowPredictor,
}


def get_predictor(name: str) -> Predictor:
    try:
        return PREDICTORS[name]()
    except KeyError:
        raise ValueError(f"unknown predictor {name!r}; choose from {', '.join(PREDICTORS)}") from None


def predict_cv(clique: Clique, scene: Scene, n_modes: int = 1, dtheta: float = 0.1) -> PredictionSet:
    return CVPredictor(dtheta).predict(clique, scene, n_modes)


def predict_ctrv(clique: Clique, scene: Scene, n_modes: int = 1, domega: float = 0.1) -> PredictionSet:
    return CTRVPredictor(domega).predict(clique, scene, n_modes)


def predict_lane_follow(clique: Clique, scene: Scene, n_modes: int = 1) -> PredictionSet:
    return LaneFollowPredictor().predict(clique, scene, n_modes)
