"""Domain types shared across the pipeline.

Everything here is plain immutable data. Validation is deliberately not done in
constructors: :func:`validate_scene` reports rule violations as data so that
malformed hand-authored scenes can still be loaded and diagnosed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


class AgentKind(str, enum.Enum):
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"


class PolylineKind(str, enum.Enum):
    BARRIER = "barrier"
    LANE_DIVIDER = "lane_divider"


DEFAULT_D0 = {AgentKind.VEHICLE: 20.0, AgentKind.PEDESTRIAN: 10.0}
DEFAULT_FOOTPRINT = {AgentKind.VEHICLE: 2.0, AgentKind.PEDESTRIAN: 0.5}


@dataclass(frozen=True)
class AgentType:
    kind: AgentKind
    footprint_radius: float
    d0: float

    @classmethod
    def default(cls, kind: AgentKind | str) -> "AgentType":
        kind = AgentKind(kind)
        return cls(kind, DEFAULT_FOOTPRINT[kind], DEFAULT_D0[kind])

    @property
    def is_vehicle(self) -> bool:
        return self.kind is AgentKind.VEHICLE


@dataclass(frozen=True)
class AgentState:
    """Unified kinematic state. Heading is wrapped to (-pi, pi] on construction."""

    x: float
    y: float
    heading: float
    vx: float
    vy: float

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_angle(float(self.heading)))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def velocity(self) -> tuple[float, float]:
        return (self.vx, self.vy)

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    def vehicle_view(self) -> tuple[float, float, float, float]:
        """(x, y, speed, heading)."""
        return (self.x, self.y, self.speed, self.heading)

    def pedestrian_view(self) -> tuple[float, float, float, float]:
        """(x, y, vx, vy); heading is ignored."""
        return (self.x, self.y, self.vx, self.vy)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.x, self.y, self.heading, self.vx, self.vy))


@dataclass(frozen=True)
class TrajectoryHistory:
    agent_id: str
    dt: float
    states: tuple[tuple[int, AgentState], ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple((int(i), s) for i, s in self.states))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.states)

    @property
    def first_index(self) -> int:
        return self.states[0][0]

    @property
    def last_index(self) -> int:
        return self.states[-1][0]

    @property
    def last(self) -> AgentState:
        return self.states[-1][1]

    def state_at(self, index: int) -> AgentState | None:
        i = index - self.first_index
        if 0 <= i < len(self.states) and self.states[i][0] == index:
            return self.states[i][1]
        for idx, s in self.states:
            if idx == index:
                return s
        return None

    def up_to(self, index: int) -> tuple[AgentState, ...]:
        return tuple(s for i, s in self.states if i <= index)

    def positions(self) -> np.ndarray:
        return np.array([[s.x, s.y] for _, s in self.states], dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class TokenPolyline:
    id: str
    points: tuple[tuple[float, float], ...]
    kind: PolylineKind

    def __post_init__(self):
        object.__setattr__(self, "points", tuple((float(x), float(y)) for x, y in self.points))
        object.__setattr__(self, "kind", PolylineKind(self.kind))

    def segments(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        return list(zip(self.points[:-1], self.points[1:]))

    def length(self) -> float:
        return sum(math.dist(a, b) for a, b in self.segments())


@dataclass(frozen=True)
class SemanticMap:
    polylines: tuple[TokenPolyline, ...] = ()
    divider_successors: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    bounds: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "polylines", tuple(self.polylines))
        object.__setattr__(
            self,
            "divider_successors",
            {k: tuple(sorted(v)) for k, v in sorted(self.divider_successors.items())},
        )
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))

    def polyline(self, pid: str) -> TokenPolyline:
        for p in self.polylines:
            if p.id == pid:
                return p
        raise KeyError(pid)

    def barriers(self) -> list[TokenPolyline]:
        return [p for p in self.polylines if p.kind is PolylineKind.BARRIER]

    def dividers(self) -> list[TokenPolyline]:
        return [p for p in self.polylines if p.kind is PolylineKind.LANE_DIVIDER]

    def successors(self, divider_id: str) -> tuple[str, ...]:
        return self.divider_successors.get(divider_id, ())

    def segment_array(self, kind: PolylineKind) -> np.ndarray:
        """All consecutive-token segments of one kind as an (S, 2, 2) array."""
        segs = [seg for p in self.polylines if p.kind is kind for seg in p.segments()]
        return np.array(segs, dtype=float).reshape(-1, 2, 2)


@dataclass(frozen=True)
class Agent:
    agent_id: str
    agent_type: AgentType
    history: TrajectoryHistory


@dataclass(frozen=True)
class Scene:
    agents: tuple[Agent, ...]
    map: SemanticMap
    dt: float
    horizon_eta: float
    ground_truth: Mapping[str, TrajectoryHistory] = field(default_factory=dict)
    scene_id: str = "scene"

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "ground_truth", dict(sorted(self.ground_truth.items())))

    @property
    def agent_ids(self) -> list[str]:
        return [a.agent_id for a in self.agents]

    def agent(self, agent_id: str) -> Agent:
        for a in self.agents:
            if a.agent_id == agent_id:
                return a
        raise KeyError(f"unknown agent {agent_id!r}")

    @property
    def horizon_steps(self) -> int:
        return horizon_steps(self.horizon_eta, self.dt)

    def timestep_range(self) -> tuple[int, int]:
        if not self.agents:
            raise ValueError("scene has no agents")
        return (
            min(a.history.first_index for a in self.agents),
            max(a.history.last_index for a in self.agents),
        )

    def active_agents(self, t: int) -> list[tuple[Agent, AgentState]]:
        """Agents observed at timestep ``t``, sorted by id."""
        out = []
        for a in sorted(self.agents, key=lambda a: a.agent_id):
            s = a.history.state_at(t)
            if s is not None:
                out.append((a, s))
        return out


def horizon_steps(eta: float, dt: float) -> int:
    """floor(eta / dt), tolerant to representation error (4.0 / 0.1 -> 40)."""
    return int(math.floor(eta / dt + 1e-9))


@dataclass(frozen=True)
class SceneGraph:
    """Symmetric, zero-diagonal interaction weights over the active agents at one timestep."""

    timestep_index: int
    agent_ids: tuple[str, ...]
    alpha: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float, copy=True).reshape(len(self.agent_ids), len(self.agent_ids))
        a.flags.writeable = False
        object.__setattr__(self, "agent_ids", tuple(self.agent_ids))
        object.__setattr__(self, "alpha", a)

    def index(self, agent_id: str) -> int:
        return self.agent_ids.index(agent_id)

    def weight(self, i: str, j: str) -> float:
        return float(self.alpha[self.index(i), self.index(j)])

    def edges(self, threshold: float) -> list[tuple[str, str, float]]:
        """Edges with weight strictly above ``threshold`` as (id_i, id_j, w) with i < j."""
        rows, cols = np.nonzero(np.triu(self.alpha > threshold, k=1))
        return [(self.agent_ids[r], self.agent_ids[c], float(self.alpha[r, c])) for r, c in zip(rows, cols)]

    def check(self) -> list[str]:
        problems = []
        if not np.all(np.isfinite(self.alpha)):
            problems.append("alpha has non-finite entries")
        if np.any(self.alpha < 0):
            problems.append("alpha has negative entries")
        if not np.array_equal(self.alpha, self.alpha.T):
            problems.append("alpha is not symmetric")
        if np.any(np.diag(self.alpha) != 0):
            problems.append("alpha diagonal is not zero")
        return problems


@dataclass(frozen=True)
class Clique:
    timestep_index: int
    member_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "member_ids", tuple(sorted(self.member_ids)))

    def __len__(self) -> int:
        return len(self.member_ids)

    def __contains__(self, agent_id: object) -> bool:
        return agent_id in self.member_ids


@dataclass(frozen=True)
class LocalMap:
    agent_id: str
    grid: np.ndarray  # (K, K, L) uint8
    resolution: float

    @property
    def size(self) -> int:
        return self.grid.shape[0]


def _check_history(label: str, hist: TrajectoryHistory, dt: float) -> Iterable[str]:
    if len(hist.states) < 1:
        yield f"{label}: history needs at least 1 state"
        return
    idx = hist.indices
    if any(b <= a for a, b in zip(idx, idx[1:])):
        yield f"{label}: timestamp indices must be strictly increasing"
    elif any(b - a != 1 for a, b in zip(idx, idx[1:])):
        yield f"{label}: timestamp indices must be uniformly spaced"
    if not (math.isfinite(hist.dt) and hist.dt > 0):
        yield f"{label}: dt must be positive"
    elif not math.isclose(hist.dt, dt, rel_tol=1e-12, abs_tol=0.0):
        yield f"{label}: history dt {hist.dt} differs from scene dt {dt}"
    for i, s in hist.states:
        if not s.is_finite():
            yield f"{label}: state at index {i} has non-finite fields"


def validate_scene(scene: Scene) -> list[str]:
    """Return every violated invariant as a human-readable message (empty when valid)."""
    out: list[str] = []
    if not (math.isfinite(scene.dt) and scene.dt > 0):
        out.append("scene: dt must be positive")
    if not (math.isfinite(scene.horizon_eta) and scene.horizon_eta > 0):
        out.append("scene: horizon must be positive")

    seen: set[str] = set()
    for a in scene.agents:
        if a.agent_id in seen:
            out.append(f"agent {a.agent_id!r}: duplicate agent_id")
        seen.add(a.agent_id)
        if not a.agent_type.footprint_radius > 0:
            out.append(f"agent {a.agent_id!r}: footprint_radius must be > 0")
        if not a.agent_type.d0 > 0:
            out.append(f"agent {a.agent_id!r}: d0 must be > 0")
        if a.history.agent_id != a.agent_id:
            out.append(f"agent {a.agent_id!r}: history belongs to {a.history.agent_id!r}")
        out.extend(_check_history(f"agent {a.agent_id!r}", a.history, scene.dt))

    for gid, hist in scene.ground_truth.items():
        if gid not in seen:
            out.append(f"ground_truth {gid!r}: no such agent")
        out.extend(_check_history(f"ground_truth {gid!r}", hist, scene.dt))

    kinds: dict[str, PolylineKind] = {}
    for p in scene.map.polylines:
        if p.id in kinds:
            out.append(f"polyline {p.id!r}: duplicate id")
        kinds[p.id] = p.kind
        if len(p.points) < 2:
            out.append(f"polyline {p.id!r}: polyline needs >= 2 points")
        if any(a == b for a, b in zip(p.points, p.points[1:])):
            out.append(f"polyline {p.id!r}: consecutive points must be distinct")
        if not all(math.isfinite(c) for pt in p.points for c in pt):
            out.append(f"polyline {p.id!r}: non-finite coordinates")

    for src, dsts in scene.map.divider_successors.items():
        for pid in (src, *dsts):
            if pid not in kinds:
                out.append(f"successor {src!r}: unknown polyline {pid!r}")
            elif kinds[pid] is not PolylineKind.LANE_DIVIDER:
                out.append(f"successor {src!r}: {pid!r} is not a lane divider")
        if src in kinds and len(scene.map.polyline(src).points) >= 2:
            end = scene.map.polyline(src).points[-1]
            for dst in dsts:
                if dst in kinds and scene.map.polyline(dst).points[0] != end:
                    out.append(f"successor {src!r}: {dst!r} does not start at its end token")
    return out


def derive_successors(polylines: Iterable[TokenPolyline]) -> dict[str, tuple[str, ...]]:
    """Connect dividers whose first token coincides with another divider's last token."""
    dividers = [p for p in polylines if p.kind is PolylineKind.LANE_DIVIDER]
    out = {}
    for a in dividers:
        succ = tuple(sorted(b.id for b in dividers if b.id != a.id and b.points[0] == a.points[-1]))
        if succ:
            out[a.id] = succ
    return out
