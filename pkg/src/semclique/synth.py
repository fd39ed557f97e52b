"""Seeded synthetic scenes.

Each kind is built around an ego vehicle ``A`` and reproduces one qualitative
pruning situation; a seed only jitters positions and speeds inside margins that
keep the intended grouping intact.

====================  =====================================================
kind                  situation
====================  =====================================================
``diverging``         B closes head-on on A; C and D drive away from A
``distance-ring``     static agents inside and one outside the d0 ring
``divided-road``      opposing traffic separated by a median barrier
``lane-merge``        B merges into A's lane; C drives an adjacent lane
``crossing``          four-way junction with a full connector lane graph
``mixed``             two-way road, pedestrians on curbs behind barriers
====================  =====================================================
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .scene import (
    Agent,
    AgentKind,
    AgentState,
    AgentType,
    PolylineKind,
    Scene,
    SemanticMap,
    TokenPolyline,
    TrajectoryHistory,
    derive_successors,
    horizon_steps,
)

KINDS = ("diverging", "distance-ring", "divided-road", "lane-merge", "crossing", "mixed")
GT_MODELS = ("cv", "brake", "perturbed")

DEFAULT_PARAMS = {
    "dt": 0.5,
    "horizon": 4.0,
    "history_steps": 8,
    "gt_model": None,  # per-kind default: "perturbed" for mixed, "cv" otherwise
    "outer_factor": 1.5,  # distance-ring only
}


def _state(x: float, y: float, vx: float, vy: float, heading: float | None = None) -> AgentState:
    if heading is None:
        heading = math.atan2(vy, vx) if (vx or vy) else 0.0
    return AgentState(x, y, heading, vx, vy)


class _Builder:
    def __init__(self, kind: str, seed: int, params: dict):
        self.kind = kind
        self.rng = np.random.default_rng(seed)
        self.dt = float(params["dt"])
        self.horizon = float(params["horizon"])
        self.H = int(params["history_steps"])
        self.gt_model = params["gt_model"] or ("perturbed" if kind == "mixed" else "cv")
        self.agents: list[Agent] = []
        self.gt: dict[str, TrajectoryHistory] = {}
        self.polylines: list[TokenPolyline] = []

    def jitter(self, scale: float) -> float:
        return float(self.rng.uniform(-scale, scale))

    def line(self, pid: str, kind: PolylineKind, *pts) -> None:
        self.polylines.append(TokenPolyline(pid, tuple(pts), kind))

    def add(self, aid: str, kind: AgentKind, now: AgentState) -> None:
        """Add an agent whose constant-velocity past ends at ``now`` (index H)."""
        dt, H = self.dt, self.H
        hist = tuple(
            (k, AgentState(now.x - ((H - k) * dt) * now.vx, now.y - ((H - k) * dt) * now.vy, now.heading, now.vx, now.vy))
            for k in range(H + 1)
        )
        self.agents.append(Agent(aid, AgentType.default(kind), TrajectoryHistory(aid, dt, hist)))
        self.gt[aid] = TrajectoryHistory(aid, dt, self._future(now))

    def _future(self, now: AgentState) -> tuple[tuple[int, AgentState], ...]:
        dt, H = self.dt, self.H
        n = horizon_steps(self.horizon, dt)
        out = []
        if self.gt_model == "cv":
            for k in range(1, n + 1):
                out.append((H + k, AgentState(now.x + (k * dt) * now.vx, now.y + (k * dt) * now.vy, now.heading, now.vx, now.vy)))
            return tuple(out)
        if self.gt_model == "brake":
            # uniform deceleration to a stop at half the horizon
            speed = math.hypot(now.vx, now.vy)
            ux, uy = (now.vx / speed, now.vy / speed) if speed > 0 else (0.0, 0.0)
            t_stop = self.horizon / 2.0
            decel = speed / t_stop
            for k in range(1, n + 1):
                t = min(k * dt, t_stop)
                s = speed * t - 0.5 * decel * t * t
                v = speed - decel * t
                out.append((H + k, AgentState(now.x + s * ux, now.y + s * uy, now.heading, v * ux, v * uy)))
            return tuple(out)
        # perturbed: constant random acceleration, heading follows velocity
        ax, ay = self.rng.normal(0.0, 0.6, size=2)
        for k in range(1, n + 1):
            t = k * dt
            vx, vy = now.vx + ax * t, now.vy + ay * t
            heading = math.atan2(vy, vx) if math.hypot(vx, vy) > 0.2 else now.heading
            out.append((H + k, AgentState(now.x + now.vx * t + 0.5 * ax * t * t, now.y + now.vy * t + 0.5 * ay * t * t, heading, vx, vy)))
        return tuple(out)

    def scene(self, seed: int) -> Scene:
        xs = [s.x for a in self.agents for _, s in a.history.states]
        ys = [s.y for a in self.agents for _, s in a.history.states]
        for p in self.polylines:
            xs.extend(x for x, _ in p.points)
            ys.extend(y for _, y in p.points)
        bounds = (min(xs), min(ys), max(xs), max(ys)) if xs else (0.0, 0.0, 0.0, 0.0)
        smap = SemanticMap(tuple(self.polylines), derive_successors(self.polylines), bounds)
        return Scene(tuple(self.agents), smap, self.dt, self.horizon, self.gt, f"{self.kind}-{seed}")


def _diverging(b: _Builder) -> None:
    V = AgentKind.VEHICLE
    j = b.jitter
    b.add("A", V, _state(0.0, 0.0, 8.0 + j(0.5), j(0.2)))
    b.add("B", V, _state(30.0 + j(0.5), 1.0 + j(0.5), -8.0 + j(0.5), j(0.2)))
    b.add("C", V, _state(-10.0 + j(0.5), j(0.5), -8.0 + j(0.5), j(0.2)))
    b.add("D", V, _state(j(0.5), -12.0 + j(0.5), j(0.2), -8.0 + j(0.5)))


def _distance_ring(b: _Builder, outer_factor: float) -> None:
    V, P = AgentKind.VEHICLE, AgentKind.PEDESTRIAN
    d0 = AgentType.default(V).d0
    j = b.jitter

    def at(r, ang):
        return _state(r * math.cos(ang) + j(0.3), r * math.sin(ang) + j(0.3), 0.0, 0.0)

    b.add("A", V, _state(j(0.3), j(0.3), 0.0, 0.0))
    b.add("B", V, at(0.5 * d0, math.pi / 4))
    b.add("C", V, at(0.8 * d0, math.pi / 2))
    b.add("D", V, at(outer_factor * d0, math.pi))
    b.add("P", P, at(2.0, -math.pi / 2))


def _divided_road(b: _Builder) -> None:
    V = AgentKind.VEHICLE
    j = b.jitter
    b.line("median", PolylineKind.BARRIER, (-100.0, 0.0), (0.0, 0.0), (100.0, 0.0))
    b.add("A", V, _state(j(0.5), -2.0 + j(0.2), 10.0 + j(0.3), 0.0))
    b.add("C", V, _state(-8.0 + j(0.5), -2.0 + j(0.2), 12.0 + j(0.3), 0.0))
    b.add("B", V, _state(15.0 + j(0.5), 2.0 + j(0.2), -10.0 + j(0.3), 0.0))
    b.add("D", V, _state(30.0 + j(0.5), 2.0 + j(0.2), -10.0 + j(0.3), 0.0))


def _lane_merge(b: _Builder) -> None:
    V, L = AgentKind.VEHICLE, PolylineKind.LANE_DIVIDER
    j = b.jitter
    b.line("main_in", L, (-60.0, 0.0), (0.0, 0.0))
    b.line("main_out", L, (0.0, 0.0), (60.0, 0.0))
    b.line("ramp", L, (-60.0, -10.0), (0.0, 0.0))
    b.line("side", L, (-60.0, 3.5), (60.0, 3.5))
    b.add("A", V, _state(-20.0 + j(0.5), j(0.2), 10.0 + j(0.3), 0.0))
    ux, uy = 60.0 / math.hypot(60.0, 10.0), 10.0 / math.hypot(60.0, 10.0)
    s = math.hypot(42.0, 7.0) + j(0.5)  # arc position on the ramp, about x = -18
    off = j(0.2)
    speed = 10.0 + j(0.3)
    b.add("B", V, _state(-60.0 + s * ux - off * uy, -10.0 + s * uy + off * ux, speed * ux, speed * uy))
    b.add("C", V, _state(-19.0 + j(0.5), 3.5 + j(0.2), 10.0 + j(0.3), 0.0))


# Inbound lane end, straight, left and right outbound starts for an eastbound
# approach; other approaches are rotations of this by multiples of 90 degrees.
_APPROACHES = ("E", "N", "W", "S")


def _rot(p, quarter: int):
    x, y = p
    for _ in range(quarter % 4):
        x, y = -y, x
    return (float(x), float(y))


def _crossing(b: _Builder) -> None:
    V, L = AgentKind.VEHICLE, PolylineKind.LANE_DIVIDER
    R, inner = 80.0, 10.0
    for q, name in enumerate(_APPROACHES):
        b.line(f"{name}_in", L, _rot((-R, -2.0), q), _rot((-inner, -2.0), q))
        b.line(f"{name}_out", L, _rot((inner, -2.0), q), _rot((R, -2.0), q))
    for q, name in enumerate(_APPROACHES):
        start = _rot((-inner, -2.0), q)
        # straight -> same heading, left -> next approach, right -> previous approach
        for turn, dq in (("straight", 0), ("left", 1), ("right", 3)):
            b.line(f"{name}_{turn}", L, start, _rot((inner, -2.0), q + dq))
    j = b.jitter
    for q, name in enumerate(_APPROACHES):
        count = int(b.rng.integers(1, 3))
        gaps = sorted(float(b.rng.uniform(5.0, 45.0)) for _ in range(count))
        for k in range(1, len(gaps)):
            gaps[k] = max(gaps[k], gaps[k - 1] + 9.0)
        for k, g in enumerate(gaps):
            speed = float(b.rng.uniform(5.0, 12.0))
            x, y = _rot((-inner - g, -2.0 + j(0.2)), q)
            vx, vy = _rot((speed, 0.0), q)
            b.add(f"{name}{k}", V, _state(x, y, vx, vy, heading=q * math.pi / 2))


def _mixed(b: _Builder) -> None:
    V, P = AgentKind.VEHICLE, AgentKind.PEDESTRIAN
    B, L = PolylineKind.BARRIER, PolylineKind.LANE_DIVIDER
    b.line("curb_n", B, (-80.0, 5.0), (80.0, 5.0))
    b.line("curb_s", B, (-80.0, -5.0), (80.0, -5.0))
    b.line("east", L, (-80.0, -2.0), (80.0, -2.0))
    b.line("west", L, (80.0, 2.0), (-80.0, 2.0))
    rng = b.rng
    for direction, y, sign in (("e", -2.0, 1.0), ("w", 2.0, -1.0)):
        n = int(rng.integers(2, 5))
        xs = np.sort(rng.uniform(-40.0, 40.0, size=n))
        for k in range(1, n):
            xs[k] = max(xs[k], xs[k - 1] + 10.0)
        for k, x in enumerate(xs):
            speed = float(rng.uniform(6.0, 12.0))
            b.add(f"v{direction}{k}", V, _state(float(x), y + b.jitter(0.2), sign * speed, 0.0))
    for k in range(int(rng.integers(3, 6))):
        side = 1.0 if rng.random() < 0.5 else -1.0
        x = float(rng.uniform(-30.0, 30.0))
        y = side * float(rng.uniform(6.0, 9.0))
        walking = rng.random() < 0.7
        speed = float(rng.uniform(0.8, 1.6)) if walking else 0.0
        vx = speed if rng.random() < 0.5 else -speed
        b.add(f"p{k}", P, _state(x, y, vx, 0.0))


_GENERATORS: dict[str, Callable] = {
    "diverging": _diverging,
    "distance-ring": _distance_ring,
    "divided-road": _divided_road,
    "lane-merge": _lane_merge,
    "crossing": _crossing,
    "mixed": _mixed,
}


def gen_scenario(kind: str, seed: int = 0, **params) -> Scene:
    """Build a deterministic scene for ``kind`` and ``seed``.

    Params: ``dt`` (0.5 s), ``horizon`` (4 s), ``history_steps`` (8),
    ``gt_model`` (cv | brake | perturbed) and, for distance-ring, ``outer_factor``
    (1.5, must be >= 1.2).
    """
    name = kind.replace("_", "-").lower()
    if name not in _GENERATORS:
        raise ValueError(f"unknown scenario kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    unknown = set(params) - set(DEFAULT_PARAMS)
    if unknown:
        raise ValueError(f"unknown parameters: {', '.join(sorted(unknown))}")
    p = {**DEFAULT_PARAMS, **params}
    if not p["dt"] > 0:
        raise ValueError("dt must be > 0")
    if not p["horizon"] >= p["dt"]:
        raise ValueError("horizon must be >= dt")
    if int(p["history_steps"]) < 1:
        raise ValueError("history_steps must be >= 1")
    if p["gt_model"] is not None and p["gt_model"] not in GT_MODELS:
        raise ValueError(f"gt_model must be one of {', '.join(GT_MODELS)}")
    if not p["outer_factor"] >= 1.2:
        raise ValueError("outer_factor must be >= 1.2")
    b = _Builder(name, seed, p)
    if name == "distance-ring":
        _distance_ring(b, float(p["outer_factor"]))
    else:
        _GENERATORS[name](b)
    return b.scene(seed)


def random_scene(
    seed: int,
    n_agents: int = 20,
    extent: float | None = None,
    n_barriers: int | None = None,
    pedestrian_fraction: float = 0.2,
    dt: float = 0.5,
    horizon: float = 4.0,
    history_steps: int = 4,
) -> Scene:
    """Unstructured scene for property and scale tests.

    Agents are scattered over a square whose side grows with sqrt(n_agents), on a
    grid of chained straight dividers (alternating direction every 10 m) with
    random barrier polylines thrown in.
    """
    rng = np.random.default_rng(seed)
    if extent is None:
        extent = 15.0 * math.sqrt(max(n_agents, 1)) + 20.0
    if n_barriers is None:
        n_barriers = max(1, n_agents // 10)
    b = _Builder("random", seed, {"dt": dt, "horizon": horizon, "history_steps": history_steps, "gt_model": "perturbed"})
    b.rng = rng

    L = PolylineKind.LANE_DIVIDER
    chunk = 50.0
    n_chunks = max(1, int(math.ceil(extent / chunk)))
    for row, y in enumerate(np.arange(5.0, extent, 10.0)):
        y = float(y)
        eastbound = row % 2 == 0
        for c in range(n_chunks):
            x0, x1 = c * chunk, (c + 1) * chunk
            pts = ((x0, y), (x1, y)) if eastbound else ((x1, y), (x0, y))
            b.line(f"h{row:03d}_{c:03d}", L, *pts)
    for k in range(n_barriers):
        p0 = rng.uniform(0.0, extent, size=2)
        pts = [tuple(float(v) for v in p0)]
        for _ in range(2):
            step = rng.normal(0.0, 12.0, size=2)
            nxt = np.asarray(pts[-1]) + step
            pts.append((float(nxt[0]), float(nxt[1])))
        b.line(f"bar{k:03d}", PolylineKind.BARRIER, *pts)

    for k in range(n_agents):
        kind = AgentKind.PEDESTRIAN if rng.random() < pedestrian_fraction else AgentKind.VEHICLE
        x, y = (float(v) for v in rng.uniform(0.0, extent, size=2))
        if kind is AgentKind.VEHICLE:
            row = int(rng.integers(0, max(1, int((extent - 5.0) // 10.0) + 1)))
            if rng.random() < 0.7:
                y = 5.0 + 10.0 * row + float(rng.normal(0.0, 0.5))
                heading = 0.0 if row % 2 == 0 else math.pi
            else:
                heading = float(rng.uniform(-math.pi, math.pi))
            speed = float(rng.uniform(0.0, 12.0))
        else:
            heading = float(rng.uniform(-math.pi, math.pi))
            speed = float(rng.uniform(0.0, 1.8))
        b.add(f"a{k:04d}", kind, _state(x, y, speed * math.cos(heading), speed * math.sin(heading), heading))
    return b.scene(seed)
