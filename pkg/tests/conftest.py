import math

import pytest

from semclique.scene import (
    Agent,
    AgentKind,
    AgentState,
    AgentType,
    Scene,
    SemanticMap,
    TokenPolyline,
    TrajectoryHistory,
    derive_successors,
)

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


def cv_agent(aid, x, y, vx, vy, kind="vehicle", steps=4, dt=0.5, heading=None, future=8, **type_kw):
    """Agent with a constant-velocity history ending at (x, y) at index ``steps``,
    plus its constant-velocity future."""
    if heading is None:
        heading = math.atan2(vy, vx) if (vx or vy) else 0.0
    hist = tuple(
        (k, AgentState(x - (steps - k) * dt * vx, y - (steps - k) * dt * vy, heading, vx, vy)) for k in range(steps + 1)
    )
    fut = tuple(
        (steps + k, AgentState(x + k * dt * vx, y + k * dt * vy, heading, vx, vy)) for k in range(1, future + 1)
    )
    base = AgentType.default(kind)
    atype = AgentType(base.kind, type_kw.get("footprint_radius", base.footprint_radius), type_kw.get("d0", base.d0))
    return Agent(aid, atype, TrajectoryHistory(aid, dt, hist)), TrajectoryHistory(aid, dt, fut)


def make_scene(specs, polylines=(), dt=0.5, horizon=4.0, scene_id="t", successors=None):
    """specs: list of (aid, x, y, vx, vy[, kind]) tuples."""
    agents, gt = [], {}
    steps = int(round(horizon / dt))
    for spec in specs:
        aid, x, y, vx, vy, *rest = spec
        kind = rest[0] if rest else "vehicle"
        a, g = cv_agent(aid, x, y, vx, vy, kind, dt=dt, future=steps)
        agents.append(a)
        gt[aid] = g
    polylines = tuple(polylines)
    succ = derive_successors(polylines) if successors is None else successors
    return Scene(tuple(agents), SemanticMap(polylines, succ, (0, 0, 0, 0)), dt, horizon, gt, scene_id)


@pytest.fixture
def line():
    def _line(pid, kind, *pts):
        return TokenPolyline(pid, tuple(pts), kind)

    return _line
