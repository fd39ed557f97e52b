"""JSON scene files.

Layout (schema_version 1)::

    {
      "schema_version": 1,
      "scene_id": "...",            # optional, defaults to the file stem
      "dt": 0.5,                    # required, seconds
      "horizon": 4.0,               # optional, seconds (default 4.0)
      "agents": [
        {"id": "A", "type": "vehicle",          # or "pedestrian"
         "footprint_radius": 2.0, "d0": 20.0,   # optional, per-type defaults
         "history": [{"t": 0, "x": 0.0, "y": 0.0, "heading": 0.0, "vx": 0.0, "vy": 0.0}, ...]}
      ],
      "map": {                                  # optional
        "bounds": [xmin, ymin, xmax, ymax],     # optional, derived from content
        "polylines": [{"id": "b0", "kind": "barrier", "points": [[x, y], ...]}],
        "successors": {"d1": ["d2"]}            # optional, derived from shared end tokens
      },
      "ground_truth": [{"id": "A", "states": [<state>, ...]}]   # optional
    }

In a state only ``x`` and ``y`` are required: ``t`` defaults to the list
position, velocities to zero and heading to the velocity direction (0 if still).
Floats are written with Python's shortest round-trip repr, so save/load is exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

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
    validate_scene,
)

SCHEMA_VERSION = 1
DEFAULT_HORIZON = 4.0


class SceneFormatError(ValueError):
    """Raised for unreadable, schema-violating or invariant-violating scene files."""


def _require(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise SceneFormatError(f"{where}: missing required field {key!r}")
    return obj[key]


def _num(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneFormatError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _state_from(obj: dict, where: str) -> AgentState:
    x = _num(_require(obj, "x", where), f"{where}.x")
    y = _num(_require(obj, "y", where), f"{where}.y")
    vx = _num(obj.get("vx", 0.0), f"{where}.vx")
    vy = _num(obj.get("vy", 0.0), f"{where}.vy")
    if "heading" in obj:
        heading = _num(obj["heading"], f"{where}.heading")
    else:
        heading = math.atan2(vy, vx) if (vx or vy) else 0.0
    return AgentState(x, y, heading, vx, vy)


def _history_from(items: Any, agent_id: str, dt: float, where: str) -> TrajectoryHistory:
    if not isinstance(items, list):
        raise SceneFormatError(f"{where}: expected a list of states")
    states = []
    for k, obj in enumerate(items):
        w = f"{where}[{k}]"
        t = obj.get("t", k) if isinstance(obj, dict) else k
        if isinstance(t, bool) or not isinstance(t, int):
            raise SceneFormatError(f"{w}.t: expected an integer, got {t!r}")
        states.append((t, _state_from(obj, w)))
    return TrajectoryHistory(agent_id, dt, tuple(states))


def _bounds_of(agents, polylines) -> tuple[float, float, float, float]:
    xs, ys = [], []
    for a in agents:
        for _, s in a.history.states:
            xs.append(s.x)
            ys.append(s.y)
    for p in polylines:
        for x, y in p.points:
            xs.append(x)
            ys.append(y)
    if not xs:
        return (0.0, 0.0, 0.0, 0.0)
    return (min(xs), min(ys), max(xs), max(ys))


def scene_from_dict(doc: Any, default_id: str = "scene") -> Scene:
    if not isinstance(doc, dict):
        raise SceneFormatError("scene: expected a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SceneFormatError(f"schema_version: unsupported version {version!r}")
    dt = _num(_require(doc, "dt", "scene"), "dt")
    horizon = _num(doc.get("horizon", DEFAULT_HORIZON), "horizon")

    agents = []
    for k, obj in enumerate(_require(doc, "agents", "scene")):
        where = f"agents[{k}]"
        aid = str(_require(obj, "id", where))
        kind_name = obj.get("type", "vehicle")
        try:
            kind = AgentKind(kind_name)
        except ValueError:
            raise SceneFormatError(f"{where}.type: unknown agent type {kind_name!r}") from None
        base = AgentType.default(kind)
        atype = AgentType(
            kind,
            _num(obj.get("footprint_radius", base.footprint_radius), f"{where}.footprint_radius"),
            _num(obj.get("d0", base.d0), f"{where}.d0"),
        )
        hist = _history_from(_require(obj, "history", where), aid, dt, f"{where}.history")
        agents.append(Agent(aid, atype, hist))

    mdoc = doc.get("map", {}) or {}
    polylines = []
    for k, obj in enumerate(mdoc.get("polylines", [])):
        where = f"map.polylines[{k}]"
        kind_name = _require(obj, "kind", where)
        try:
            kind = PolylineKind(kind_name)
        except ValueError:
            raise SceneFormatError(f"{where}.kind: unknown polyline kind {kind_name!r}") from None
        pts = _require(obj, "points", where)
        try:
            pts = tuple((float(x), float(y)) for x, y in pts)
        except (TypeError, ValueError):
            raise SceneFormatError(f"{where}.points: expected [[x, y], ...]") from None
        polylines.append(TokenPolyline(str(_require(obj, "id", where)), pts, kind))
    if "successors" in mdoc:
        successors = {str(k): tuple(str(x) for x in v) for k, v in mdoc["successors"].items()}
    else:
        successors = derive_successors(polylines)
    bounds = mdoc.get("bounds")
    if bounds is None:
        bounds = _bounds_of(agents, polylines)
    elif len(bounds) != 4:
        raise SceneFormatError("map.bounds: expected [xmin, ymin, xmax, ymax]")
    smap = SemanticMap(tuple(polylines), successors, tuple(_num(b, "map.bounds") for b in bounds))

    gt = {}
    for k, obj in enumerate(doc.get("ground_truth", []) or []):
        where = f"ground_truth[{k}]"
        gid = str(_require(obj, "id", where))
        gt[gid] = _history_from(_require(obj, "states", where), gid, dt, f"{where}.states")

    scene = Scene(tuple(agents), smap, dt, horizon, gt, str(doc.get("scene_id", default_id)))
    problems = validate_scene(scene)
    if problems:
        raise SceneFormatError("; ".join(problems))
    return scene


def _state_doc(t: int, s: AgentState) -> dict:
    return {"t": t, "x": s.x, "y": s.y, "heading": s.heading, "vx": s.vx, "vy": s.vy}


def scene_to_dict(scene: Scene) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "scene_id": scene.scene_id,
        "dt": scene.dt,
        "horizon": scene.horizon_eta,
        "agents": [
            {
                "id": a.agent_id,
                "type": a.agent_type.kind.value,
                "footprint_radius": a.agent_type.footprint_radius,
                "d0": a.agent_type.d0,
                "history": [_state_doc(t, s) for t, s in a.history.states],
            }
            for a in scene.agents
        ],
        "map": {
            "bounds": list(scene.map.bounds),
            "polylines": [
                {"id": p.id, "kind": p.kind.value, "points": [list(pt) for pt in p.points]}
                for p in scene.map.polylines
            ],
            "successors": {k: list(v) for k, v in scene.map.divider_successors.items()},
        },
        "ground_truth": [
            {"id": gid, "states": [_state_doc(t, s) for t, s in h.states]}
            for gid, h in scene.ground_truth.items()
        ],
    }


def dumps_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=1) + "\n"


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(dumps_scene(scene))


def load_scene(path: str | Path) -> Scene:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise SceneFormatError(f"{path}: {exc.strerror}") from None
    return scene_from_dict(doc, default_id=path.stem)
