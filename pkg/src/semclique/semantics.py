"""Map predicates: barrier crossing, lane association and lane reachability."""

from __future__ import annotations

import enum
import math
from collections import deque
from typing import Iterable, Sequence

import numpy as np

from .scene import AgentState, PolylineKind, SemanticMap

Point = Sequence[float]
Segment = tuple[Point, Point]

EPS = 1e-9
DEFAULT_LANE_RADIUS = 5.0
DEFAULT_LANE_DEPTH = 3


class Orientation(enum.Enum):
    CLOCKWISE = -1
    COLLINEAR = 0
    COUNTERCLOCKWISE = 1


def cross(a: Point, b: Point, c: Point) -> float:
    """z-component of (b - a) x (c - a)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def orientation(a: Point, b: Point, c: Point) -> Orientation:
    v = cross(a, b, c)
    if abs(v) <= EPS:
        return Orientation.COLLINEAR
    return Orientation.COUNTERCLOCKWISE if v > 0 else Orientation.CLOCKWISE


def _within_box(p: Point, q: Point, r: Point) -> bool:
    # r collinear with p-q; is it inside their bounding box?
    return (
        min(p[0], q[0]) - EPS <= r[0] <= max(p[0], q[0]) + EPS
        and min(p[1], q[1]) - EPS <= r[1] <= max(p[1], q[1]) + EPS
    )


def segments_intersect(s1: Segment, s2: Segment) -> bool:
    """Closed-segment intersection; collinear overlaps and touching endpoints count."""
    p1, p2 = s1
    q1, q2 = s2
    o1 = orientation(p1, p2, q1).value
    o2 = orientation(p1, p2, q2).value
    o3 = orientation(q1, q2, p1).value
    o4 = orientation(q1, q2, p2).value
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    return (
        (o1 == 0 and _within_box(p1, p2, q1))
        or (o2 == 0 and _within_box(p1, p2, q2))
        or (o3 == 0 and _within_box(q1, q2, p1))
        or (o4 == 0 and _within_box(q1, q2, p2))
    )


def _orient_many(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    v = (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])
    return np.where(np.abs(v) <= EPS, 0, np.sign(v)).astype(np.int8)


def _box_many(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    lo = np.minimum(p, q) - EPS
    hi = np.maximum(p, q) + EPS
    return np.all((lo <= r) & (r <= hi), axis=-1)


def segments_intersect_many(p1: np.ndarray, p2: np.ndarray, q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Broadcasting version of :func:`segments_intersect` over (..., 2) endpoint arrays."""
    p1, p2, q1, q2 = np.broadcast_arrays(p1, p2, q1, q2)
    o1 = _orient_many(p1, p2, q1)
    o2 = _orient_many(p1, p2, q2)
    o3 = _orient_many(q1, q2, p1)
    o4 = _orient_many(q1, q2, p2)
    proper = (o1 * o2 < 0) & (o3 * o4 < 0)
    touch = (
        ((o1 == 0) & _box_many(p1, p2, q1))
        | ((o2 == 0) & _box_many(p1, p2, q2))
        | ((o3 == 0) & _box_many(q1, q2, p1))
        | ((o4 == 0) & _box_many(q1, q2, p2))
    )
    return proper | touch


def barrier_between(pi: Point, pj: Point, smap: SemanticMap) -> bool:
    """Does the straight segment between two agents cross any barrier segment?"""
    for barrier in smap.barriers():
        for seg in barrier.segments():
            if segments_intersect((pi, pj), seg):
                return True
    return False


def barrier_matrix(pos: np.ndarray, smap: SemanticMap, pairs: np.ndarray | None = None) -> np.ndarray:
    """Symmetric boolean (N, N) barrier matrix, evaluated only for ``pairs`` (i < j) if given."""
    n = len(pos)
    out = np.zeros((n, n), dtype=bool)
    segs = smap.segment_array(PolylineKind.BARRIER)
    if n < 2 or len(segs) == 0:
        return out
    if pairs is None:
        pairs = np.stack(np.triu_indices(n, k=1), axis=1)
    if len(pairs) == 0:
        return out
    # chunk to bound memory at pairs x segments
    chunk = max(1, 2_000_000 // len(segs))
    for start in range(0, len(pairs), chunk):
        pr = pairs[start:start + chunk]
        a = pos[pr[:, 0]][:, None, :]
        b = pos[pr[:, 1]][:, None, :]
        hit = segments_intersect_many(a, b, segs[None, :, 0, :], segs[None, :, 1, :]).any(axis=1)
        out[pr[hit, 0], pr[hit, 1]] = True
    return out | out.T


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((p[0] - ax) * dx + (p[1] - ay) * dy) / L2))
    return math.hypot((p[0] - ax) - t * dx, (p[1] - ay) - t * dy)


def project_onto_polyline(p: Point, points: Sequence[Point]) -> tuple[float, int, float]:
    """Nearest point on a polyline as (distance, segment index, arc length from start).

    Ties go to the earliest segment.
    """
    best = (math.inf, 0, 0.0)
    s0 = 0.0
    for k, (a, b) in enumerate(zip(points[:-1], points[1:])):
        dx, dy = b[0] - a[0], b[1] - a[1]
        L2 = dx * dx + dy * dy
        t = max(0.0, min(1.0, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / L2))
        d = math.hypot((p[0] - a[0]) - t * dx, (p[1] - a[1]) - t * dy)
        if d < best[0]:
            best = (d, k, s0 + t * math.sqrt(L2))
        s0 += math.sqrt(L2)
    return best


def associate_lane(state: AgentState, smap: SemanticMap, radius: float = DEFAULT_LANE_RADIUS) -> str | None:
    """Nearest heading-compatible lane divider within ``radius``, or None.

    A divider qualifies when the tangent of its nearest segment points within
    90 degrees of the agent heading. Distance ties (within 1e-9 m) go to the
    lexicographically smallest id.
    """
    hx, hy = math.cos(state.heading), math.sin(state.heading)
    candidates = []
    for div in smap.dividers():
        d, k, _ = project_onto_polyline(state.position, div.points)
        a, b = div.points[k], div.points[k + 1]
        if (b[0] - a[0]) * hx + (b[1] - a[1]) * hy <= 0:
            continue
        if d <= radius:
            candidates.append((d, div.id))
    if not candidates:
        return None
    best = min(d for d, _ in candidates)
    return min(pid for d, pid in candidates if d <= best + EPS)


def reachable_lanes(divider_id: str, smap: SemanticMap, depth: int = DEFAULT_LANE_DEPTH) -> frozenset[str]:
    """Dividers reachable from ``divider_id`` within ``depth`` successor hops (seed included)."""
    ids = {p.id: p.kind for p in smap.polylines}
    if ids.get(divider_id) is not PolylineKind.LANE_DIVIDER:
        raise KeyError(f"unknown lane divider {divider_id!r}")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    seen = {divider_id}
    frontier = deque([(divider_id, 0)])
    while frontier:
        cur, hops = frontier.popleft()
        if hops == depth:
            continue
        for nxt in smap.successors(cur):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, hops + 1))
    return frozenset(seen)


def lanes_overlap(seti: Iterable[str], setj: Iterable[str]) -> bool:
    return not set(seti).isdisjoint(setj)


def associate_lanes(states: Sequence[AgentState], smap: SemanticMap, radius: float = DEFAULT_LANE_RADIUS) -> list[str | None]:
    """Vectorised :func:`associate_lane` over many agents."""
    dividers = sorted(smap.dividers(), key=lambda p: p.id)
    if not states or not dividers:
        return [None] * len(states)
    segs, owner = [], []
    for k, div in enumerate(dividers):
        for seg in div.segments():
            segs.append(seg)
            owner.append(k)
    segs = np.array(segs, dtype=float)
    owner = np.array(owner)
    starts = np.flatnonzero(np.r_[True, owner[1:] != owner[:-1]])

    pos = np.array([s.position for s in states], dtype=float)
    a = segs[None, :, 0, :]
    d = segs[None, :, 1, :] - a
    L2 = d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1]
    ap = pos[:, None, :] - a
    t = np.clip((ap[..., 0] * d[..., 0] + ap[..., 1] * d[..., 1]) / L2, 0.0, 1.0)
    dist = np.hypot(ap[..., 0] - t * d[..., 0], ap[..., 1] - t * d[..., 1])  # (N, S)

    per_div = np.minimum.reduceat(dist, starts, axis=1)  # (N, P)
    seg_idx = np.broadcast_to(np.arange(len(segs)), dist.shape)
    first = np.minimum.reduceat(np.where(dist == per_div[:, owner], seg_idx, len(segs)), starts, axis=1)
    heading = np.array([s.heading for s in states])
    hx, hy = np.cos(heading), np.sin(heading)
    fd = d[0][first]  # (N, P, 2) direction of each divider's nearest segment
    ok = (fd[..., 0] * hx[:, None] + fd[..., 1] * hy[:, None] > 0) & (per_div <= radius)

    out: list[str | None] = []
    for i in range(len(states)):
        cand = np.flatnonzero(ok[i])
        if len(cand) == 0:
            out.append(None)
            continue
        best = per_div[i, cand].min()
        # dividers are id-sorted, so the first near-best candidate has the smallest id
        out.append(dividers[cand[per_div[i, cand] <= best + EPS][0]].id)
    return out
