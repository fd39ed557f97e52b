"""Agent-centric local semantic maps.

Channel layout is fixed: 0 barriers, 1 lane dividers, 2 other-agent footprints.
The crop is rotated so the agent heading points along +column; row 0 is the
agent's left.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .scene import AgentState, LocalMap, PolylineKind, SemanticMap

CHANNELS = (PolylineKind.BARRIER, PolylineKind.LANE_DIVIDER, "agents")
N_CHANNELS = len(CHANNELS)


def cell_centers(K: int, resolution: float) -> np.ndarray:
    """(K, K, 2) cell centres in the agent frame (x forward, y left)."""
    c = (np.arange(K) - (K - 1) / 2.0) * resolution
    xs = np.broadcast_to(c[None, :], (K, K))
    ys = np.broadcast_to(-c[:, None], (K, K))
    return np.stack([xs, ys], axis=-1)


def to_agent_frame(points: np.ndarray, state: AgentState) -> np.ndarray:
    c, s = math.cos(state.heading), math.sin(state.heading)
    d = np.asarray(points, dtype=float) - np.array([state.x, state.y])
    return np.stack([c * d[..., 0] + s * d[..., 1], -s * d[..., 0] + c * d[..., 1]], axis=-1)


def segment_distances(pts: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """(P, S) distances from points (P, 2) to segments (S, 2, 2)."""
    a = segs[None, :, 0, :]
    ab = segs[None, :, 1, :] - a
    ap = pts[:, None, :] - a
    L2 = np.sum(ab * ab, axis=-1)
    t = np.clip(np.sum(ap * ab, axis=-1) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
    diff = ap - t[..., None] * ab
    return np.hypot(diff[..., 0], diff[..., 1])


def _mark(centers: np.ndarray, segs: np.ndarray, tol: float) -> np.ndarray:
    flat = centers.reshape(-1, 2)
    hit = np.zeros(len(flat), dtype=bool)
    if len(segs):
        step = max(1, 1_000_000 // len(segs))
        for i in range(0, len(flat), step):
            hit[i:i + step] = (segment_distances(flat[i:i + step], segs) <= tol).any(axis=1)
    return hit.reshape(centers.shape[:2])


def rasterize_local_map(
    state: AgentState,
    smap: SemanticMap,
    K: int = 64,
    resolution: float = 0.5,
    others: Iterable[tuple[AgentState, float]] = (),
    agent_id: str = "",
) -> LocalMap:
    """Rasterise the map around ``state`` into a (K, K, 3) occupancy tensor.

    A cell is set in a polyline channel when its centre lies within half a cell
    of any segment of that kind. ``others`` are (state, footprint radius) pairs
    drawn into the agent channel with the same half-cell tolerance.
    """
    if K <= 0 or resolution <= 0:
        raise ValueError("K and resolution must be positive")
    centers = cell_centers(K, resolution)
    half = resolution / 2.0
    grid = np.zeros((K, K, N_CHANNELS), dtype=np.uint8)
    for ch, kind in enumerate(CHANNELS[:2]):
        segs = smap.segment_array(kind)
        if len(segs):
            grid[..., ch] = _mark(centers, to_agent_frame(segs, state), half)
    for other, radius in others:
        p = to_agent_frame(np.array([other.x, other.y]), state)
        dist = np.hypot(centers[..., 0] - p[0], centers[..., 1] - p[1])
        grid[..., 2] |= (dist <= radius + half).astype(np.uint8)
    return LocalMap(agent_id, grid, resolution)
