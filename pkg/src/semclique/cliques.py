"""Interaction graph construction, clique extraction and active-node batching."""

from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kinematics import DEFAULT_WEIGHT_CAP, distance_weights, pairwise_closest
from .raster import rasterize_local_map
from .scene import Clique, Scene, SceneGraph
from .semantics import (
    DEFAULT_LANE_DEPTH,
    DEFAULT_LANE_RADIUS,
    associate_lanes,
    barrier_matrix,
    reachable_lanes,
)


@dataclass(frozen=True)
class CriteriaConfig:
    use_distance: bool = True
    use_direction: bool = True
    use_barrier: bool = True
    use_lane_overlap: bool = True
    D: float = 5.0
    alpha_threshold: float = 1.0
    max_clique_size: int = 8
    T_samples: int = 4
    weight_cap: float = DEFAULT_WEIGHT_CAP
    lane_radius: float = DEFAULT_LANE_RADIUS
    lane_depth: int = DEFAULT_LANE_DEPTH
    lane_overlap_pedestrians: bool = False

    def __post_init__(self):
        if self.max_clique_size < 1:
            raise ValueError("max_clique_size must be >= 1")
        if self.T_samples < 1:
            raise ValueError("T_samples must be >= 1")
        if self.alpha_threshold < 0:
            raise ValueError("alpha_threshold must be >= 0")
        if self.D <= 0:
            raise ValueError("D must be > 0")

    def replace(self, **changes) -> "CriteriaConfig":
        return dataclasses.replace(self, **changes)


# Named criterion toggles used by the ablation sweep.
ABLATIONS: dict[str, dict[str, bool]] = {
    "all_on": {},
    "wo_direction": {"use_direction": False},
    "wo_barrier": {"use_barrier": False},
    "wo_lane_overlap": {"use_lane_overlap": False},
    "distance_only": {"use_direction": False, "use_barrier": False, "use_lane_overlap": False},
}


def _lane_sets(scene: Scene, active, cfg: CriteriaConfig) -> list[frozenset[str] | None]:
    bound = [k for k, (a, _) in enumerate(active) if a.agent_type.is_vehicle or cfg.lane_overlap_pedestrians]
    divs = associate_lanes([active[k][1] for k in bound], scene.map, cfg.lane_radius)
    cache: dict[str, frozenset[str]] = {}
    out: list[frozenset[str] | None] = [None] * len(active)
    for k, div in zip(bound, divs):
        if div is None:
            continue
        if div not in cache:
            cache[div] = reachable_lanes(div, scene.map, cfg.lane_depth)
        out[k] = cache[div]
    return out


def pairwise_alpha(scene: Scene, t: int, cfg: CriteriaConfig = CriteriaConfig()) -> SceneGraph:
    """Interaction weights between the agents active at history timestep ``t``.

    alpha = distance weight x direction gate x barrier gate x lane-overlap gate,
    each factor applied only when enabled. The lane gate is vacuous unless both
    agents are lane-bound and associated to a divider.
    """
    lo, hi = scene.timestep_range()
    if not lo <= t <= hi:
        raise ValueError(f"timestep {t} outside history range [{lo}, {hi}]")
    active = scene.active_agents(t)
    ids = tuple(a.agent_id for a, _ in active)
    n = len(ids)
    if n == 0:
        return SceneGraph(t, ids, np.zeros((0, 0)))
    pos = np.array([[s.x, s.y] for _, s in active], dtype=float)
    vel = np.array([[s.vx, s.vy] for _, s in active], dtype=float)
    d0 = np.array([a.agent_type.d0 for a, _ in active], dtype=float)

    dist, _ = pairwise_closest(pos, vel, scene.horizon_eta)
    if cfg.use_distance:
        alpha = distance_weights(dist, np.minimum(d0[:, None], d0[None, :]), cfg.weight_cap)
    else:
        alpha = np.full((n, n), cfg.weight_cap)
        np.fill_diagonal(alpha, 0.0)

    if cfg.use_direction:
        alpha[dist >= cfg.D] = 0.0
    if cfg.use_barrier:
        pairs = np.argwhere(np.triu(alpha > 0, k=1))
        alpha[barrier_matrix(pos, scene.map, pairs)] = 0.0
    if cfg.use_lane_overlap:
        lanes = _lane_sets(scene, active, cfg)
        for i, j in np.argwhere(np.triu(alpha > 0, k=1)):
            li, lj = lanes[i], lanes[j]
            if li is not None and lj is not None and li.isdisjoint(lj):
                alpha[i, j] = alpha[j, i] = 0.0
    return SceneGraph(t, ids, alpha)


def _bfs(start: int, adj: list[set[int]]) -> list[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return sorted(seen)


def threshold_components(graph: SceneGraph, threshold: float) -> list[tuple[str, ...]]:
    """Connected components of the graph keeping edges with alpha > threshold."""
    n = len(graph.agent_ids)
    adj: list[set[int]] = [set() for _ in range(n)]
    for i, j in np.argwhere(np.triu(graph.alpha > threshold, k=1)):
        adj[i].add(j)
        adj[j].add(i)
    label = [-1] * n
    comps = []
    for u in range(n):
        if label[u] < 0:
            comp = _bfs(u, adj)
            for v in comp:
                label[v] = len(comps)
            comps.append(tuple(graph.agent_ids[v] for v in comp))
    return comps


def form_cliques(graph: SceneGraph, cfg: CriteriaConfig = CriteriaConfig()) -> list[Clique]:
    """Partition agents into connected components of the thresholded graph.

    Components larger than ``max_clique_size`` are split by removing their
    weakest edges one at a time (ties: smallest id pair first) until every piece
    fits. Removing edges in global ascending order while skipping edges whose
    component already fits is equivalent, because components only ever shrink.
    """
    ids = graph.agent_ids
    n = len(ids)
    adj: list[set[int]] = [set() for _ in range(n)]
    edges = []
    for i, j in np.argwhere(np.triu(graph.alpha > cfg.alpha_threshold, k=1)):
        i, j = int(i), int(j)
        adj[i].add(j)
        adj[j].add(i)
        a, b = (i, j) if ids[i] < ids[j] else (j, i)
        edges.append((float(graph.alpha[i, j]), ids[a], ids[b], a, b))

    label = [-1] * n
    sizes: list[int] = []

    def assign(u: int) -> None:
        comp = _bfs(u, adj)
        for v in comp:
            label[v] = len(sizes)
        sizes.append(len(comp))

    for u in range(n):
        if label[u] < 0:
            assign(u)

    if max(sizes, default=0) > cfg.max_clique_size:
        edges.sort(key=lambda e: e[:3])
        for _, _, _, a, b in edges:
            if sizes[label[a]] <= cfg.max_clique_size:
                continue
            adj[a].discard(b)
            adj[b].discard(a)
            comp_a = _bfs(a, adj)
            if b not in comp_a:
                assign(a)
                assign(b)

    groups: dict[int, list[str]] = {}
    for u in range(n):
        groups.setdefault(label[u], []).append(ids[u])
    cliques = [Clique(graph.timestep_index, tuple(m)) for m in groups.values()]
    return sorted(cliques, key=lambda c: c.member_ids[0])


@dataclass(frozen=True)
class CliqueTimeline:
    timesteps: tuple[int, ...]
    graphs: tuple[SceneGraph, ...]
    partitions: tuple[tuple[Clique, ...], ...]

    @property
    def final(self) -> tuple[Clique, ...]:
        """Partition at the last sampled timestep; this is what prediction uses."""
        return self.partitions[-1]

    @property
    def final_timestep(self) -> int:
        return self.timesteps[-1]

    def edge_history(self, i: str, j: str) -> np.ndarray:
        """alpha_ij over the sampled timesteps (0 where either agent is inactive)."""
        out = []
        for g in self.graphs:
            if i in g.agent_ids and j in g.agent_ids:
                out.append(g.weight(i, j))
            else:
                out.append(0.0)
        return np.array(out)


def sample_timesteps(lo: int, hi: int, T: int) -> tuple[int, ...]:
    n = hi - lo + 1
    if T > n:
        raise ValueError(f"T_samples={T} exceeds the {n} available history timesteps")
    if T == 1:
        return (hi,)
    return tuple(lo + (k * (n - 1)) // (T - 1) for k in range(T))


def cliques_over_time(scene: Scene, cfg: CriteriaConfig = CriteriaConfig()) -> CliqueTimeline:
    lo, hi = scene.timestep_range()
    steps = sample_timesteps(lo, hi, cfg.T_samples)
    graphs = tuple(pairwise_alpha(scene, t, cfg) for t in steps)
    parts = tuple(tuple(form_cliques(g, cfg)) for g in graphs)
    return CliqueTimeline(steps, graphs, parts)


@dataclass(frozen=True)
class CliqueBatch:
    """Inputs for one clique, expressed relative to its reference (first) member."""

    clique: Clique
    reference_id: str
    histories: np.ndarray  # (M, H+1, 5): x, y, heading, vx, vy relative; NaN where unobserved
    local_maps: np.ndarray  # (M, K, K, L)
    edge_histories: np.ndarray  # (M, M, T)


def batch_active_nodes(
    scene: Scene,
    timeline: CliqueTimeline,
    K: int = 64,
    resolution: float = 0.5,
) -> list[CliqueBatch]:
    t = timeline.final_timestep
    lo, _ = scene.timestep_range()
    steps = range(lo, t + 1)
    current = {a.agent_id: s for a, s in scene.active_agents(t)}
    batches = []
    for clique in timeline.final:
        members: Sequence[str] = clique.member_ids
        ref = current[members[0]]
        hist = np.full((len(members), len(steps), 5), np.nan)
        maps = []
        for m, aid in enumerate(members):
            agent = scene.agent(aid)
            for k, step in enumerate(steps):
                s = agent.history.state_at(step)
                if s is not None:
                    hist[m, k] = (s.x - ref.x, s.y - ref.y, s.heading, s.vx - ref.vx, s.vy - ref.vy)
            others = [
                (current[o], scene.agent(o).agent_type.footprint_radius) for o in members if o != aid
            ]
            maps.append(rasterize_local_map(current[aid], scene.map, K, resolution, others, aid).grid)
        edges = np.zeros((len(members), len(members), len(timeline.graphs)))
        for a, ia in enumerate(members):
            for b, ib in enumerate(members):
                if a != b:
                    edges[a, b] = timeline.edge_history(ia, ib)
        batches.append(CliqueBatch(clique, members[0], hist, np.stack(maps), edges))
    return batches
