"""Slow, independent reference implementations used to cross-check the library.

Nothing here imports the code under test except plain data types.
"""

from __future__ import annotations

import math
from fractions import Fraction

from semclique.scene import AgentState, PolylineKind


# ---------------------------------------------------------------- kinematics

def closest_distance(pi, vi, pj, vj, eta, samples=2001, iters=200):
    """Dense sampling of |dp + t dv| on [0, eta] followed by ternary refinement.

    The separation is convex in t, so ternary search inside the bracket around
    the best sample converges to the true minimum.
    """
    def f(t):
        return math.hypot(pj[0] - pi[0] + t * (vj[0] - vi[0]), pj[1] - pi[1] + t * (vj[1] - vi[1]))

    ts = [eta * k / (samples - 1) for k in range(samples)]
    vals = [f(t) for t in ts]
    k = min(range(samples), key=vals.__getitem__)
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, samples - 1)]
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) < f(m2):
            hi = m2
        else:
            lo = m1
    return min(vals[k], f((lo + hi) / 2))


# ---------------------------------------------------------------- geometry

def _fr(p):
    return Fraction(p[0]), Fraction(p[1])


def _xprod(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _on_segment(p, a, b):
    d = (b[0] - a[0], b[1] - a[1])
    w = (p[0] - a[0], p[1] - a[1])
    if _xprod(d, w) != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def segments_intersect_exact(s1, s2) -> bool:
    """Closed-segment test in exact rational arithmetic via the parametric form."""
    p1, p2 = _fr(s1[0]), _fr(s1[1])
    q1, q2 = _fr(s2[0]), _fr(s2[1])
    r = (p2[0] - p1[0], p2[1] - p1[1])
    s = (q2[0] - q1[0], q2[1] - q1[1])
    if r == (0, 0):
        return _on_segment(p1, q1, q2)
    if s == (0, 0):
        return _on_segment(q1, p1, p2)
    qp = (q1[0] - p1[0], q1[1] - p1[1])
    den = _xprod(r, s)
    if den != 0:
        t = _xprod(qp, s) / den
        u = _xprod(qp, r) / den
        return 0 <= t <= 1 and 0 <= u <= 1
    if _xprod(qp, r) != 0:
        return False
    # collinear: overlap of the projections on both axes
    return (
        max(min(p1[0], p2[0]), min(q1[0], q2[0])) <= min(max(p1[0], p2[0]), max(q1[0], q2[0]))
        and max(min(p1[1], p2[1]), min(q1[1], q2[1])) <= min(max(p1[1], p2[1]), max(q1[1], q2[1]))
    )


def point_seg_dist(p, a, b):
    ax, ay, bx, by = a[0], a[1], b[0], b[1]
    L2 = (bx - ax) ** 2 + (by - ay) ** 2
    best = min(math.dist(p, a), math.dist(p, b))
    if L2 > 0:
        t = ((p[0] - ax) * (bx - ax) + (p[1] - ay) * (by - ay)) / L2
        if 0 <= t <= 1:
            best = min(best, math.dist(p, (ax + t * (bx - ax), ay + t * (by - ay))))
    return best


# ---------------------------------------------------------------- lane graph

def reachable_by_walks(start, successors, depth):
    """Every divider at the end of some walk of at most ``depth`` hops."""
    out = set()

    def walk(node, left):
        out.add(node)
        if left == 0:
            return
        for nxt in successors.get(node, ()):
            walk(nxt, left - 1)

    walk(start, depth)
    return frozenset(out)


# ---------------------------------------------------------------- cliques

def components(nodes, edges):
    parent = {u: u for u in nodes}

    def find(u):
        while parent[u] != u:
            u = parent[u]
        return u

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups = {}
    for u in nodes:
        groups.setdefault(find(u), []).append(u)
    return sorted(tuple(sorted(g)) for g in groups.values())


def split_cliques(ids, weights, threshold, max_size):
    """Literal simulation: while a component is too big, delete its weakest edge.

    ``weights`` maps (id_a, id_b) with id_a < id_b to alpha. Among all edges that
    sit inside an oversize component the one with the smallest (w, id_a, id_b)
    goes first; components are recomputed from scratch after every deletion.
    """
    edges = {k: w for k, w in weights.items() if w > threshold}
    while True:
        comps = components(ids, edges)
        big = {u for c in comps if len(c) > max_size for u in c}
        if not big:
            return comps
        cand = [(w, a, b) for (a, b), w in edges.items() if a in big]
        _, a, b = min(cand)
        del edges[(a, b)]


# ---------------------------------------------------------------- predictors

def ctrv_rk4(x, y, th, v, omega, T, h):
    def f(s):
        return (v * math.cos(s[2]), v * math.sin(s[2]), omega)

    s = (x, y, th)
    n = int(round(T / h))
    for _ in range(n):
        k1 = f(s)
        k2 = f(tuple(a + h / 2 * b for a, b in zip(s, k1)))
        k3 = f(tuple(a + h / 2 * b for a, b in zip(s, k2)))
        k4 = f(tuple(a + h * b for a, b in zip(s, k3)))
        s = tuple(a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(s, k1, k2, k3, k4))
    return s


def walk_polyline(points, s):
    """Point at arc length ``s``, stepping segment by segment; extrapolates past the ends."""
    if s < 0:
        a, b = points[0], points[1]
        L = math.dist(a, b)
        return a[0] + s * (b[0] - a[0]) / L, a[1] + s * (b[1] - a[1]) / L
    left = s
    for k in range(len(points) - 1):
        a, b = points[k], points[k + 1]
        L = math.dist(a, b)
        if left <= L or k == len(points) - 2:
            return a[0] + left * (b[0] - a[0]) / L, a[1] + left * (b[1] - a[1]) / L
        left -= L
    raise AssertionError("unreachable")


# ---------------------------------------------------------------- metrics

def ade_loop(pred, gt):
    total = 0.0
    for (px, py), (gx, gy) in zip(pred, gt):
        total += math.sqrt((px - gx) ** 2 + (py - gy) ** 2)
    return total / len(pred)


def fde_loop(pred, gt, k):
    (px, py), (gx, gy) = pred[k], gt[k]
    return math.sqrt((px - gx) ** 2 + (py - gy) ** 2)


def mac_literal(modes, gt_final, history, eta, n, mu_floor, cliques):
    """modes: aid -> list of (confidence, final_xy); gt_final: aid -> AgentState;
    history: aid -> list of AgentState. Returns the percentage."""
    fractions = []
    for members in cliques:
        misses = 0
        for aid in members:
            ranked = sorted(enumerate(modes[aid]), key=lambda e: (-e[1][0], e[0]))[:n]
            g = gt_final[aid]
            c, s = math.cos(g.heading), math.sin(g.heading)
            lon_speeds, lat_speeds = [], []
            for st in history[aid]:
                lon_speeds.append(abs(st.vx * c + st.vy * s))
                lat_speeds.append(abs(-st.vx * s + st.vy * c))
            mu_lon = max(sum(lon_speeds) / len(lon_speeds), mu_floor)
            mu_lat = max(sum(lat_speeds) / len(lat_speeds), mu_floor)
            hit = False
            for _, (_, (x, y)) in ranked:
                dx, dy = x - g.x, y - g.y
                lon = dx * c + dy * s
                lat = -dx * s + dy * c
                if abs(lon) <= eta / 3 * mu_lon and abs(lat) <= eta / 3 * mu_lat:
                    hit = True
            misses += not hit
        fractions.append(misses / len(members))
    return 100.0 * sum(fractions) / len(fractions)


def collision_loop(tracks, radii):
    """tracks: list of lists of (x, y); radii: list of floats."""
    cells = hits = 0
    for i in range(len(tracks)):
        for j in range(i + 1, len(tracks)):
            for a, b in zip(tracks[i], tracks[j]):
                cells += 1
                if math.dist(a, b) < radii[i] + radii[j]:
                    hits += 1
    return hits / cells if cells else 0.0


# ---------------------------------------------------------------- scene-level alpha

def alpha_oracle(scene, t, cfg, lane_of):
    """Scalar alpha for every pair at timestep ``t``; ``lane_of`` maps a state to a divider id or None."""
    active = []
    for a in sorted(scene.agents, key=lambda a: a.agent_id):
        s = a.history.state_at(t)
        if s is not None:
            active.append((a, s))
    barriers = [seg for p in scene.map.polylines if p.kind is PolylineKind.BARRIER for seg in p.segments()]
    succ = dict(scene.map.divider_successors)
    out = {}
    for i in range(len(active)):
        for j in range(i + 1, len(active)):
            (ai, si), (aj, sj) = active[i], active[j]
            d = closest_distance(si.position, si.velocity, sj.position, sj.velocity, scene.horizon_eta)
            if cfg.use_distance:
                d0 = min(ai.agent_type.d0, aj.agent_type.d0)
                w = 0.0 if d >= d0 else min(d0 / d, cfg.weight_cap) if d > 0 else cfg.weight_cap
            else:
                w = cfg.weight_cap
            if cfg.use_direction and not d < cfg.D:
                w = 0.0
            if cfg.use_barrier and any(segments_intersect_exact((si.position, sj.position), b) for b in barriers):
                w = 0.0
            if cfg.use_lane_overlap and ai.agent_type.is_vehicle and aj.agent_type.is_vehicle:
                li, lj = lane_of(si), lane_of(sj)
                if li is not None and lj is not None:
                    if reachable_by_walks(li, succ, cfg.lane_depth).isdisjoint(reachable_by_walks(lj, succ, cfg.lane_depth)):
                        w = 0.0
            out[(ai.agent_id, aj.agent_id)] = w
    return [a.agent_id for a, _ in active], out


def as_state(x, y, vx, vy, heading=None):
    if heading is None:
        heading = math.atan2(vy, vx) if (vx or vy) else 0.0
    return AgentState(x, y, heading, vx, vy)
