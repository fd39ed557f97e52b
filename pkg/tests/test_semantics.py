import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import reachable_by_walks, segments_intersect_exact
from semclique.scene import AgentState, PolylineKind, SemanticMap, TokenPolyline
from semclique.semantics import (
    Orientation,
    associate_lane,
    associate_lanes,
    barrier_between,
    barrier_matrix,
    lanes_overlap,
    orientation,
    point_segment_distance,
    project_onto_polyline,
    reachable_lanes,
    segments_intersect,
    segments_intersect_many,
)

B, L = PolylineKind.BARRIER, PolylineKind.LANE_DIVIDER
grid = st.integers(-4, 4)
pt = st.tuples(grid, grid).map(lambda p: (float(p[0]), float(p[1])))
seg = st.tuples(pt, pt).filter(lambda s: s[0] != s[1])


def test_orientation_examples():
    assert orientation((0, 0), (1, 0), (0, 1)) is Orientation.COUNTERCLOCKWISE
    assert orientation((0, 0), (1, 0), (2, 0)) is Orientation.COLLINEAR
    assert orientation((0, 0), (0, 1), (1, 0)) is Orientation.CLOCKWISE
    assert orientation((0, 0), (1, 0), (2, 1e-10)) is Orientation.COLLINEAR


@given(pt, pt, pt)
def test_orientation_antisymmetric(a, b, c):
    assert orientation(a, b, c).value == -orientation(a, c, b).value


def test_segment_examples():
    assert segments_intersect(((0, -1), (0, 1)), ((-1, 0), (1, 0)))
    assert not segments_intersect(((0, 0), (1, 0)), ((0, 1), (1, 1)))
    assert segments_intersect(((0, 0), (2, 0)), ((1, 0), (3, 0)))  # collinear overlap
    assert not segments_intersect(((0, 0), (1, 0)), ((2, 0), (3, 0)))  # collinear disjoint
    assert segments_intersect(((0, 0), (1, 1)), ((1, 1), (2, 0)))  # shared endpoint
    assert segments_intersect(((0, 0), (2, 0)), ((1, 0), (1, 5)))  # T junction


@given(seg, seg)
def test_segments_symmetric_and_exact_on_grid(s1, s2):
    r = segments_intersect(s1, s2)
    assert r == segments_intersect(s2, s1)
    assert r == segments_intersect(s1[::-1], s2) == segments_intersect(s1, s2[::-1])
    assert r == segments_intersect_exact(s1, s2)


def test_vectorised_segments_match_scalar():
    rng = np.random.default_rng(0)
    pts = rng.integers(-3, 4, size=(500, 4, 2)).astype(float)
    got = segments_intersect_many(pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3])
    for k in range(500):
        p = [tuple(x) for x in pts[k]]
        if p[0] == p[1] or p[2] == p[3]:
            continue
        assert got[k] == segments_intersect((p[0], p[1]), (p[2], p[3]))


def test_barrier_examples():
    wall = SemanticMap((TokenPolyline("w", ((0, -10), (0, 10)), B),))
    far = SemanticMap((TokenPolyline("w", ((100, -10), (100, 10)), B),))
    assert barrier_between((-5, 0), (5, 0), wall)
    assert not barrier_between((-5, 0), (5, 0), far)
    divider_only = SemanticMap((TokenPolyline("d", ((0, -10), (0, 10)), L),))
    assert not barrier_between((-5, 0), (5, 0), divider_only)


def test_barrier_at_endpoint_tangent():
    wall = SemanticMap((TokenPolyline("w", ((0, 0), (0, 10)), B),))
    # the agent-to-agent segment grazes the barrier's end token
    assert barrier_between((-5, 0), (5, 0), wall)
    assert not barrier_between((-5, -0.01), (5, -0.01), wall)
    assert barrier_between((-5, 0), (5, 0), wall) == any(
        segments_intersect_exact(((-5, 0), (5, 0)), s) for s in wall.polyline("w").segments()
    )


def test_barrier_matrix_matches_scalar():
    rng = np.random.default_rng(1)
    polys = tuple(
        TokenPolyline(f"b{k}", tuple(map(tuple, rng.uniform(-30, 30, (3, 2)))), B) for k in range(4)
    )
    smap = SemanticMap(polys)
    pos = rng.uniform(-30, 30, (25, 2))
    m = barrier_matrix(pos, smap)
    assert np.array_equal(m, m.T)
    for i, j in itertools.combinations(range(25), 2):
        assert m[i, j] == barrier_between(tuple(pos[i]), tuple(pos[j]), smap)
        assert barrier_between(tuple(pos[i]), tuple(pos[j]), smap) == barrier_between(tuple(pos[j]), tuple(pos[i]), smap)
    pairs = np.array([[0, 1], [2, 5]])
    sub = barrier_matrix(pos, smap, pairs)
    assert sub[0, 1] == m[0, 1] and sub[2, 5] == m[2, 5] and sub.sum() <= 4


def test_point_segment_and_projection():
    assert point_segment_distance((1, 1), (0, 0), (2, 0)) == 1
    assert point_segment_distance((3, 0), (0, 0), (2, 0)) == 1
    assert point_segment_distance((1, 1), (0, 0), (0, 0)) == math.sqrt(2)
    d, k, s = project_onto_polyline((5, 1), [(0, 0), (4, 0), (4, 4)])
    assert (d, k, s) == (1.0, 1, 5.0)


def _lanes():
    return SemanticMap(
        (
            TokenPolyline("d2", ((0, 3.5), (50, 3.5)), L),
            TokenPolyline("d1", ((0, 0), (50, 0)), L),
            TokenPolyline("back", ((50, -3.5), (0, -3.5)), L),
        )
    )


def test_associate_lane_examples():
    smap = _lanes()
    assert associate_lane(AgentState(10, 0, 0, 5, 0), smap) == "d1"
    assert associate_lane(AgentState(10, -3.5, math.pi, -5, 0), smap) == "back"
    # heading against the only nearby divider
    only_back = SemanticMap((smap.polyline("back"),))
    assert associate_lane(AgentState(10, -3.5, 0, 5, 0), only_back) is None
    # equidistant between two co-directional dividers: smaller id wins
    assert associate_lane(AgentState(10, 1.75, 0, 5, 0), smap) == "d1"
    # outside the association radius
    assert associate_lane(AgentState(10, 20, 0, 5, 0), smap) is None
    assert associate_lane(AgentState(10, 20, 0, 5, 0), smap, radius=20) == "d2"


def test_associate_lanes_matches_scalar():
    rng = np.random.default_rng(2)
    polys = []
    for k in range(8):
        pts = np.cumsum(rng.normal(0, 8, (4, 2)), axis=0) + rng.uniform(-20, 20, 2)
        polys.append(TokenPolyline(f"d{k}", tuple(map(tuple, pts)), L))
    smap = SemanticMap(tuple(polys))
    states = [AgentState(*rng.uniform(-30, 30, 2), rng.uniform(-math.pi, math.pi), 1, 0) for _ in range(300)]
    assert associate_lanes(states, smap, 6.0) == [associate_lane(s, smap, 6.0) for s in states]
    assert associate_lanes([], smap) == []
    assert associate_lanes(states[:2], SemanticMap()) == [None, None]


def _chain():
    polys = (
        TokenPolyline("d1", ((0, 0), (1, 0)), L),
        TokenPolyline("d2", ((1, 0), (2, 0)), L),
        TokenPolyline("d3", ((2, 0), (3, 0)), L),
        TokenPolyline("solo", ((9, 9), (9, 10)), L),
        TokenPolyline("wall", ((5, 5), (6, 6)), B),
    )
    return SemanticMap(polys, {"d1": ("d2",), "d2": ("d3",)})


def test_reachable_examples():
    smap = _chain()
    for depth in range(4):
        assert reachable_lanes("solo", smap, depth) == {"solo"}
    assert reachable_lanes("d1", smap, 0) == {"d1"}
    assert reachable_lanes("d1", smap, 1) == {"d1", "d2"}
    assert reachable_lanes("d1", smap, 3) == {"d1", "d2", "d3"}
    with pytest.raises(KeyError):
        reachable_lanes("nope", smap, 1)
    with pytest.raises(KeyError):
        reachable_lanes("wall", smap, 1)
    with pytest.raises(ValueError):
        reachable_lanes("d1", smap, -1)


def test_reachable_branching_against_walks_and_monotone():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = 9
        ids = [f"d{k}" for k in range(n)]
        succ = {i: tuple(sorted({ids[j] for j in rng.choice(n, rng.integers(0, 3))} - {i})) for i in ids}
        smap = SemanticMap(tuple(TokenPolyline(i, ((k, 0), (k, 1)), L) for k, i in enumerate(ids)), succ)
        for seed in ids:
            prev = frozenset()
            for depth in range(5):
                got = reachable_lanes(seed, smap, depth)
                assert got == reachable_by_walks(seed, succ, depth)
                assert prev <= got
                prev = got


def test_lanes_overlap_examples():
    assert lanes_overlap({"d1", "d3"}, {"d2", "d3"})
    assert not lanes_overlap({"d1"}, {"d2"})
    assert not lanes_overlap(set(), {"d1"})
    assert lanes_overlap({"a", "b"}, {"b"}) == lanes_overlap({"b"}, {"a", "b"})
