import math

import pytest

from semclique.cliques import ABLATIONS, CriteriaConfig, cliques_over_time
from semclique.scene import validate_scene
from semclique.sceneio import dumps_scene
from semclique.semantics import barrier_between
from semclique.synth import GT_MODELS, KINDS, gen_scenario, random_scene

SEEDS = range(25)


def partition(scene, toggle="all_on"):
    return [c.member_ids for c in cliques_over_time(scene, CriteriaConfig().replace(**ABLATIONS[toggle])).final]


@pytest.mark.parametrize("kind", KINDS)
def test_generated_scenes_valid_and_deterministic(kind):
    for seed in range(10):
        for gt in GT_MODELS:
            scene = gen_scenario(kind, seed, gt_model=gt)
            assert validate_scene(scene) == []
            assert dumps_scene(scene) == dumps_scene(gen_scenario(kind, seed, gt_model=gt))
            assert set(scene.ground_truth) == set(scene.agent_ids)
    assert dumps_scene(gen_scenario(kind, 1)) != dumps_scene(gen_scenario(kind, 2))


def test_unknown_kind_lists_valid_kinds():
    with pytest.raises(ValueError) as err:
        gen_scenario("roundabout", 0)
    assert all(k in str(err.value) for k in KINDS)
    assert gen_scenario("lane_merge", 0).scene_id == "lane-merge-0"


@pytest.mark.parametrize("bad", [{"dt": 0}, {"horizon": 0.1}, {"history_steps": 0}, {"gt_model": "x"}, {"outer_factor": 1.0}, {"speed": 3}])
def test_param_validation(bad):
    with pytest.raises(ValueError):
        gen_scenario("diverging", 0, **bad)


def test_params_shape_the_scene():
    s = gen_scenario("crossing", 0, dt=0.25, horizon=2.0, history_steps=3)
    assert s.dt == 0.25 and s.horizon_steps == 8
    assert all(len(a.history) == 4 for a in s.agents)


def test_divided_road_barrier_separates_opposing_pairs():
    for seed in SEEDS:
        scene = gen_scenario("divided-road", seed)
        for a in scene.agents:
            for b in scene.agents:
                sa, sb = a.history.last, b.history.last
                if sa.vx * sb.vx < 0:
                    assert barrier_between(sa.position, sb.position, scene.map)


def test_distance_ring_outer_agent_singleton_under_distance_only():
    for seed in SEEDS:
        for factor in (1.2, 1.5, 3.0):
            scene = gen_scenario("distance-ring", seed, outer_factor=factor)
            assert ("D",) in partition(scene, "distance_only")


def test_brake_model_stops_at_half_horizon():
    scene = gen_scenario("divided-road", 0, gt_model="brake")
    for gt in scene.ground_truth.values():
        tail = [s for i, s in gt.states[len(gt.states) // 2 - 1:]]
        assert all(math.hypot(s.vx, s.vy) < 1e-9 for s in tail)
        assert all(s.position == tail[0].position for s in tail)


def test_mixed_curbs_keep_pedestrians_apart():
    for seed in SEEDS:
        scene = gen_scenario("mixed", seed)
        for clique in partition(scene):
            kinds = {scene.agent(a).agent_type.kind for a in clique}
            assert len(kinds) == 1


def test_random_scene_size():
    scene = random_scene(0, n_agents=37)
    assert len(scene.agents) == 37 and validate_scene(scene) == []
    assert any(not a.agent_type.is_vehicle for a in scene.agents)
