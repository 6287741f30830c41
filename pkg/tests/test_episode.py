from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import corridor_world, flat_field, step_field
from wfcnav.agent import ProxyState, ScriptedPolicy
from wfcnav.episode import (
    COLLISION,
    GOAL_REACHED,
    TIMEOUT,
    DynamicObstacle,
    EpisodeConfig,
    EpisodeLog,
    EpisodeState,
    InvariantViolation,
    PositionBuffer,
    SteppingDoneEpisode,
    World,
    advance_obstacles,
    build_hl_observation,
    check_invariants,
    in_collision,
    rasterize_obstacles,
    reset,
    run_episode,
    sample_llc_command,
    scan_heights,
    step,
    update_position_buffer,
    LLC_COMMAND_RANGES,
)
from wfcnav.navgraph import NavGraph, NavNode, Path, waypoints_from_path


def line_world(field):
    nodes = [NavNode(i, 1.0 + 2.0 * i, 3.0) for i in range(5)]
    edges = [(i, i + 1, 2.0) for i in range(4)]
    return World(field, NavGraph(nodes, edges), 2.0, 0)


def manual_state(field, start, goal, cfg, yaw=0.0, obstacles=()):
    pts = np.array([start, goal], dtype=float)
    path = Path([0, 1], pts, np.array([0.0, float(np.linalg.norm(pts[1] - pts[0]))]))
    proxy = ProxyState(start[0], start[1], field.height_at(*start), yaw)
    buf = PositionBuffer(cfg.buffer_capacity, cfg.buffer_spacing)
    buf.seed(start)
    wp = waypoints_from_path(path, proxy.pos, 5.0)
    return EpisodeState(proxy, path, 5.0, wp, buf, list(obstacles), np.random.default_rng(0), hl_dt=cfg.hl_dt)


def test_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        EpisodeConfig(hl_dt=0.1, ll_dt=0.03)
    with pytest.raises(ValueError):
        EpisodeConfig(robot_radius=0.0)
    cfg = EpisodeConfig()
    assert cfg.substeps == 5 and cfg.max_hl_steps == 150
    ev = EpisodeConfig.evaluation()
    assert (ev.max_episode_s, ev.goal_radius, ev.waypoint_mode) == (60.0, 0.5, "anchor")
    assert EpisodeConfig.from_dict(ev.to_dict()) == ev


def test_drive_to_goal_five_metres_away():
    field = flat_field(120, 60)
    cfg = EpisodeConfig()
    s = manual_state(field, (1.0, 3.0), (6.0, 3.0), cfg)
    world = line_world(field)
    for _ in range(25):
        s, _, done, reason = step(s, world, [2.0, 0.0, 0.0], cfg)
        if done:
            break
    assert done and reason == GOAL_REACHED


def test_zero_command_keeps_pose_and_times_out():
    field = flat_field(120, 60)
    cfg = EpisodeConfig(max_episode_s=1.0)
    s = manual_state(field, (1.0, 3.0), (8.0, 3.0), cfg)
    world = line_world(field)
    for k in range(10):
        s, br, done, reason = step(s, world, [0.0, 0.0, 0.0], cfg)
        assert (s.proxy.x, s.proxy.y) == (1.0, 3.0)
        assert br.hl["stability"] == 0.0
    assert done and reason == TIMEOUT and s.elapsed == pytest.approx(1.0)
    with pytest.raises(SteppingDoneEpisode):
        step(s, world, [0.0, 0.0, 0.0], cfg)


def test_stability_active_near_waypoint():
    field = flat_field(120, 60)
    cfg = EpisodeConfig()
    s = manual_state(field, (1.0, 3.0), (1.5, 3.0), cfg)
    s, br, done, reason = step(s, line_world(field), [0.0, 0.0, 0.0], cfg)
    assert br.hl["stability"] == 1.0 and reason == GOAL_REACHED


def test_out_of_bounds_action_rejected():
    field = flat_field(120, 60)
    cfg = EpisodeConfig()
    s = manual_state(field, (1.0, 3.0), (8.0, 3.0), cfg)
    with pytest.raises(ValueError):
        step(s, line_world(field), [9.0, 0.0, 0.0], cfg)


def test_wall_collision_and_goal_precedence():
    field = step_field(3.0, 1.0, nx=80, ny=60)
    cfg = EpisodeConfig()
    s = manual_state(field, (2.0, 3.0), (6.0, 3.0), cfg)
    world = line_world(field)
    reason = None
    for _ in range(20):
        s, br, done, reason = step(s, world, [1.0, 0.0, 0.0], cfg)
        if done:
            break
    assert reason == COLLISION and br.reg["survival"] == 0.0
    s = manual_state(field, (2.0, 3.0), (2.5, 3.0), cfg)
    s, _, done, reason = step(s, world, [1.0, 0.0, 0.0], cfg)
    assert reason == GOAL_REACHED


def test_obstacle_footprint_collides():
    field = flat_field(120, 60)
    cfg = EpisodeConfig()
    p = ProxyState(3.0, 3.0, 0.0, 0.0)
    ob = DynamicObstacle(3.5, 3.0, (0.4, 0.4), 0.2)
    assert in_collision(field, p, [ob], cfg)
    assert not in_collision(field, p, [DynamicObstacle(5.0, 3.0, (0.4, 0.4), 0.2)], cfg)


def test_advance_obstacles_examples():
    ob = DynamicObstacle(1.0, 0.0, (0.1, 0.1), 0.5)
    moved = advance_obstacles([ob], (0.0, 0.0), 0.1, standoff=0.0, robot_radius=0.0)[0]
    assert moved.x == pytest.approx(0.95, abs=1e-15) and moved.y == 0.0
    same = advance_obstacles([DynamicObstacle(0.0, 0.0, (0.1, 0.1), 0.5)], (0.0, 0.0), 0.1)[0]
    assert (same.x, same.y) == (0.0, 0.0)
    at = DynamicObstacle(0.05 + 0.35 + 0.3, 0.0, (0.1, 0.1), 0.5)
    assert advance_obstacles([at], (0.0, 0.0), 0.1)[0] == at
    near = DynamicObstacle(0.72, 0.0, (0.1, 0.1), 0.5)
    stopped = advance_obstacles([near], (0.0, 0.0), 0.1)[0]
    assert stopped.distance(0.0, 0.0) - 0.35 == pytest.approx(0.3, abs=1e-9)
    with pytest.raises(ValueError):
        advance_obstacles([ob], (0.0, 0.0), 0.0)


def test_rasterize_obstacles():
    field = flat_field(60, 60)
    assert np.array_equal(rasterize_obstacles(field, []).data, field.data)
    one = rasterize_obstacles(field, [DynamicObstacle(3.0, 3.0, (1.0, 1.0), 0.2, 1.0)])
    ys, xs = np.mgrid[0:60, 0:60] * 0.1 + 0.05
    dx = np.maximum(np.abs(xs - 3.0) - 0.5, 0)
    dy = np.maximum(np.abs(ys - 3.0) - 0.5, 0)
    assert np.array_equal(one.data > 0.5, dx ** 2 + dy ** 2 <= 0.25)
    two = rasterize_obstacles(field, [DynamicObstacle(3.0, 3.0, (1.0, 1.0), 0.2, 1.0),
                                      DynamicObstacle(3.2, 3.0, (1.0, 1.0), 0.2, 2.0)])
    assert two.data.max() == 2.0


def test_buffer_walk_and_eviction():
    buf = PositionBuffer()
    buf.seed((0.0, 0.0))
    for k in range(1, 13):
        update_position_buffer(buf, (0.1 * k, 0.0))
    assert len(buf) == 3
    assert [round(p[0], 9) for p in buf.positions] == [0.0, 0.5, 1.0]
    big = PositionBuffer()
    for k in range(21):
        update_position_buffer(big, (float(k), 0.0))
    assert len(big) == 20 and big.positions[0] == (1.0, 0.0)


def test_standing_still_counts_visits():
    buf = PositionBuffer()
    buf.seed((0.0, 0.0))
    update_position_buffer(buf, (0.6, 0.0))
    for _ in range(10):
        update_position_buffer(buf, (0.62, 0.0))
    assert buf.visits == [0, 10]


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), max_size=80))
def test_buffer_spacing_invariant(walk):
    buf = PositionBuffer()
    buf.seed((0.0, 0.0))
    for p in walk:
        update_position_buffer(buf, p)
    for a, b in zip(buf.positions, buf.positions[1:]):
        assert math.dist(a, b) >= 0.5 - 1e-9
    assert len(buf) <= 20


def test_llc_command_resampling():
    rng = np.random.default_rng(0)
    n, p = 1_000_000, 0.005
    count = int(np.sum(rng.random(n) < p))
    assert abs(count - n * p) <= 3 * math.sqrt(n * p * (1 - p))
    cur = np.array([0.1, 0.2, 0.3])
    rng = np.random.default_rng(1)
    changed = 0
    for _ in range(20_000):
        nxt = sample_llc_command(rng, cur)
        if not np.array_equal(nxt, cur):
            changed += 1
            for v, (lo, hi) in zip(nxt, LLC_COMMAND_RANGES):
                assert lo <= v <= hi
    assert abs(changed - 100) <= 3 * math.sqrt(20_000 * p * (1 - p))
    const = [sample_llc_command(rng, cur, prob=0.0) for _ in range(100)]
    assert all(np.array_equal(c, cur) for c in const)


def test_flat_scan_is_minus_base_height():
    field = flat_field(120, 120, z=0.7)
    cfg = EpisodeConfig()
    scan, out = scan_heights(field, ProxyState(6.0, 6.0, 0.7, 0.3), [], cfg)
    assert not out
    assert np.allclose(scan, -0.55, atol=1e-6)


def test_scan_rotation():
    res = 0.1
    xs = res / 2 + np.arange(120) * res
    from wfcnav.terrain import HeightField
    ramp = HeightField(res, (res / 2, res / 2), np.tile(0.1 * xs, (120, 1)))
    cfg = EpisodeConfig()
    gx, gy = cfg.scan.grid()
    p0 = ProxyState(6.0, 6.0, 0.6, 0.0)
    s0, _ = scan_heights(ramp, p0, [], cfg)
    assert np.allclose(s0, 0.1 * (6.0 + gx) - 0.6 - 0.55, atol=1e-5)
    p90 = ProxyState(6.0, 6.0, 0.6, math.pi / 2)
    s90, _ = scan_heights(ramp, p90, [], cfg)
    assert np.allclose(s90, 0.1 * (6.0 - gy) - 0.6 - 0.55, atol=1e-5)


def test_reset_and_initial_observation(wfc_world):
    cfg = EpisodeConfig()
    s = reset(wfc_world, cfg, np.random.default_rng(3))
    assert len(s.buffer) == 1
    assert all(0.1 <= ob.speed <= 0.5 for ob in s.obstacles)
    obs = build_hl_observation(s, wfc_world.field, cfg)
    assert obs.height_scan.shape == (3,) + cfg.scan.grid()[0].shape
    assert np.array_equal(obs.height_scan[0], obs.height_scan[1])
    assert np.array_equal(obs.height_scan[1], obs.height_scan[2])
    assert obs.flat().ndim == 1


def test_scan_relativity(wfc_world):
    cfg = EpisodeConfig()
    s = reset(wfc_world, cfg, np.random.default_rng(5))
    a = build_hl_observation(s, wfc_world.field, cfg).height_scan
    lifted = wfc_world.field.with_offset(3.25)
    s.proxy = ProxyState(s.proxy.x, s.proxy.y, s.proxy.z + 3.25, s.proxy.yaw)
    b = build_hl_observation(s, lifted, cfg).height_scan
    assert np.allclose(a, b, atol=1e-5)


def test_run_episode_deterministic_and_round_trips():
    world = corridor_world()
    cfg = EpisodeConfig(check_invariants=True)
    a = run_episode(world, cfg, np.random.default_rng([1, 2]), ScriptedPolicy(), 4)
    b = run_episode(world, cfg, np.random.default_rng([1, 2]), ScriptedPolicy(), 4)
    assert a.to_jsonl() == b.to_jsonl()
    assert EpisodeLog.from_jsonl(a.to_jsonl()).to_jsonl() == a.to_jsonl()
    assert a.header["episode"] == 4 and a.records[-1]["done"]
    assert a.header["reason"] in (GOAL_REACHED, COLLISION, TIMEOUT)
    with pytest.raises(ValueError):
        EpisodeLog.from_jsonl('{"type": "record"}\n')


def test_check_invariants_catches_violations():
    field = flat_field(120, 60)
    cfg = EpisodeConfig()
    s = manual_state(field, (1.0, 3.0), (8.0, 3.0), cfg)
    check_invariants(s, cfg)
    s.buffer.positions.append((1.1, 3.0))
    s.buffer.visits.append(0)
    with pytest.raises(InvariantViolation):
        check_invariants(s, cfg)
    s = manual_state(field, (1.0, 3.0), (8.0, 3.0), cfg,
                     obstacles=[DynamicObstacle(9.0, 3.0, (0.5, 0.5), 0.9)])
    with pytest.raises(InvariantViolation):
        check_invariants(s, cfg)
    s = manual_state(field, (1.0, 3.0), (8.0, 3.0), cfg)
    with pytest.raises(InvariantViolation):
        check_invariants(s, cfg, prev_s1=s.waypoints.s1 + 1.0)
