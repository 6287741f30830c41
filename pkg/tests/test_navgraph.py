from __future__ import annotations

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from oracles import bellman_ford, dense_projection, polyline_distance, random_graph
from wfcnav.navgraph import (
    AnchorPursuit,
    EmptyPath,
    IllegalMap,
    NavGraph,
    NavNode,
    NoQualifyingPath,
    Path,
    UnknownNode,
    Unreachable,
    anchor_pursuit,
    build_nav_graph,
    graph_from_dict,
    graph_to_dict,
    project_onto_path,
    read_graph,
    sample_episode_path,
    shortest_path,
    waypoints_from_path,
    write_graph,
)
from wfcnav.worldgen import FLOOR0, FLOOR1, OBSTACLE, STAIR_X, STAIR_Y, TileMap, build_tile_catalog


def tmap(rows):
    cells = np.array(rows)
    return TileMap(cells.shape[1], cells.shape[0], cells, 0)


def line_graph(n, spacing=2.0):
    nodes = [NavNode(i, i * spacing, 0.0) for i in range(n)]
    return NavGraph(nodes, [(i, i + 1, spacing) for i in range(n - 1)])


def test_two_floor_tiles():
    m = tmap([[FLOOR0, FLOOR0]])
    g = build_nav_graph(m, build_tile_catalog(m.cells), 2.0)
    assert len(g.nodes) == 2
    assert g.edges == [(0, 1, 2.0)]


def test_stair_has_no_side_edge():
    rows = [[FLOOR0, FLOOR0, FLOOR0], [FLOOR0, STAIR_X, FLOOR1]]
    cat = build_tile_catalog(rows, extra_rules=[(FLOOR0, STAIR_X, "y")])
    g = build_nav_graph(tmap(rows), cat)
    stair = next(i for i, rc in g.tiles.items() if rc == (1, 1))
    above = next(i for i, rc in g.tiles.items() if rc == (0, 1))
    left = next(i for i, rc in g.tiles.items() if rc == (1, 0))
    right = next(i for i, rc in g.tiles.items() if rc == (1, 2))
    assert not g.has_edge(stair, above)
    assert g.has_edge(stair, left) and g.has_edge(stair, right)


def test_levels_only_meet_through_stairs():
    rows = [[FLOOR0, FLOOR1], [FLOOR0, FLOOR1]]
    g = build_nav_graph(tmap(rows), build_tile_catalog(rows))
    assert not g.has_edge(0, 1) and g.has_edge(0, 2) and g.has_edge(1, 3)


def test_stair_y_connects_vertically():
    rows = [[FLOOR0], [STAIR_Y], [FLOOR1]]
    g = build_nav_graph(tmap(rows), build_tile_catalog(rows))
    assert g.has_edge(0, 1) and g.has_edge(1, 2)


def test_all_obstacles_give_empty_graph():
    rows = [[OBSTACLE] * 3] * 2
    g = build_nav_graph(tmap(rows), build_tile_catalog(rows))
    assert g.nodes == [] and g.edges == []


def test_illegal_map_rejected():
    cat = build_tile_catalog([[FLOOR0, FLOOR0]])
    with pytest.raises(IllegalMap):
        build_nav_graph(tmap([[FLOOR0], [FLOOR0]]), cat)


def test_edge_lengths_checked():
    with pytest.raises(ValueError):
        NavGraph([NavNode(0, 0, 0), NavNode(1, 3, 4)], [(0, 1, 4.0)])


def test_trivial_and_unreachable_paths():
    g = NavGraph([NavNode(0, 0, 0), NavNode(1, 2, 0), NavNode(2, 10, 0)], [(0, 1, 2.0)])
    p = shortest_path(g, 1, 1)
    assert p.nodes == [1] and p.length == 0.0
    with pytest.raises(Unreachable):
        shortest_path(g, 0, 2)
    with pytest.raises(UnknownNode):
        shortest_path(g, 0, 7)


def test_square_matches_exhaustive_search():
    nodes = [NavNode(0, 0, 0), NavNode(1, 3, 0), NavNode(2, 3, 4), NavNode(3, 0, 4)]
    g = NavGraph(nodes, [(0, 1, 3.0), (1, 2, 4.0), (2, 3, 3.0), (3, 0, 4.0)])
    for s, t in itertools.permutations(range(4), 2):
        best = math.inf
        for k in range(0, 3):
            for mid in itertools.permutations([v for v in range(4) if v not in (s, t)], k):
                seq = [s, *mid, t]
                if all(g.has_edge(a, b) for a, b in zip(seq, seq[1:])):
                    best = min(best, sum(dict(((a, b), w) for a, b, w in g.edges + [(b, a, w) for a, b, w in g.edges])[(a, b)]
                                         for a, b in zip(seq, seq[1:])))
        assert shortest_path(g, s, t).length == best


def test_equal_routes_prefer_smaller_ids():
    nodes = [NavNode(0, 0, 0), NavNode(1, 1, 1), NavNode(2, 1, -1), NavNode(3, 2, 0)]
    r2 = math.sqrt(2.0)
    g = NavGraph(nodes, [(0, 2, r2), (0, 1, r2), (1, 3, r2), (2, 3, r2)])
    assert shortest_path(g, 0, 3).nodes == [0, 1, 3]


@given(st.integers(0, 10**6), st.integers(2, 50), st.floats(0.02, 0.3))
def test_dijkstra_matches_bellman_ford(seed, n, p):
    g = random_graph(np.random.default_rng(seed), n, p)
    ref = bellman_ford(g, 0)
    for dst in range(n):
        if math.isinf(ref[dst]):
            with pytest.raises(Unreachable):
                shortest_path(g, 0, dst)
        else:
            path = shortest_path(g, 0, dst)
            assert path.length == ref[dst]
            assert all(g.has_edge(a, b) for a, b in zip(path.nodes, path.nodes[1:]))


def test_line_graph_sampling_covers_qualifying_pairs():
    g = line_graph(10)
    qualifying = {(a, b) for a in range(10) for b in range(10) if 5.0 <= 2.0 * abs(a - b) <= 20.0}
    rng = np.random.default_rng(1)
    counts = {q: 0 for q in qualifying}
    for _ in range(4000):
        p = sample_episode_path(g, rng)
        assert 5.0 <= p.length <= 20.0
        assert 3 <= len(p.nodes) - 1 <= 9
        counts[(p.nodes[0], p.nodes[-1])] += 1
    assert stats.chisquare(list(counts.values())).pvalue > 0.001


def test_sampling_errors_and_determinism():
    g = line_graph(3)
    with pytest.raises(NoQualifyingPath):
        sample_episode_path(g, np.random.default_rng(0), 5.0, 20.0, max_tries=50)
    g = line_graph(10)
    a = sample_episode_path(g, np.random.default_rng(4))
    b = sample_episode_path(g, np.random.default_rng(4))
    assert a.nodes == b.nodes


def straight(length=30.0):
    return Path.from_points([[0.0, 0.0], [length / 2, 0.0], [length, 0.0]])


def test_waypoints_on_straight_path():
    w = waypoints_from_path(straight(), [0.0, 0.0], 5.0)
    assert np.allclose(w.wp1, [5, 0]) and np.allclose(w.wp2, [10, 0])


def test_waypoints_past_end_collapse_to_final_node():
    w = waypoints_from_path(straight(), [31.0, 0.0], 7.0)
    assert np.array_equal(w.wp1, [30, 0]) and np.array_equal(w.wp2, [30, 0])


def test_waypoints_ignore_lateral_offset():
    w = waypoints_from_path(straight(), [4.0, 1.0], 5.0)
    assert np.allclose(w.wp1, [9, 0]) and np.allclose(w.wp2, [14, 0])
    with pytest.raises(ValueError):
        waypoints_from_path(straight(), [0, 0], 0.0)
    with pytest.raises(EmptyPath):
        Path([], [], [])


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=2, max_size=6),
       st.floats(0.5, 8.0), st.integers(0, 10**6))
def test_waypoints_lie_on_path_and_advance(pts, d, seed):
    path = Path.from_points(pts)
    rng = np.random.default_rng(seed)
    prev = -1.0
    progress = 0.0
    for s in np.sort(rng.uniform(0, path.length, 10)):
        pos = path.point_at(s) + rng.normal(0, 0.2, 2)
        sp, _ = project_onto_path(path, pos)
        progress = max(progress, sp)
        w = waypoints_from_path(path, pos, d, progress)
        assert polyline_distance(path.points, w.wp1) < 1e-6
        assert polyline_distance(path.points, w.wp2) < 1e-6
        assert w.s1 <= w.s2
        assert w.s1 >= prev
        prev = w.s1


def test_projection_examples():
    path = straight()
    s, q = project_onto_path(path, [12.5, 0.0])
    assert s == 12.5 and np.array_equal(q, [12.5, 0.0])
    corner = Path.from_points([[0, 0], [2, 0], [2, 2], [0, 2]])
    s, _ = project_onto_path(corner, [1.0, 1.0])
    assert s == 1.0


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=5),
       st.tuples(st.floats(-6, 6), st.floats(-6, 6)))
def test_projection_matches_dense_sampling(pts, pos):
    path = Path.from_points(pts)
    s, q = project_onto_path(path, pos)
    _, d_ref = dense_projection(path.points, pos)
    assert abs(float(np.linalg.norm(q - np.asarray(pos))) - d_ref) <= 2e-3
    assert float(np.linalg.norm(q - np.asarray(pos))) <= d_ref + 1e-12


def test_anchor_near_node_returns_node():
    path = Path.from_points([[0, 0], [2, 0], [20, 0]])
    wp, k = anchor_pursuit(path, [0.0, 0.0])
    assert np.array_equal(wp, [2, 0]) and k == 1


def test_anchor_far_node_uses_lookahead():
    path = Path.from_points([[0, 0], [10, 0], [20, 0]])
    wp, k = anchor_pursuit(path, [1.0, 0.5])
    assert np.allclose(wp, [4.0, 0.0]) and k == 1


def test_anchor_blocks_shortcut_on_l_path():
    path = Path.from_points([[0, 0], [10, 0], [10, 10]])
    wp, k = anchor_pursuit(path, [6.0, 6.0])
    assert k == 1 and wp[1] == 0.0 and wp[0] <= 10.0
    pursuit = AnchorPursuit(path)
    pos = np.array([0.0, 0.0])
    closest = [math.inf] * 3
    for _ in range(400):
        target = pursuit(pos)
        step = target - pos
        n = float(np.linalg.norm(step))
        pos = pos + (step / n * min(0.2, n) if n > 0 else 0.0)
        for i, p in enumerate(path.points):
            closest[i] = min(closest[i], float(np.linalg.norm(pos - p)))
    assert closest[1] < 1.0 and closest[2] < 1.0


def test_anchor_degenerate_path():
    p = Path.from_points([[3.0, 4.0]])
    wp, k = anchor_pursuit(p, [0.0, 0.0])
    assert np.array_equal(wp, [3, 4])


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=2, max_size=6),
       st.tuples(st.floats(-12, 12), st.floats(-12, 12)), st.integers(1, 5))
def test_anchor_stays_on_polyline(pts, pos, idx):
    path = Path.from_points(pts)
    wp, _ = anchor_pursuit(path, pos, idx)
    assert polyline_distance(path.points, wp) < 1e-6


def test_graph_json_round_trip(tmp_path):
    g = random_graph(np.random.default_rng(3), 12, 0.3)
    write_graph(g, tmp_path / "a.json")
    write_graph(read_graph(tmp_path / "a.json"), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    doc = json.loads((tmp_path / "a.json").read_text())
    assert set(doc) == {"nodes", "edges"} and set(doc["edges"][0]) == {"a", "b", "len"}
    assert graph_to_dict(graph_from_dict(doc)) == doc
