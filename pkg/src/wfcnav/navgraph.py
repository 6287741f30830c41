"""Navigation graph over tile maps, shortest paths and waypoint selection."""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .terrain import DEFAULT_TILE_SIZE, HeightField, floor_level, stair_levels
from .worldgen import Category, TileCatalog, TileMap, validate_adjacency

TRAIN_LOOKAHEAD_RANGE = (5.0, 20.0)
DEPLOY_LOOKAHEAD = 3.0
SWITCH_RADIUS = 3.0
PASS_RADIUS = 1.0


class NavGraphError(Exception):
    pass


class IllegalMap(NavGraphError):
    pass


class UnknownNode(NavGraphError, KeyError):
    pass


class Unreachable(NavGraphError):
    pass


class NoQualifyingPath(NavGraphError):
    pass


class EmptyPath(NavGraphError):
    pass


@dataclass(frozen=True)
class NavNode:
    id: int
    x: float
    y: float
    z: float = 0.0

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class NavGraph:
    """Undirected graph; edge lengths are horizontal distances between node centres."""

    nodes: list[NavNode]
    edges: list[tuple[int, int, float]]
    tiles: dict[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        for i, n in enumerate(self.nodes):
            if n.id != i:
                raise ValueError("node ids must be 0..n-1 in order")
        self.adjacency: list[list[tuple[int, float]]] = [[] for _ in self.nodes]
        seen = set()
        for a, b, length in self.edges:
            if a == b or not (0 <= a < len(self.nodes) and 0 <= b < len(self.nodes)):
                raise ValueError(f"bad edge ({a}, {b})")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            na, nb = self.nodes[a], self.nodes[b]
            euclid = math.sqrt((na.x - nb.x) ** 2 + (na.y - nb.y) ** 2)
            if not length > 0 or abs(length - euclid) > 1e-9 * max(1.0, euclid):
                raise ValueError(f"edge ({a}, {b}) length {length} != centre distance {euclid}")
            self.adjacency[a].append((b, float(length)))
            self.adjacency[b].append((a, float(length)))
        for nbrs in self.adjacency:
            nbrs.sort()

    def __len__(self) -> int:
        return len(self.nodes)

    def positions(self) -> np.ndarray:
        return np.array([[n.x, n.y] for n in self.nodes]).reshape(len(self.nodes), 2)

    def has_edge(self, a: int, b: int) -> bool:
        return any(v == b for v, _ in self.adjacency[a])

    def check_node(self, n: int) -> None:
        if not 0 <= n < len(self.nodes):
            raise UnknownNode(f"unknown node id {n}")

    def nearest_node(self, xy) -> int:
        d = np.linalg.norm(self.positions() - np.asarray(xy, dtype=float)[None, :], axis=1)
        return int(np.argmin(d))


def _side_levels(category: Category, lo: int, hi: int) -> dict[str, int | None]:
    """Level reachable on each side (-x, +x, -y, +y) of a tile; None means no passage."""
    lvl = floor_level(category)
    if lvl is not None:
        return {"-x": lvl, "+x": lvl, "-y": lvl, "+y": lvl}
    if category == Category.STAIR_X:
        return {"-x": lo, "+x": hi, "-y": None, "+y": None}
    if category == Category.STAIR_Y:
        return {"-x": None, "+x": None, "-y": lo, "+y": hi}
    return {"-x": None, "+x": None, "-y": None, "+y": None}


def build_nav_graph(tile_map: TileMap, catalog: TileCatalog, tile_size: float = DEFAULT_TILE_SIZE,
                    field: HeightField | None = None) -> NavGraph:
    """One node per non-obstacle tile, 4-connected edges between tiles that meet level.

    Floors meet their neighbours at their own level on every side; stairs
    connect only along their axis, at the level of the corresponding end.
    Node elevation comes from ``field`` when given, otherwise in level units.
    """
    bad = validate_adjacency(tile_map, catalog)
    if bad:
        raise IllegalMap(f"{len(bad)} forbidden adjacencies, first at {bad[0]}")
    h, w = tile_map.height, tile_map.width
    ids = -np.ones((h, w), dtype=np.int64)
    sides = {}
    nodes: list[NavNode] = []
    tiles: dict[int, tuple[int, int]] = {}
    for r in range(h):
        for c in range(w):
            cat = catalog.kind(int(tile_map.cells[r, c])).category
            if cat == Category.OBSTACLE:
                continue
            lo, hi = stair_levels(tile_map, catalog, r, c) if cat.is_stair else (0, 0)
            sides[r, c] = _side_levels(cat, lo, hi)
            x, y = (c + 0.5) * tile_size, (r + 0.5) * tile_size
            if field is not None:
                z = field.height_at(x, y)
            else:
                lvl = floor_level(cat)
                z = float(lvl) if lvl is not None else 0.5 * (lo + hi)
            ids[r, c] = len(nodes)
            tiles[len(nodes)] = (r, c)
            nodes.append(NavNode(len(nodes), x, y, z))

    edges = []
    for r in range(h):
        for c in range(w):
            if ids[r, c] < 0:
                continue
            a = int(tile_map.cells[r, c])
            for dr, dc, axis, near, far in ((0, 1, "x", "+x", "-x"), (1, 0, "y", "+y", "-y")):
                rr, cc = r + dr, c + dc
                if rr >= h or cc >= w or ids[rr, cc] < 0:
                    continue
                la, lb = sides[r, c][near], sides[rr, cc][far]
                if la is None or lb is None or la != lb:
                    continue
                if not catalog.allows(a, int(tile_map.cells[rr, cc]), axis):
                    continue
                edges.append((int(ids[r, c]), int(ids[rr, cc]), float(tile_size)))
    return NavGraph(nodes, edges, tiles)


@dataclass
class Path:
    nodes: list[int]
    points: np.ndarray
    arc: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.arc = np.asarray(self.arc, dtype=float)
        if len(self.nodes) == 0:
            raise EmptyPath("path has no nodes")
        if len(self.points) != len(self.nodes) or len(self.arc) != len(self.nodes):
            raise ValueError("nodes, points and arc lengths must be congruent")

    @property
    def length(self) -> float:
        return float(self.arc[-1])

    @classmethod
    def from_nodes(cls, graph: NavGraph, node_ids: Sequence[int]) -> "Path":
        node_ids = [int(n) for n in node_ids]
        for n in node_ids:
            graph.check_node(n)
        pts = np.array([[graph.nodes[n].x, graph.nodes[n].y] for n in node_ids]).reshape(-1, 2)
        arc = np.zeros(len(node_ids))
        for i in range(1, len(node_ids)):
            if not graph.has_edge(node_ids[i - 1], node_ids[i]):
                raise ValueError(f"no edge between {node_ids[i - 1]} and {node_ids[i]}")
            arc[i] = arc[i - 1] + math.sqrt(float(np.sum((pts[i] - pts[i - 1]) ** 2)))
        return cls(node_ids, pts, arc)

    @classmethod
    def from_points(cls, points) -> "Path":
        """Path over a bare polyline; node ids are the point indices."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        seg = np.sqrt(np.sum(np.diff(pts, axis=0) ** 2, axis=1))
        return cls(list(range(len(pts))), pts, np.concatenate([[0.0], np.cumsum(seg)]))

    def point_at(self, s: float) -> np.ndarray:
        if len(self.nodes) == 1 or s <= 0.0:
            return self.points[0].copy()
        if s >= self.arc[-1]:
            return self.points[-1].copy()
        i = int(np.searchsorted(self.arc, s, side="right")) - 1
        i = min(max(i, 0), len(self.arc) - 2)
        seg = self.arc[i + 1] - self.arc[i]
        t = 0.0 if seg == 0.0 else (s - self.arc[i]) / seg
        return self.points[i] + t * (self.points[i + 1] - self.points[i])


def _dijkstra(graph: NavGraph, src: int, cutoff: float = math.inf):
    n = len(graph.nodes)
    dist = [math.inf] * n
    pred = [-1] * n
    done = [False] * n
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        if d > cutoff:
            break
        done[u] = True
        for v, w in graph.adjacency[u]:
            nd = d + w
            if nd < dist[v] or (nd == dist[v] and not done[v] and u < pred[v]):
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, pred


def _unwind(pred, src: int, dst: int) -> list[int]:
    out = [dst]
    while out[-1] != src:
        out.append(pred[out[-1]])
    return out[::-1]


def shortest_path(graph: NavGraph, src: int, dst: int) -> Path:
    """Dijkstra; among equal-length routes the smaller predecessor id wins."""
    graph.check_node(src)
    graph.check_node(dst)
    dist, pred = _dijkstra(graph, src)
    if math.isinf(dist[dst]):
        raise Unreachable(f"node {dst} unreachable from {src}")
    path = _unwind(pred, src, dst)
    return Path(path, [[graph.nodes[i].x, graph.nodes[i].y] for i in path],
                [dist[i] for i in path])


def sample_episode_path(graph: NavGraph, rng: np.random.Generator, min_len: float = 5.0,
                        max_len: float = 20.0, max_tries: int = 1000) -> Path:
    """Rejection-sample an ordered node pair whose geodesic length lies in [min_len, max_len]."""
    if not 0 <= min_len <= max_len:
        raise ValueError("need 0 <= min_len <= max_len")
    n = len(graph.nodes)
    if n == 0:
        raise NoQualifyingPath("graph has no nodes")
    for _ in range(max_tries):
        src, dst = (int(v) for v in rng.integers(0, n, size=2))
        if src == dst and min_len > 0:
            continue
        dist, pred = _dijkstra(graph, src, cutoff=max_len)
        d = dist[dst]
        if min_len <= d <= max_len:
            path = _unwind(pred, src, dst)
            return Path(path, [[graph.nodes[i].x, graph.nodes[i].y] for i in path],
                        [dist[i] for i in path])
    raise NoQualifyingPath(f"no path with length in [{min_len}, {max_len}] after {max_tries} tries")


def project_onto_path(path: Path, pos, upto: int | None = None) -> tuple[float, np.ndarray]:
    """Arc length and location of the closest polyline point to ``pos``.

    ``upto`` restricts the search to the polyline ending at that node index.
    Exact ties go to the smaller arc length.
    """
    p = np.asarray(pos, dtype=float)[:2]
    pts = path.points
    last = len(pts) - 1 if upto is None else min(max(int(upto), 0), len(pts) - 1)
    best_d = float(np.sum((pts[0] - p) ** 2))
    best_s, best_q = 0.0, pts[0].copy()
    for i in range(last):
        a, b = pts[i], pts[i + 1]
        ab = b - a
        l2 = float(ab @ ab)
        t = 0.0 if l2 == 0.0 else min(max(float((p - a) @ ab) / l2, 0.0), 1.0)
        q = a + t * ab
        d = float(np.sum((q - p) ** 2))
        if d < best_d:
            best_d = d
            best_s = float(path.arc[i] + t * (path.arc[i + 1] - path.arc[i]))
            best_q = q
    return best_s, best_q


@dataclass(frozen=True)
class WaypointPair:
    wp1: np.ndarray
    wp2: np.ndarray
    lookahead: float
    s1: float = 0.0
    s2: float = 0.0


def waypoints_from_path(path: Path, robot_pos, lookahead: float, min_progress: float = 0.0) -> WaypointPair:
    """Two waypoints one and two lookaheads past the robot's projection.

    Both clamp to the path end, where they coincide with the final node.
    ``min_progress`` floors the projected arc length (for monotone progress).
    """
    if not lookahead > 0:
        raise ValueError("lookahead must be > 0")
    if len(path.nodes) == 0:
        raise EmptyPath("path has no nodes")
    s, _ = project_onto_path(path, robot_pos)
    s = max(s, min_progress)
    s1 = min(s + lookahead, path.length)
    s2 = min(s + 2.0 * lookahead, path.length)
    return WaypointPair(path.point_at(s1), path.point_at(s2), lookahead, s1, s2)


def anchor_pursuit(path: Path, robot_pos, next_index: int = 1, switch_radius: float = SWITCH_RADIUS,
                   lookahead: float = DEPLOY_LOOKAHEAD,
                   pass_radius: float = PASS_RADIUS) -> tuple[np.ndarray, int]:
    """Deployment waypoint and the updated index of the next un-passed node.

    A node closer than ``switch_radius`` is the waypoint. It counts as passed
    once the robot is within ``pass_radius``, and the selector moves on to the following node. Farther away, the
    target is ``lookahead`` past the robot's projection onto the path before
    that node, never beyond the node itself, so no node can be skipped.
    """
    p = np.asarray(robot_pos, dtype=float)[:2]
    n = len(path.nodes)
    if n == 1:
        return path.points[0].copy(), 1
    reach = min(pass_radius, switch_radius)
    k = max(int(next_index), 0)
    while k < n - 1 and float(np.linalg.norm(path.points[k] - p)) < reach:
        k += 1
    if k >= n - 1 and float(np.linalg.norm(path.points[-1] - p)) < reach:
        return path.points[-1].copy(), n
    if k >= n:
        return path.points[-1].copy(), n
    if float(np.linalg.norm(path.points[k] - p)) < switch_radius:
        return path.points[k].copy(), k
    s, _ = project_onto_path(path, p, upto=k)
    return path.point_at(min(s + lookahead, float(path.arc[k]))), k


@dataclass
class AnchorPursuit:
    path: Path
    switch_radius: float = SWITCH_RADIUS
    lookahead: float = DEPLOY_LOOKAHEAD
    pass_radius: float = PASS_RADIUS
    next_index: int = 1

    def __call__(self, robot_pos) -> np.ndarray:
        wp, self.next_index = anchor_pursuit(self.path, robot_pos, self.next_index,
                                             self.switch_radius, self.lookahead, self.pass_radius)
        return wp


def graph_to_dict(graph: NavGraph) -> dict:
    return {
        "nodes": [{"id": n.id, "x": n.x, "y": n.y, "z": n.z} for n in graph.nodes],
        "edges": [{"a": a, "b": b, "len": length} for a, b, length in graph.edges],
    }


def graph_from_dict(doc: dict) -> NavGraph:
    nodes = [NavNode(int(n["id"]), float(n["x"]), float(n["y"]), float(n.get("z", 0.0)))
             for n in doc["nodes"]]
    edges = [(int(e["a"]), int(e["b"]), float(e["len"])) for e in doc["edges"]]
    return NavGraph(nodes, edges)


def write_graph(graph: NavGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(graph), fh, sort_keys=True)
        fh.write("\n")


def read_graph(path) -> NavGraph:
    with open(path, encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))
