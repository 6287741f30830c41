"""Episode lifecycle: reset, stepping, dynamic obstacles, position memory and observations."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable

import numpy as np

from . import kernels
from .agent import ActionBounds, ProxyConfig, ProxyState, map_to_bounds, proxy_step
from .navgraph import (
    NavGraph,
    Path,
    WaypointPair,
    anchor_pursuit,
    project_onto_path,
    sample_episode_path,
    waypoints_from_path,
)
from .rewards import (
    BodyState,
    HLRewardConfig,
    JointState,
    RewardBreakdown,
    RewardWeights,
    hl_reward_terms,
    ll_reward_terms,
    make_breakdown,
    regularization_terms,
)
from .terrain import HeightField

GOAL_REACHED = "GoalReached"
TIMEOUT = "Timeout"
COLLISION = "Collision"


class EpisodeError(Exception):
    pass


class SteppingDoneEpisode(EpisodeError):
    pass


class InvariantViolation(EpisodeError):
    pass


@dataclass(frozen=True)
class ScanSpec:
    x_range: tuple[float, float] = (-1.5, 3.0)
    y_range: tuple[float, float] = (-1.5, 1.5)
    pitch: float = 0.15

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        nx = int(round((self.x_range[1] - self.x_range[0]) / self.pitch)) + 1
        ny = int(round((self.y_range[1] - self.y_range[0]) / self.pitch)) + 1
        return (np.linspace(self.x_range[0], self.x_range[1], nx),
                np.linspace(self.y_range[0], self.y_range[1], ny))

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        xs, ys = self.axes()
        return np.meshgrid(xs, ys, indexing="ij")


@dataclass(frozen=True)
class EpisodeConfig:
    hl_dt: float = 0.1
    ll_dt: float = 0.02
    max_episode_s: float = 15.0
    goal_radius: float = 0.75
    gamma_hl: float = 0.991
    gamma_ll: float = 0.99
    path_len: tuple[float, float] = (5.0, 20.0)
    lookahead_range: tuple[float, float] = (5.0, 20.0)
    waypoint_mode: str = "lookahead"
    anchor_switch_radius: float = 3.0
    anchor_lookahead: float = 3.0
    anchor_pass_radius: float = 1.0
    n_obstacles: tuple[int, int] = (0, 3)
    obstacle_speed: tuple[float, float] = (0.1, 0.5)
    obstacle_extent: tuple[float, float] = (0.3, 1.0)
    obstacle_height: float = 1.0
    obstacle_standoff: float = 0.3
    obstacle_clear_start: float = 3.0
    human_buffer_radius: float = 0.5
    robot_radius: float = 0.35
    rim_points: int = 8
    buffer_capacity: int = 20
    buffer_spacing: float = 0.5
    history: int = 3
    scan: ScanSpec = ScanSpec()
    proxy: ProxyConfig = ProxyConfig()
    hl_reward: HLRewardConfig = HLRewardConfig()
    weights: RewardWeights = RewardWeights()
    bounds: ActionBounds = ActionBounds()
    check_invariants: bool = False

    def __post_init__(self):
        if not (self.hl_dt > 0 and self.ll_dt > 0):
            raise ValueError("time steps must be > 0")
        k = self.hl_dt / self.ll_dt
        if abs(k - round(k)) > 1e-9:
            raise ValueError("hl_dt must be a multiple of ll_dt")
        if not (self.goal_radius > 0 and self.robot_radius > 0 and self.human_buffer_radius >= 0):
            raise ValueError("radii must be > 0")
        if self.waypoint_mode not in ("lookahead", "anchor"):
            raise ValueError("waypoint_mode must be 'lookahead' or 'anchor'")
        lo, hi = self.obstacle_speed
        if not 0 < lo <= hi:
            raise ValueError("obstacle speed range must be positive")

    @property
    def substeps(self) -> int:
        return int(round(self.hl_dt / self.ll_dt))

    @property
    def max_hl_steps(self) -> int:
        return int(round(self.max_episode_s / self.hl_dt))

    @classmethod
    def train(cls, **kw) -> "EpisodeConfig":
        return cls(**kw)

    @classmethod
    def evaluation(cls, **kw) -> "EpisodeConfig":
        base = dict(max_episode_s=60.0, goal_radius=0.5, waypoint_mode="anchor")
        base.update(kw)
        return cls(**base)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "EpisodeConfig":
        nested = {"scan": ScanSpec, "proxy": ProxyConfig, "hl_reward": HLRewardConfig,
                  "weights": RewardWeights, "bounds": ActionBounds}
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown episode keys: {sorted(unknown)}")
        kw = {}
        for k, v in doc.items():
            if k in nested:
                kw[k] = nested[k](**{kk: tuple(vv) if isinstance(vv, list) else vv for kk, vv in v.items()})
            elif isinstance(v, list):
                kw[k] = tuple(v)
            else:
                kw[k] = v
        return cls(**kw)


# ---------------------------------------------------------------- obstacles

@dataclass(frozen=True)
class DynamicObstacle:
    """Axis-aligned box that walks toward the robot."""

    x: float
    y: float
    size: tuple[float, float]
    speed: float
    height: float = 1.0

    def __post_init__(self):
        if not (self.size[0] > 0 and self.size[1] > 0):
            raise ValueError("obstacle extents must be > 0")
        if not self.speed >= 0:
            raise ValueError("obstacle speed must be >= 0")

    def distance(self, px: float, py: float) -> float:
        """Distance from a point to the box footprint (0 inside)."""
        dx = max(abs(px - self.x) - 0.5 * self.size[0], 0.0)
        dy = max(abs(py - self.y) - 0.5 * self.size[1], 0.0)
        return math.sqrt(dx * dx + dy * dy)


def advance_obstacles(obstacles, robot_pos, dt: float, standoff: float = 0.3,
                      robot_radius: float = 0.35) -> list[DynamicObstacle]:
    """Move every obstacle ``speed * dt`` toward the robot, stopping at ``standoff`` clearance."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    px, py = float(robot_pos[0]), float(robot_pos[1])
    out = []
    for ob in obstacles:
        dx, dy = px - ob.x, py - ob.y
        dist = math.sqrt(dx * dx + dy * dy)
        if dist == 0.0 or ob.distance(px, py) - robot_radius <= standoff:
            out.append(ob)
            continue
        ux, uy = dx / dist, dy / dist
        step = ob.speed * dt
        moved = replace(ob, x=ob.x + ux * step, y=ob.y + uy * step)
        if moved.distance(px, py) - robot_radius < standoff:
            lo, hi = 0.0, step
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                cand = replace(ob, x=ob.x + ux * mid, y=ob.y + uy * mid)
                if cand.distance(px, py) - robot_radius >= standoff:
                    lo = mid
                else:
                    hi = mid
            moved = replace(ob, x=ob.x + ux * lo, y=ob.y + uy * lo)
        out.append(moved)
    return out


def obstacle_offsets(xs, ys, obstacles, radius: float = 0.5) -> np.ndarray:
    """Height added at each point: the tallest obstacle whose inflated footprint covers it."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    off = np.zeros(np.broadcast(xs, ys).shape)
    for ob in obstacles:
        dx = np.maximum(np.abs(xs - ob.x) - 0.5 * ob.size[0], 0.0)
        dy = np.maximum(np.abs(ys - ob.y) - 0.5 * ob.size[1], 0.0)
        inside = dx * dx + dy * dy <= radius * radius
        off = np.where(inside, np.maximum(off, ob.height), off)
    return off


def rasterize_obstacles(field: HeightField, obstacles, radius: float = 0.5) -> HeightField:
    ny, nx = field.shape
    xs = field.origin[0] + np.arange(nx) * field.resolution
    ys = field.origin[1] + np.arange(ny) * field.resolution
    gx, gy = np.meshgrid(xs, ys)
    data = field.data.astype(np.float64) + obstacle_offsets(gx, gy, obstacles, radius)
    return HeightField(field.resolution, field.origin, data, field.friction.copy(), field.seed)


def spawn_obstacles(graph: NavGraph, start, rng: np.random.Generator,
                    cfg: EpisodeConfig) -> list[DynamicObstacle]:
    lo, hi = cfg.n_obstacles
    n = int(rng.integers(lo, hi + 1)) if hi > 0 else 0
    pos = graph.positions()
    far = np.nonzero(np.linalg.norm(pos - np.asarray(start)[None, :2], axis=1) >= cfg.obstacle_clear_start)[0]
    out = []
    if len(far) == 0:
        return out
    for _ in range(n):
        node = int(far[int(rng.integers(0, len(far)))])
        jitter = rng.uniform(-0.5, 0.5, size=2)
        size = rng.uniform(*cfg.obstacle_extent, size=2)
        speed = float(rng.uniform(*cfg.obstacle_speed))
        out.append(DynamicObstacle(float(pos[node, 0] + jitter[0]), float(pos[node, 1] + jitter[1]),
                                   (float(size[0]), float(size[1])), speed, cfg.obstacle_height))
    return out


# ---------------------------------------------------------------- position buffer

@dataclass
class PositionBuffer:
    capacity: int = 20
    spacing: float = 0.5
    positions: list[tuple[float, float]] = field(default_factory=list)
    visits: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.positions)

    def seed(self, pos) -> None:
        self.positions = [(float(pos[0]), float(pos[1]))]
        self.visits = [0]


def update_position_buffer(buffer: PositionBuffer, robot_pos) -> None:
    """Record a new entry once the robot is ``spacing`` from the last one, else count a visit."""
    px, py = float(robot_pos[0]), float(robot_pos[1])
    if not buffer.positions:
        buffer.positions.append((px, py))
        buffer.visits.append(0)
        return
    lx, ly = buffer.positions[-1]
    if math.sqrt((px - lx) ** 2 + (py - ly) ** 2) >= buffer.spacing:
        buffer.positions.append((px, py))
        buffer.visits.append(0)
        if len(buffer.positions) > buffer.capacity:
            del buffer.positions[0]
            del buffer.visits[0]
        return
    best, best_d = -1, math.inf
    for i, (bx, by) in enumerate(buffer.positions):
        d = math.sqrt((px - bx) ** 2 + (py - by) ** 2)
        if d < buffer.spacing and d < best_d:
            best, best_d = i, d
    if best >= 0:
        buffer.visits[best] += 1


# ---------------------------------------------------------------- low-level command sampling

LLC_COMMAND_RANGES = ((-2.5, 2.5), (-1.2, 1.2), (-1.5, 1.5))


def sample_llc_command(rng: np.random.Generator, current, prob: float = 0.005,
                       ranges=LLC_COMMAND_RANGES) -> np.ndarray:
    """Keep ``current`` or, with probability ``prob``, draw a fresh uniform command."""
    if rng.random() < prob:
        return np.array([rng.uniform(lo, hi) for lo, hi in ranges])
    return np.asarray(current, dtype=float).copy()


# ---------------------------------------------------------------- state and observation

@dataclass
class World:
    field: HeightField
    graph: NavGraph
    tile_size: float = 2.0
    seed: int = 0


@dataclass
class HLObservation:
    height_scan: np.ndarray
    scan_x: np.ndarray
    scan_y: np.ndarray
    llc_state: np.ndarray
    position_history: np.ndarray
    waypoints: np.ndarray
    action_history: np.ndarray
    out_of_field: bool = False

    def flat(self) -> np.ndarray:
        return np.concatenate([self.height_scan.ravel(), self.llc_state, self.position_history.ravel(),
                               self.waypoints.ravel(), self.action_history.ravel()])


@dataclass
class EpisodeState:
    proxy: ProxyState
    path: Path
    lookahead: float
    waypoints: WaypointPair
    buffer: PositionBuffer
    obstacles: list[DynamicObstacle]
    rng: np.random.Generator
    hl_dt: float = 0.1
    hl_steps: int = 0
    progress: float = 0.0
    anchor_index: int = 1
    travelled: float = 0.0
    min_goal_dist: float = math.inf
    done: bool = False
    reason: str | None = None
    waypoint_history: list[WaypointPair] = field(default_factory=list)
    scan_history: list[np.ndarray] = field(default_factory=list)
    action_history: list[np.ndarray] = field(default_factory=list)

    @property
    def elapsed(self) -> float:
        return self.hl_steps * self.hl_dt

    @property
    def goal(self) -> np.ndarray:
        return self.path.points[-1]


def _to_robot(vec_xy: np.ndarray, origin, yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    d = np.asarray(vec_xy, dtype=float).reshape(-1, 2) - np.asarray(origin, dtype=float)[None, :2]
    return np.stack([c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1]], axis=1)


def scan_heights(field: HeightField, proxy: ProxyState, obstacles, cfg: EpisodeConfig) -> tuple[np.ndarray, bool]:
    """Robot-frame height scan relative to the base, with obstacles inflated into it."""
    gx, gy = cfg.scan.grid()
    c, s = math.cos(proxy.yaw), math.sin(proxy.yaw)
    wx = proxy.x + c * gx - s * gy
    wy = proxy.y + s * gx + c * gy
    h, out = kernels.bilinear_sample(field.data, field.resolution, field.origin[0], field.origin[1], wx, wy)
    if obstacles:
        h = h + obstacle_offsets(wx, wy, obstacles, cfg.human_buffer_radius)
    return h - (proxy.z + cfg.proxy.base_height), bool(out)


def _compute_waypoints(state: EpisodeState, cfg: EpisodeConfig) -> WaypointPair:
    pos = state.proxy.pos
    if cfg.waypoint_mode == "anchor":
        wp1, state.anchor_index = anchor_pursuit(state.path, pos, state.anchor_index,
                                                 cfg.anchor_switch_radius, cfg.anchor_lookahead,
                                                 cfg.anchor_pass_radius)
        s1, _ = project_onto_path(state.path, wp1)
        s2 = min(s1 + cfg.anchor_lookahead, state.path.length)
        return WaypointPair(wp1, state.path.point_at(s2), cfg.anchor_lookahead, s1, s2)
    s, _ = project_onto_path(state.path, pos)
    state.progress = max(state.progress, s)
    return waypoints_from_path(state.path, pos, state.lookahead, state.progress)


def build_hl_observation(state: EpisodeState, field: HeightField, cfg: EpisodeConfig) -> HLObservation:
    p = state.proxy
    scan, out = scan_heights(field, p, state.obstacles, cfg)
    hist = [scan] + state.scan_history[::-1]
    while len(hist) < cfg.history:
        hist.append(hist[-1])
    gx, gy = cfg.scan.grid()

    pos_hist = np.zeros((cfg.buffer_capacity, 3))
    if state.buffer.positions:
        rel = _to_robot(np.array(state.buffer.positions), p.pos, p.yaw)
        n = len(rel)
        pos_hist[:n, :2] = rel
        pos_hist[:n, 2] = state.buffer.visits

    pairs = [state.waypoints] + state.waypoint_history[::-1]
    while len(pairs) < cfg.history:
        pairs.append(pairs[-1])
    wps = np.stack([_to_robot(np.stack([w.wp1, w.wp2]), p.pos, p.yaw) for w in pairs[:cfg.history]])

    actions = np.zeros((cfg.history, 3))
    for i, a in enumerate(state.action_history[::-1][:cfg.history]):
        actions[i] = a
    return HLObservation(np.stack(hist[:cfg.history]), gx, gy, p.internal_vector(), pos_hist, wps, actions, out)


# ---------------------------------------------------------------- reset / step

def reset(world: World, cfg: EpisodeConfig, rng: np.random.Generator) -> EpisodeState:
    path = sample_episode_path(world.graph, rng, *cfg.path_len)
    start = path.points[0]
    yaw = float(rng.uniform(-math.pi, math.pi))
    lookahead = float(rng.uniform(*cfg.lookahead_range))
    proxy = ProxyState(float(start[0]), float(start[1]), world.field.height_at(*start), yaw)
    obstacles = spawn_obstacles(world.graph, start, rng, cfg)
    buffer = PositionBuffer(cfg.buffer_capacity, cfg.buffer_spacing)
    buffer.seed(start)
    dummy = WaypointPair(start.copy(), start.copy(), lookahead)
    state = EpisodeState(proxy, path, lookahead, dummy, buffer, obstacles, rng, hl_dt=cfg.hl_dt)
    state.waypoints = _compute_waypoints(state, cfg)
    state.min_goal_dist = float(np.linalg.norm(proxy.pos - state.goal))
    return state


def rim_targets(x: float, y: float, cfg: EpisodeConfig) -> np.ndarray:
    ang = 2.0 * math.pi * np.arange(cfg.rim_points) / cfg.rim_points
    frac = np.array([0.25, 0.5, 0.75, 1.0])
    r = cfg.robot_radius * frac[None, :]
    return np.stack([x + r * np.cos(ang)[:, None], y + r * np.sin(ang)[:, None]], axis=-1).reshape(-1, 2)


def in_collision(field: HeightField, proxy: ProxyState, obstacles, cfg: EpisodeConfig) -> bool:
    """Robot disc overlaps untraversable terrain, the field edge or an obstacle footprint."""
    for ob in obstacles:
        if ob.distance(proxy.x, proxy.y) < cfg.robot_radius:
            return True
    pts = rim_targets(proxy.x, proxy.y, cfg)
    h_up, h_down = cfg.proxy.step_limits(0.0)
    codes = kernels.traversal_codes(field.data, field.friction, field.resolution, field.origin[0],
                                    field.origin[1], proxy.x, proxy.y, pts[:, 0], pts[:, 1],
                                    h_up, h_down, math.tan(cfg.proxy.slope_max), cfg.proxy.slope_window)
    return bool(np.any(codes != kernels.TRAVERSABLE))


def _body_state(p: ProxyState, cfg: EpisodeConfig) -> BodyState:
    c, s = math.cos(p.yaw), math.sin(p.yaw)
    wv = p.world_velocity
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return BodyState([wv[0], wv[1], 0.0], [p.vx, p.vy, 0.0], [0.0, 0.0, p.wz], rot, cfg.proxy.base_height)


def step(state: EpisodeState, world: World, action, cfg: EpisodeConfig) -> tuple[EpisodeState, RewardBreakdown, bool, str | None]:
    """Advance one high-level step; ``state`` is updated in place and returned."""
    if state.done:
        raise SteppingDoneEpisode("episode already finished")
    cmd = np.asarray(action, dtype=float).reshape(3)
    if not cfg.bounds.contains(cmd):
        raise ValueError(f"action {cmd.tolist()} outside bounds")
    target = state.waypoints

    state.scan_history.append(scan_heights(world.field, state.proxy, state.obstacles, cfg)[0])
    del state.scan_history[:-(cfg.history - 1)]
    state.waypoint_history.append(target)
    del state.waypoint_history[:-(cfg.history - 1)]

    collided = False
    for _ in range(cfg.substeps):
        prev = state.proxy
        state.proxy = proxy_step(prev, cmd, world.field, cfg.ll_dt, cfg.proxy)
        state.travelled += math.sqrt((state.proxy.x - prev.x) ** 2 + (state.proxy.y - prev.y) ** 2)
        state.obstacles = advance_obstacles(state.obstacles, state.proxy.pos, cfg.ll_dt,
                                            cfg.obstacle_standoff, cfg.robot_radius)
        goal_dist = float(np.linalg.norm(state.proxy.pos - state.goal))
        state.min_goal_dist = min(state.min_goal_dist, goal_dist)
        if in_collision(world.field, state.proxy, state.obstacles, cfg):
            collided = True
            break
    state.hl_steps += 1
    state.action_history.append(cmd)
    del state.action_history[:-cfg.history]

    update_position_buffer(state.buffer, state.proxy.pos)
    state.waypoints = _compute_waypoints(state, cfg)

    goal_dist = float(np.linalg.norm(state.proxy.pos - state.goal))
    if goal_dist < cfg.goal_radius:
        state.done, state.reason = True, GOAL_REACHED
    elif collided:
        state.done, state.reason = True, COLLISION
    elif state.hl_steps >= cfg.max_hl_steps:
        state.done, state.reason = True, TIMEOUT

    p = state.proxy
    hl = hl_reward_terms(p.pos, p.world_velocity, target.wp1, state.buffer.positions,
                         state.buffer.visits, cfg.hl_reward)
    ll = ll_reward_terms(_body_state(p, cfg), cmd)
    reg = regularization_terms(JointState(), terminated=state.reason == COLLISION)
    breakdown = make_breakdown(hl, ll, reg, cfg.weights)
    if cfg.check_invariants:
        check_invariants(state, cfg, target.s1)
    return state, breakdown, state.done, state.reason


def check_invariants(state: EpisodeState, cfg: EpisodeConfig, prev_s1: float | None = None) -> None:
    pos = state.buffer.positions
    for a, b in zip(pos, pos[1:]):
        if math.dist(a, b) < cfg.buffer_spacing - 1e-9:
            raise InvariantViolation(f"buffer entries {a} and {b} closer than spacing")
    if len(pos) > cfg.buffer_capacity:
        raise InvariantViolation("buffer over capacity")
    lo, hi = cfg.obstacle_speed
    for ob in state.obstacles:
        if not lo <= ob.speed <= hi:
            raise InvariantViolation(f"obstacle speed {ob.speed} outside [{lo}, {hi}]")
    if cfg.waypoint_mode == "lookahead" and prev_s1 is not None and state.waypoints.s1 < prev_s1 - 1e-9:
        raise InvariantViolation(f"waypoint moved back along the path ({prev_s1} -> {state.waypoints.s1})")
    if abs(state.elapsed - state.hl_steps * cfg.hl_dt) > 1e-12:
        raise InvariantViolation("clock drift")
    if not all(math.isfinite(v) for v in (state.proxy.x, state.proxy.y, state.proxy.z)):
        raise InvariantViolation("non-finite pose")


# ---------------------------------------------------------------- rollouts and replay logs

@dataclass
class EpisodeLog:
    header: dict
    records: list[dict]

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True)]
        lines.extend(json.dumps(r, sort_keys=True) for r in self.records)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "EpisodeLog":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows or rows[0].get("type") != "header":
            raise ValueError("replay log must start with a header record")
        return cls(rows[0], rows[1:])


def _f(v) -> list[float]:
    return [float(x) for x in np.asarray(v).ravel()]


def run_episode(world: World, cfg: EpisodeConfig, rng: np.random.Generator,
                policy: Callable[[HLObservation], np.ndarray], index: int = 0) -> EpisodeLog:
    """Roll out one episode with ``policy`` mapping observations to unit-cube actions."""
    state = reset(world, cfg, rng)
    header = {
        "type": "header",
        "episode": index,
        "world_seed": int(world.seed),
        "start": _f(state.path.points[0]),
        "goal": _f(state.goal),
        "path": [int(n) for n in state.path.nodes],
        "shortest_len": state.path.length,
        "hl_dt": cfg.hl_dt,
        "goal_radius": cfg.goal_radius,
        "max_episode_s": cfg.max_episode_s,
    }
    records = []
    while not state.done:
        obs = build_hl_observation(state, world.field, cfg)
        u = np.clip(np.asarray(policy(obs), dtype=float), 0.0, 1.0)
        cmd = map_to_bounds(u, cfg.bounds)
        state, breakdown, done, reason = step(state, world, cmd, cfg)
        p = state.proxy
        records.append({
            "t": state.elapsed,
            "pose": [p.x, p.y, p.z, p.yaw],
            "vel": [p.vx, p.vy, p.wz],
            "action": _f(cmd),
            "wp1": _f(state.waypoints.wp1),
            "wp2": _f(state.waypoints.wp2),
            "reward": breakdown.to_dict(),
            "done": done,
            "reason": reason,
        })
    header["travelled"] = state.travelled
    header["min_goal_dist"] = state.min_goal_dist
    header["reason"] = state.reason
    return EpisodeLog(header, records)
