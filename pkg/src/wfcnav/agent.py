"""Kinematic proxy robot, actuator model, bounded beta actions and a scripted policy."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .terrain import HeightField, OutOfField


class DomainError(ValueError):
    pass


# ---------------------------------------------------------------- bounds

@dataclass(frozen=True)
class ActionBounds:
    vx: tuple[float, float] = (-1.0, 2.0)
    vy: tuple[float, float] = (-0.75, 0.75)
    wz: tuple[float, float] = (-1.25, 1.25)

    def __post_init__(self):
        for name in ("vx", "vy", "wz"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name}: lower bound must be below upper bound")

    @property
    def lo(self) -> np.ndarray:
        return np.array([self.vx[0], self.vy[0], self.wz[0]])

    @property
    def hi(self) -> np.ndarray:
        return np.array([self.vx[1], self.vy[1], self.wz[1]])

    def contains(self, cmd, tol: float = 1e-9) -> bool:
        cmd = np.asarray(cmd, dtype=float)
        return bool(np.all(cmd >= self.lo - tol) and np.all(cmd <= self.hi + tol))


def map_to_bounds(u, bounds: ActionBounds = ActionBounds()) -> np.ndarray:
    """Affine map from the unit cube to a velocity command."""
    u = np.asarray(u, dtype=float)
    return bounds.lo + u * (bounds.hi - bounds.lo)


def unit_from_command(cmd, bounds: ActionBounds = ActionBounds()) -> np.ndarray:
    cmd = np.asarray(cmd, dtype=float)
    return (cmd - bounds.lo) / (bounds.hi - bounds.lo)


# ---------------------------------------------------------------- beta actions

LOG_PROB_EPS = 1e-6


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        for v in (self.alpha, self.beta):
            if not (math.isfinite(v) and v > 0.0):
                raise DomainError("beta parameters must be finite and > 0")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self) -> float:
        s = self.alpha + self.beta
        return self.alpha * self.beta / (s * s * (s + 1.0))


def beta_from_policy_outputs(a1: float, a2: float) -> BetaParams:
    """Mean/concentration outputs to shape parameters: alpha = a1*a2, beta = a2 - a1*a2."""
    if not (0.0 < a1 < 1.0) or not (a2 > 0.0 and math.isfinite(a2)):
        raise DomainError("need a1 in (0, 1) and a2 > 0")
    alpha = a1 * a2
    return BetaParams(alpha, a2 - alpha)


def log_beta_function(alpha: float, beta: float) -> float:
    return math.lgamma(alpha) + math.lgamma(beta) - math.lgamma(alpha + beta)


def beta_log_prob(x: float, params: BetaParams) -> float:
    if not 0.0 < x < 1.0:
        raise DomainError(f"x={x} outside the open unit interval")
    a, b = params.alpha, params.beta
    return (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - log_beta_function(a, b)


def beta_sample(params: BetaParams, rng: np.random.Generator, size=None):
    return rng.beta(params.alpha, params.beta, size=size)


def action_log_prob(cmd, params: list[BetaParams], bounds: ActionBounds = ActionBounds()) -> float:
    """Joint log-density of a bounded command, clamping u away from the support edges."""
    u = np.clip(unit_from_command(cmd, bounds), LOG_PROB_EPS, 1.0 - LOG_PROB_EPS)
    return float(sum(beta_log_prob(float(ui), p) for ui, p in zip(u, params)))


# ---------------------------------------------------------------- actuators

@dataclass(frozen=True)
class ActuatorModel:
    torque_constant: float = 0.1
    gear_ratio: float = 6.0
    c1: float = 0.002
    c2: float = 0.05

    def __post_init__(self):
        if not (self.torque_constant > 0 and self.gear_ratio > 0):
            raise ValueError("torque constant and gear ratio must be > 0")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("friction constants must be >= 0")


def motor_torque(current, model: ActuatorModel):
    return model.torque_constant * model.gear_ratio * current


def friction_torque(joint_vel, model: ActuatorModel):
    # Named as in the source model: -C1*v "Coulomb", -C2*sgn(v) "stick".
    return -model.c1 * joint_vel - model.c2 * np.sign(joint_vel)


def actuator_torque(current, joint_vel, model: ActuatorModel):
    return motor_torque(current, model) + friction_torque(joint_vel, model)


@dataclass
class LinearLagCurrent:
    """First-order current response standing in for a learned actuator network."""

    gain: float = 2.0
    lag: float = 0.01
    current: float = 0.0

    def step(self, target_vel: float, vel: float, dt: float) -> float:
        target = self.gain * (target_vel - vel)
        alpha = min(dt / self.lag, 1.0) if self.lag > 0 else 1.0
        self.current += (target - self.current) * alpha
        return self.current


# ---------------------------------------------------------------- proxy robot

@dataclass(frozen=True)
class ProxyConfig:
    time_constant: float = 0.3
    h_up: float = 0.20
    h_down: float = 0.35
    shrink: float = 0.5
    shrink_speed: float = 2.0
    slope_max: float = 0.45
    slope_window: float = 0.5
    base_height: float = 0.55

    def step_limits(self, speed: float) -> tuple[float, float]:
        """Max climbable rise and drop at ``speed``; both shrink linearly."""
        f = 1.0 - self.shrink * min(abs(speed), self.shrink_speed) / self.shrink_speed
        return self.h_up * f, self.h_down * f


@dataclass
class ProxyState:
    x: float
    y: float
    z: float
    yaw: float
    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0
    tracking_error: float = 0.0
    slope: float = 0.0

    @property
    def pos(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def world_velocity(self) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([c * self.vx - s * self.vy, s * self.vx + c * self.vy])

    def internal_vector(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.wz, self.tracking_error, self.slope])


def traversal_codes(field: HeightField, start, targets, speed: float, cfg: ProxyConfig = ProxyConfig()):
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    h_up, h_down = cfg.step_limits(speed)
    return kernels.traversal_codes(
        field.data, field.friction, field.resolution, field.origin[0], field.origin[1],
        float(start[0]), float(start[1]), targets[:, 0], targets[:, 1],
        h_up, h_down, math.tan(cfg.slope_max), cfg.slope_window,
    )


def traversal_check(field: HeightField, start, end, speed: float, cfg: ProxyConfig = ProxyConfig()) -> bool:
    """Whether the proxy can move from ``start`` to ``end`` at ``speed``.

    Ascending steps must stay below the rise limit, descending steps below
    the (larger) drop limit; smooth inclines must stay under both the slope
    limit and the friction cone of the target cell.
    """
    code = int(traversal_codes(field, start, [end], speed, cfg)[0])
    if code == kernels.OUT_OF_FIELD:
        raise OutOfField("traversal query leaves the height field")
    return code == kernels.TRAVERSABLE


def init_proxy(field: HeightField, x: float, y: float, yaw: float) -> ProxyState:
    return ProxyState(x, y, field.height_at(x, y), yaw)


def proxy_step(state: ProxyState, cmd, field: HeightField, ll_dt: float,
               cfg: ProxyConfig = ProxyConfig()) -> ProxyState:
    """Advance the proxy one low-level tick.

    Body velocities follow the command with a first-order lag; a move that
    fails the traversal check is reduced to whichever world axis still
    passes, or cancelled, and the stored velocity is the realised one.
    """
    if ll_dt <= 0:
        raise ValueError("ll_dt must be > 0")
    cvx, cvy, cwz = (float(v) for v in cmd)
    a = ll_dt / cfg.time_constant
    if a > 1.0:
        a = 1.0
    vx = state.vx + (cvx - state.vx) * a
    vy = state.vy + (cvy - state.vy) * a
    wz = state.wz + (cwz - state.wz) * a
    yaw = state.yaw + wz * ll_dt
    c, s = math.cos(yaw), math.sin(yaw)
    dx = (c * vx - s * vy) * ll_dt
    dy = (s * vx + c * vy) * ll_dt
    speed = math.sqrt(vx * vx + vy * vy)

    x, y = state.x, state.y
    if dx != 0.0 or dy != 0.0:
        cands = np.array([[x + dx, y + dy], [x + dx, y], [x, y + dy]])
        codes = traversal_codes(field, (x, y), cands, speed, cfg)
        if codes[0] == kernels.TRAVERSABLE:
            mx, my = dx, dy
        else:
            ok_x = codes[1] == kernels.TRAVERSABLE and dx != 0.0
            ok_y = codes[2] == kernels.TRAVERSABLE and dy != 0.0
            if ok_x and (not ok_y or abs(dx) >= abs(dy)):
                mx, my = dx, 0.0
            elif ok_y:
                mx, my = 0.0, dy
            else:
                mx, my = 0.0, 0.0
        wvx, wvy = mx / ll_dt, my / ll_dt
        vx = c * wvx + s * wvy
        vy = -s * wvx + c * wvy
        x, y = x + mx, y + my

    hx, hy = math.cos(yaw), math.sin(yaw)
    w = 0.5 * cfg.slope_window
    hs = field.sample(np.array([x, x + w * hx, x - w * hx]), np.array([y, y + w * hy, y - w * hy]))
    slope = math.atan(abs(hs[1] - hs[2]) / (2.0 * w))
    err = math.sqrt((cvx - vx) ** 2 + (cvy - vy) ** 2)
    return ProxyState(x, y, float(hs[0]), yaw, vx, vy, wz, err, slope)


# ---------------------------------------------------------------- scripted policy

@dataclass(frozen=True)
class ScriptedPolicy:
    """Pure pursuit toward the first waypoint, slowed by heading error and terrain rise."""

    bounds: ActionBounds = ActionBounds()
    yaw_gain: float = 2.0
    approach_gain: float = 1.2
    rise_gain: float = 1.5
    min_rise_factor: float = 0.25
    lookahead_box: tuple[float, float, float] = (0.3, 1.2, 0.45)
    base_height: float = 0.55

    def command(self, obs) -> np.ndarray:
        wx, wy = (float(v) for v in obs.waypoints[0, 0])
        heading = math.atan2(wy, wx)
        dist = math.hypot(wx, wy)
        wz = float(np.clip(self.yaw_gain * heading, *self.bounds.wz))
        align = max(0.0, math.cos(heading)) ** 2

        x0, x1, half_w = self.lookahead_box
        xs, ys = obs.scan_x, obs.scan_y
        sel = (xs >= x0) & (xs <= x1) & (np.abs(ys) <= half_w)
        scan = obs.height_scan[0]
        rise = float(np.max(scan[sel])) + self.base_height if np.any(sel) else 0.0
        factor = min(1.0, max(self.min_rise_factor, 1.0 - self.rise_gain * max(rise, 0.0)))

        vmax = self.bounds.vx[1]
        vx = min(vmax * align * factor, self.approach_gain * dist)
        return np.array([vx, 0.0, wz])

    def __call__(self, obs) -> np.ndarray:
        u = unit_from_command(self.command(obs), self.bounds)
        return np.clip(u, 0.0, 1.0)


def scripted_policy(obs, policy: ScriptedPolicy = ScriptedPolicy()) -> np.ndarray:
    return policy(obs)
