"""Reward terms for navigation, locomotion and regularization, and their composition."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

HL_TERMS = ("goal", "dense", "exploration", "stability")
LL_TERMS = ("lin_vel", "ang_vel", "body_motion", "orientation", "base_height")
REG_TERMS = ("torque", "joint_motion", "action_smooth", "joint_limit", "body_contact", "survival")

N_JOINTS = 12
KNEE_JOINTS = (2, 5, 8, 11)


@dataclass(frozen=True)
class HLRewardConfig:
    goal_radius: float = 0.75
    v_thres: float = 0.5
    buffer_radius: float = 1.0
    stability_gain: float = 2.0


@dataclass(frozen=True)
class LLRewardConfig:
    still_threshold: float = 0.05
    still_scale: float = 2.0
    lin_gain: float = 2.0
    ang_gain: float = 2.0
    vz_coef: float = 1.25
    wx_coef: float = 0.4
    wy_coef: float = 0.4
    nominal_height: float = 0.55
    height_tolerance: float = 0.05


@dataclass(frozen=True)
class RegRewardConfig:
    c_k: float = 0.001
    accel_coef: float = 0.01
    knee_threshold: float = 2.2
    knee_joints: tuple[int, ...] = KNEE_JOINTS
    gait_coef: float = 0.1


# ---------------------------------------------------------------- states

@dataclass
class BodyState:
    velocity: np.ndarray
    body_velocity: np.ndarray
    angular_velocity: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    base_height: float = 0.55

    def __post_init__(self):
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(3)
        self.body_velocity = np.asarray(self.body_velocity, dtype=float).reshape(3)
        self.angular_velocity = np.asarray(self.angular_velocity, dtype=float).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        if not np.allclose(self.rotation.T @ self.rotation, np.eye(3), atol=1e-9, rtol=0.0):
            raise ValueError("rotation must be orthonormal")


@dataclass
class JointState:
    """Joint quantities for a 12-joint legged robot with wheels.

    ``target_history`` rows are the joint targets at t, t-1, t-2.
    """

    q: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    qd: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    qdd: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    tau: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    wheel_velocity: np.ndarray = field(default_factory=lambda: np.zeros(4))
    target_history: np.ndarray = field(default_factory=lambda: np.zeros((3, N_JOINTS)))
    body_contacts: frozenset[int] = frozenset()
    wheel_contacts: frozenset[int] = frozenset()
    foot_contact: tuple[bool, bool, bool, bool] = (False, False, False, False)

    def __post_init__(self):
        for name in ("q", "qd", "qdd", "tau"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(N_JOINTS))
        self.wheel_velocity = np.asarray(self.wheel_velocity, dtype=float).reshape(4)
        self.target_history = np.asarray(self.target_history, dtype=float).reshape(3, N_JOINTS)
        self.body_contacts = frozenset(int(i) for i in self.body_contacts)
        self.wheel_contacts = frozenset(int(i) for i in self.wheel_contacts)


# ---------------------------------------------------------------- terms

def hl_reward_terms(pos, velocity, wp1, buffer_positions=(), buffer_visits=(),
                    cfg: HLRewardConfig = HLRewardConfig()) -> dict[str, float]:
    p = np.asarray(pos, dtype=float)[:2]
    v = np.asarray(velocity, dtype=float)[:2]
    e = np.asarray(wp1, dtype=float)[:2] - p
    dist = math.sqrt(float(e @ e))
    near = dist < cfg.goal_radius

    goal = 1.0 if near else 0.0
    if near:
        dense = 1.0
    else:
        along = float(v @ (e / dist))
        dense = min(max(along, 0.0), cfg.v_thres) / cfg.v_thres

    exploration = 0.0
    if not near:
        for bp, n in zip(buffer_positions, buffer_visits):
            d = np.asarray(bp, dtype=float)[:2] - p
            if math.sqrt(float(d @ d)) < cfg.buffer_radius:
                exploration -= float(n)

    stability = math.exp(-cfg.stability_gain * float(v @ v)) if near else 0.0
    return {"goal": goal, "dense": dense, "exploration": exploration, "stability": stability}


def ll_reward_terms(body: BodyState, cmd, cfg: LLRewardConfig = LLRewardConfig()) -> dict[str, float]:
    cmd = np.asarray(cmd, dtype=float)
    if not np.all(np.isfinite(cmd)):
        raise ValueError("command must be finite")
    v_des = cmd[:2]
    w_des = float(cmd[2])
    v_xy = body.body_velocity[:2]
    if math.sqrt(float(v_des @ v_des)) < cfg.still_threshold:
        lin = cfg.still_scale * math.exp(-cfg.lin_gain * float(v_xy @ v_xy))
    else:
        d = v_xy - v_des
        lin = math.exp(-cfg.lin_gain * float(d @ d)) + float(v_des @ v_xy)
    wx, wy, wz = (float(w) for w in body.angular_velocity)
    ang = math.exp(-cfg.ang_gain * (wz - w_des) ** 2)
    vz = float(body.body_velocity[2])
    motion = -cfg.vz_coef * vz * vz - cfg.wx_coef * abs(wx) - cfg.wy_coef * abs(wy)
    r33 = min(max(float(body.rotation[2, 2]), -1.0), 1.0)
    orientation = math.acos(r33) ** 2
    height = max(0.0, abs(body.base_height - cfg.nominal_height) - cfg.height_tolerance)
    return {"lin_vel": lin, "ang_vel": ang, "body_motion": motion,
            "orientation": orientation, "base_height": height}


def regularization_terms(joints: JointState, terminated: bool = False,
                         cfg: RegRewardConfig = RegRewardConfig()) -> dict[str, float]:
    torque = -float(np.sum(joints.tau ** 2))
    motion = -cfg.c_k * float(np.sum(joints.qd ** 2 + cfg.accel_coef * joints.qdd ** 2))
    t0, t1, t2 = joints.target_history
    smooth = -cfg.c_k * float(np.sum((t0 - t1) ** 2 + (t0 - 2.0 * t1 + t2) ** 2))
    limit = 0.0
    for i in cfg.knee_joints:
        excess = float(joints.q[i]) - cfg.knee_threshold
        if excess > 0.0:
            limit -= excess * excess
    contact = -float(len(joints.body_contacts - joints.wheel_contacts))
    survival = 0.0 if terminated else 1.0
    return {"torque": torque, "joint_motion": motion, "action_smooth": smooth,
            "joint_limit": limit, "body_contact": contact, "survival": survival}


def gait_tracking_reward(contact, target, coef: float = 0.1) -> float:
    """``coef`` per foot whose contact flag matches the gait target."""
    if len(contact) != len(target):
        raise ValueError("contact and target flags must have equal length")
    return coef * sum(1 for a, b in zip(contact, target) if bool(a) == bool(b))


# ---------------------------------------------------------------- composition

@dataclass(frozen=True)
class RewardWeights:
    """Per-term weights. Orientation and base-height are magnitudes, so they carry negative weights."""

    goal: float = 1.0
    dense: float = 0.5
    exploration: float = 0.01
    stability: float = 0.5
    lin_vel: float = 1.0
    ang_vel: float = 0.5
    body_motion: float = 1.0
    orientation: float = -1.0
    base_height: float = -1.0
    torque: float = 1e-5
    joint_motion: float = 1.0
    action_smooth: float = 1.0
    joint_limit: float = 1.0
    body_contact: float = 0.5
    survival: float = 0.1
    w_l: float = 0.3

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ValueError(f"weight {f.name} must be finite")

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RewardWeights":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown weight names: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in doc.items()})


def load_weights(path) -> RewardWeights:
    with open(path, encoding="utf-8") as fh:
        return RewardWeights.from_dict(json.load(fh))


@dataclass
class RewardBreakdown:
    hl: dict[str, float] = field(default_factory=lambda: dict.fromkeys(HL_TERMS, 0.0))
    ll: dict[str, float] = field(default_factory=lambda: dict.fromkeys(LL_TERMS, 0.0))
    reg: dict[str, float] = field(default_factory=lambda: dict.fromkeys(REG_TERMS, 0.0))
    r_low: float = 0.0
    r_high: float = 0.0

    def to_dict(self) -> dict:
        return {"hl": dict(self.hl), "ll": dict(self.ll), "reg": dict(self.reg),
                "r_low": self.r_low, "r_high": self.r_high}

    @classmethod
    def from_dict(cls, doc: dict) -> "RewardBreakdown":
        return cls(dict(doc["hl"]), dict(doc["ll"]), dict(doc["reg"]),
                   float(doc["r_low"]), float(doc["r_high"]))


def _weighted(terms: dict[str, float], names, weights: RewardWeights) -> float:
    total = 0.0
    for name in names:
        total += getattr(weights, name) * terms[name]
    return total


def compose_reward(breakdown: RewardBreakdown, weights: RewardWeights, level: str) -> float:
    low = _weighted(breakdown.ll, LL_TERMS, weights) + _weighted(breakdown.reg, REG_TERMS, weights)
    if level == "low":
        return low
    if level == "high":
        return _weighted(breakdown.hl, HL_TERMS, weights) + weights.w_l * low
    raise ValueError(f"level must be 'low' or 'high', got {level!r}")


def make_breakdown(hl: dict[str, float], ll: dict[str, float], reg: dict[str, float],
                   weights: RewardWeights = RewardWeights()) -> RewardBreakdown:
    b = RewardBreakdown(dict(hl), dict(ll), dict(reg))
    b.r_low = compose_reward(b, weights, "low")
    b.r_high = compose_reward(b, weights, "high")
    return b
