"""Navigation metrics: SPL, success, mechanical cost of transport and velocity tracking."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .agent import ActuatorModel, friction_torque
from .episode import EpisodeLog

SUCCESS_RADIUS = 0.5
SUCCESS_BUDGET = 60.0
COT_SPEED_FLOOR = 0.2
TRACKING_CMD_FLOOR = 0.5
HIST_BIN = 0.05
HIST_RANGE = (0.0, 2.0)
LOWPASS_CUTOFF = 5.0
BUCKETS = ((5.0, 10.0), (10.0, 20.0))
GRAVITY = 9.81


class EvalError(Exception):
    pass


class EmptyResults(EvalError):
    pass


class NonpositiveShortestLen(EvalError):
    pass


class MalformedLog(EvalError):
    pass


class NoQualifyingSamples(EvalError):
    pass


@dataclass(frozen=True)
class EpisodeResult:
    success: bool
    shortest_len: float
    travelled_len: float
    duration: float = 0.0

    def __post_init__(self):
        if self.travelled_len < 0:
            raise ValueError("travelled length must be >= 0")


@dataclass
class EnergyLog:
    """Per-sample joint torques and speeds (samples x joints) with base speed."""

    torque: np.ndarray
    joint_speed: np.ndarray
    weight: float
    base_speed: np.ndarray
    rate: float

    def __post_init__(self):
        self.torque = np.atleast_2d(np.asarray(self.torque, dtype=float))
        self.joint_speed = np.atleast_2d(np.asarray(self.joint_speed, dtype=float))
        self.base_speed = np.asarray(self.base_speed, dtype=float).ravel()
        if not self.rate > 0:
            raise ValueError("sample rate must be > 0")
        if self.torque.shape != self.joint_speed.shape or len(self.torque) != len(self.base_speed):
            raise ValueError("energy log arrays are not congruent")
        if not self.weight > 0:
            raise ValueError("weight must be > 0")


def spl(results: Sequence[EpisodeResult]) -> float:
    """Success weighted by shortest length over max(travelled, shortest)."""
    if len(results) == 0:
        raise EmptyResults("no episodes to score")
    total = 0.0
    for r in results:
        if not r.shortest_len > 0:
            raise NonpositiveShortestLen(f"shortest length {r.shortest_len} must be > 0")
        if r.success:
            total += r.shortest_len / max(r.travelled_len, r.shortest_len)
    return total / len(results)


def success_rate(results: Sequence[EpisodeResult]) -> float:
    if len(results) == 0:
        raise EmptyResults("no episodes to score")
    return sum(1 for r in results if r.success) / len(results)


def success(times, positions, goal, radius: float = SUCCESS_RADIUS, budget: float = SUCCESS_BUDGET) -> bool:
    """Whether the robot came within ``radius`` of ``goal`` at some time up to ``budget``."""
    t = np.asarray(times, dtype=float).ravel()
    p = np.asarray(positions, dtype=float).reshape(len(t), -1)[:, :2]
    if goal is None or len(t) == 0:
        raise MalformedLog("log needs samples and a goal position")
    g = np.asarray(goal, dtype=float)[:2]
    d = np.linalg.norm(p - g[None, :], axis=1)
    return bool(np.any((d < radius) & (t <= budget)))


def lowpass(samples, rate: float, cutoff: float = LOWPASS_CUTOFF) -> np.ndarray:
    """Single-pole IIR low-pass along the first axis."""
    x = np.asarray(samples, dtype=float)
    if len(x) == 0:
        return x.copy()
    dt = 1.0 / rate
    rc = 1.0 / (2.0 * math.pi * cutoff)
    a = dt / (rc + dt)
    y = np.empty_like(x)
    y[0] = x[0]
    for i in range(1, len(x)):
        y[i] = y[i - 1] + a * (x[i] - y[i - 1])
    return y


def mechanical_cot(log: EnergyLog, speed_floor: float = COT_SPEED_FLOOR) -> float:
    """Mean positive actuator power per unit weight and speed over moving samples."""
    sel = log.base_speed > speed_floor
    if not np.any(sel):
        raise NoQualifyingSamples(f"no samples faster than {speed_floor} m/s")
    power = np.sum(np.maximum(log.torque[sel] * log.joint_speed[sel], 0.0), axis=1)
    return float(np.mean(power / (log.weight * log.base_speed[sel])))


def tracking_error_stats(commands, velocities, cmd_floor: float = TRACKING_CMD_FLOOR,
                         bin_width: float = HIST_BIN, hist_range=HIST_RANGE) -> dict:
    """Mean and histogram of planar tracking error where the command exceeds ``cmd_floor``.

    Errors above the range fall in the last bin, so the histogram mass
    equals the qualifying sample count.
    """
    c = np.asarray(commands, dtype=float).reshape(-1, np.shape(commands)[-1])[:, :2]
    v = np.asarray(velocities, dtype=float).reshape(-1, np.shape(velocities)[-1])[:, :2]
    if c.shape != v.shape:
        raise ValueError("commands and velocities are not congruent")
    sel = np.linalg.norm(c, axis=1) > cmd_floor
    if not np.any(sel):
        raise NoQualifyingSamples(f"no commands faster than {cmd_floor} m/s")
    err = np.linalg.norm(c[sel] - v[sel], axis=1)
    lo, hi = hist_range
    n_bins = int(round((hi - lo) / bin_width))
    idx = np.clip(np.floor((err - lo) / bin_width + 1e-9).astype(int), 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return {"mean": float(np.mean(err)), "bins": counts.tolist(), "bin_width": bin_width,
            "range": [lo, hi], "count": int(sel.sum())}


# ---------------------------------------------------------------- energy model for the proxy

@dataclass(frozen=True)
class WheelModel:
    mass: float = 50.0
    wheel_radius: float = 0.1
    rolling: float = 0.01
    n_wheels: int = 4
    actuator: ActuatorModel = ActuatorModel()


def energy_log_from_speeds(speeds, rate: float, model: WheelModel = WheelModel()) -> EnergyLog:
    """Wheel torques and speeds for a robot rolling at ``speeds``.

    Each wheel carries an equal share of inertial and rolling load and
    overcomes its own actuator friction.
    """
    v = np.asarray(speeds, dtype=float).ravel()
    acc = np.gradient(v, 1.0 / rate) if len(v) > 1 else np.zeros_like(v)
    omega = v / model.wheel_radius
    force = model.mass * acc + model.rolling * model.mass * GRAVITY * np.sign(v)
    load = force * model.wheel_radius / model.n_wheels
    tau = load - friction_torque(omega, model.actuator)
    torque = np.repeat(tau[:, None], model.n_wheels, axis=1)
    joint_speed = np.repeat(omega[:, None], model.n_wheels, axis=1)
    return EnergyLog(torque, joint_speed, model.mass * GRAVITY, np.abs(v), rate)


# ---------------------------------------------------------------- replay logs

def result_from_log(log: EpisodeLog, radius: float = SUCCESS_RADIUS, budget: float = SUCCESS_BUDGET) -> EpisodeResult:
    h = log.header
    if "goal" not in h or "shortest_len" not in h:
        raise MalformedLog("header lacks goal or shortest_len")
    times = [0.0] + [r["t"] for r in log.records]
    pos = [h["start"]] + [r["pose"][:2] for r in log.records]
    ok = success(times, pos, h["goal"], radius, budget)
    p = np.asarray(pos, dtype=float)
    travelled = float(h.get("travelled", np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1))))
    return EpisodeResult(ok, float(h["shortest_len"]), travelled, float(times[-1]))


def _log_series(log: EpisodeLog):
    cmds = np.array([r["action"] for r in log.records], dtype=float).reshape(-1, 3)
    vels = np.array([r["vel"] for r in log.records], dtype=float).reshape(-1, 3)
    return cmds, vels


def bucket_of(length: float, buckets=BUCKETS) -> str | None:
    for i, (lo, hi) in enumerate(buckets):
        last = i == len(buckets) - 1
        if lo <= length < hi or (last and length == hi):
            return f"{lo:g}-{hi:g}"
    return None


def fmt_pair(spl_value: float | None, rate: float | None) -> str:
    """Table cell holding SPL with the success rate in parentheses, e.g. ``0.897 (0.901)``."""
    if spl_value is None or rate is None:
        return "-"
    return f"{spl_value:.3f} ({rate:.3f})"


def evaluate_logs(logs: Sequence[EpisodeLog], filter_velocity: bool = True) -> dict:
    """Aggregate metrics over replay logs; the result is plain JSON data."""
    report = {"episodes": len(logs), "spl": None, "success_rate": None, "cot_mean": None,
              "tracking": {"mean": None, "bins": []}, "buckets": {}}
    results = [result_from_log(lg) for lg in logs]
    _fill_buckets(report, results)
    if not logs:
        return report
    report["spl"] = spl(results)
    report["success_rate"] = success_rate(results)

    all_cmd, all_vel, cots = [], [], []
    for lg in logs:
        if not lg.records:
            continue
        cmds, vels = _log_series(lg)
        rate = 1.0 / float(lg.header.get("hl_dt", 0.1))
        if filter_velocity:
            vels = lowpass(vels, rate)
        all_cmd.append(cmds)
        all_vel.append(vels)
        try:
            cots.append(mechanical_cot(energy_log_from_speeds(vels[:, 0], rate)))
        except NoQualifyingSamples:
            pass
    if cots:
        report["cot_mean"] = float(np.mean(cots))
    if all_cmd:
        try:
            report["tracking"] = tracking_error_stats(np.concatenate(all_cmd), np.concatenate(all_vel))
        except NoQualifyingSamples:
            pass
    return report


def _fill_buckets(report: dict, results: Sequence[EpisodeResult]) -> None:
    for lo, hi in BUCKETS:
        key = f"{lo:g}-{hi:g}"
        sel = [r for r in results if bucket_of(r.shortest_len) == key]
        row = {
            "episodes": len(sel),
            "spl": spl(sel) if sel else None,
            "success_rate": success_rate(sel) if sel else None,
        }
        row["cell"] = fmt_pair(row["spl"], row["success_rate"])
        report["buckets"][key] = row


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bucket", "episodes", "spl", "success_rate", "spl (success rate)"])
    for key, row in report["buckets"].items():
        w.writerow([key, row["episodes"],
                    "" if row["spl"] is None else f"{row['spl']:.3f}",
                    "" if row["success_rate"] is None else f"{row['success_rate']:.3f}",
                    row["cell"]])
    return buf.getvalue()


def write_report(report: dict, json_path, csv_path=None) -> None:
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(report_csv(report))
