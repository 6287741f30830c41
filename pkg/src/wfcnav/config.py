"""Run configuration: one JSON document, schema-checked, with typed accessors."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass

import jsonschema

from .agent import ActuatorModel
from .curriculum import DEFAULT_T_HIGH, DEFAULT_T_LOW
from .episode import EpisodeConfig
from .terrain import DEFAULT_PARAM_SPACE, PARAM_NAMES, TerrainParams

SCHEMA_VERSION = 1
ENV_OUT = "WFCNAV_OUT"
ENV_THREADS = "WFCNAV_THREADS"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorldSpec:
    kind: str = "wfc"
    example: str = "levels"
    catalog: str | None = None
    pattern_size: int = 2
    periodic: bool = False
    width: int = 16
    height: int = 16
    corridor_length: int = 12
    tile_size: float = 2.0
    resolution: float = 0.1


@dataclass(frozen=True)
class RolloutSpec:
    episodes: int = 100
    threads: int = 1
    mode: str = "eval"
    policy: str = "scripted"


@dataclass(frozen=True)
class CurriculumSpec:
    generations: int = 20
    population: int = 20
    trials: int = 10
    t_low: float = DEFAULT_T_LOW
    t_high: float = DEFAULT_T_HIGH
    elite_frac: float = 0.2
    mutation_scale: float = 0.1
    reseed_budget: int = 3


@dataclass(frozen=True)
class EvalSpec:
    success_radius: float = 0.5
    budget_s: float = 60.0
    cot_speed_floor: float = 0.2
    tracking_cmd_floor: float = 0.5
    lowpass: bool = True


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    world: WorldSpec = WorldSpec()
    terrain: TerrainParams = TerrainParams()
    terrain_space: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_PARAM_SPACE.items()})
    episode: dict = field(default_factory=dict)
    rollout: RolloutSpec = RolloutSpec()
    curriculum: CurriculumSpec = CurriculumSpec()
    actuator: ActuatorModel = ActuatorModel()
    eval: EvalSpec = EvalSpec()

    def episode_config(self) -> EpisodeConfig:
        base = EpisodeConfig.evaluation if self.rollout.mode == "eval" else EpisodeConfig.train
        try:
            defaults = base().to_dict()
            merged = _merge(defaults, self.episode)
            return EpisodeConfig.from_dict(merged)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"episode: {exc}") from None

    def space(self) -> dict[str, tuple[float, float]]:
        return {k: (float(v[0]), float(v[1])) for k, v in self.terrain_space.items()}

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["schema_version"] = SCHEMA_VERSION
        return doc

    def sha256(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _json_type(value) -> dict:
    if isinstance(value, bool):
        return {"type": "boolean"}
    if isinstance(value, int):
        return {"type": "integer"}
    if isinstance(value, float):
        return {"type": "number"}
    if isinstance(value, str):
        return {"type": "string"}
    if isinstance(value, (tuple, list)):
        return {"type": "array", "items": {"type": "number"}}
    if value is None:
        return {"type": ["string", "null"]}
    if is_dataclass(value):
        return _object_schema(value)
    return {}


def _object_schema(instance) -> dict:
    props = {f.name: _json_type(getattr(instance, f.name)) for f in fields(instance)}
    return {"type": "object", "properties": props, "additionalProperties": False}


def build_schema() -> dict:
    ep = _object_schema(EpisodeConfig())
    for name in ("n_obstacles",):
        ep["properties"][name] = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}
    world = _object_schema(WorldSpec())
    world["properties"]["kind"] = {"enum": ["wfc", "corridor"]}
    rollout = _object_schema(RolloutSpec())
    rollout["properties"]["mode"] = {"enum": ["eval", "train"]}
    rollout["properties"]["policy"] = {"enum": ["scripted"]}
    rollout["properties"]["episodes"] = {"type": "integer", "minimum": 0}
    rollout["properties"]["threads"] = {"type": "integer", "minimum": 1}
    space = {
        "type": "object",
        "properties": {n: {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
                       for n in PARAM_NAMES},
        "additionalProperties": False,
    }
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "properties": {
            "schema_version": {"const": SCHEMA_VERSION},
            "seed": {"type": "integer", "minimum": 0},
            "world": world,
            "terrain": _object_schema(TerrainParams()),
            "terrain_space": space,
            "episode": ep,
            "rollout": rollout,
            "curriculum": _object_schema(CurriculumSpec()),
            "actuator": _object_schema(ActuatorModel()),
            "eval": _object_schema(EvalSpec()),
        },
        "required": ["schema_version"],
        "additionalProperties": False,
    }


SCHEMA = build_schema()


def _build(cls, doc: dict | None):
    if doc is None:
        return cls()
    kw = {}
    for f in fields(cls):
        if f.name in doc:
            v = doc[f.name]
            kw[f.name] = tuple(v) if isinstance(v, list) else v
    return cls(**kw)


def config_from_dict(doc: dict) -> RunConfig:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    try:
        cfg = RunConfig(
            seed=int(doc.get("seed", 0)),
            world=_build(WorldSpec, doc.get("world")),
            terrain=_build(TerrainParams, doc.get("terrain")),
            terrain_space=doc.get("terrain_space", RunConfig().terrain_space),
            episode=doc.get("episode", {}),
            rollout=_build(RolloutSpec, doc.get("rollout")),
            curriculum=_build(CurriculumSpec, doc.get("curriculum")),
            actuator=_build(ActuatorModel, doc.get("actuator")),
            eval=_build(EvalSpec, doc.get("eval")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    for name, (lo, hi) in cfg.space().items():
        if lo > hi:
            raise ConfigError(f"terrain_space/{name}: lower bound above upper bound")
    if not 0.0 <= cfg.curriculum.t_low < cfg.curriculum.t_high <= 1.0:
        raise ConfigError("curriculum: need 0 <= t_low < t_high <= 1")
    cfg.episode_config()
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(doc)


def default_config_dict() -> dict:
    return RunConfig().to_dict()


def env_out(default=None):
    return os.environ.get(ENV_OUT, default)


def env_threads(default: int) -> int:
    raw = os.environ.get(ENV_THREADS)
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{ENV_THREADS} must be >= 1")
    return n

