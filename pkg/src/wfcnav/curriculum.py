"""Minimal-criterion genetic filtering of terrain parameters."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .agent import ProxyConfig, init_proxy, proxy_step
from .terrain import (
    DEFAULT_PARAM_SPACE,
    PARAM_NAMES,
    TerrainParams,
    sample_terrain_params,
    synthesize_height_field,
)
from .worldgen import DEFAULT_KINDS, FLOOR0, FLOOR1, STAIR_X, TileCatalog, TileMap

DEFAULT_T_LOW = 0.5
DEFAULT_T_HIGH = 0.9
TRACKING_TOLERANCE = 0.2


class CurriculumError(Exception):
    pass


class EmptyTrajectory(CurriculumError):
    pass


class BadThresholds(CurriculumError):
    pass


class AllZeroFitness(CurriculumError):
    """No record passed the minimal criterion; re-seed from uniform samples."""


@dataclass
class CurriculumRecord:
    params: TerrainParams
    scores: list[float] = field(default_factory=list)
    fitness: float = 0.0

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "scores": list(self.scores), "fitness": self.fitness}

    @classmethod
    def from_dict(cls, doc: dict) -> "CurriculumRecord":
        return cls(TerrainParams.from_dict(doc["params"]), [float(s) for s in doc["scores"]],
                   float(doc["fitness"]))


def traversal_score(velocities, command) -> float:
    """1.0 when the mean velocity tracking error is under 20% of the commanded speed."""
    v = np.asarray(velocities, dtype=float)
    if v.size == 0:
        raise EmptyTrajectory("trajectory has no samples")
    v = v.reshape(len(v), -1)[:, :2]
    cmd = np.asarray(command, dtype=float).ravel()[:2]
    err = float(np.mean(np.linalg.norm(v - cmd[None, :], axis=1)))
    return 1.0 if err < TRACKING_TOLERANCE * float(np.linalg.norm(cmd)) else 0.0


def curriculum_fitness(scores: Sequence[float], t_low: float = DEFAULT_T_LOW,
                       t_high: float = DEFAULT_T_HIGH) -> float:
    if not 0.0 <= t_low < t_high <= 1.0:
        raise BadThresholds(f"need 0 <= t_low < t_high <= 1, got ({t_low}, {t_high})")
    if len(scores) == 0:
        raise EmptyTrajectory("no scores")
    mean = float(np.mean(scores))
    return mean if t_low < mean < t_high else 0.0


def _tournament(pool: list[int], fitness: list[float], size: int, rng) -> int:
    picks = rng.integers(0, len(pool), size=size)
    best = pool[int(picks[0])]
    for p in picks[1:]:
        cand = pool[int(p)]
        if fitness[cand] > fitness[best]:
            best = cand
    return best


def evolve_params(
    population: Sequence[CurriculumRecord],
    rng: np.random.Generator,
    space: dict[str, tuple[float, float]] = DEFAULT_PARAM_SPACE,
    elite_frac: float = 0.2,
    mutation_scale: float = 0.1,
    tournament_size: int = 2,
) -> list[TerrainParams]:
    """Next generation of terrain parameters.

    Only positive-fitness records can be parents. The top ``elite_frac``
    survive unchanged; the rest are tournament-selected parents plus
    Gaussian noise of ``mutation_scale`` times each parameter's range,
    clipped back into ``space``.
    """
    if not population:
        raise ValueError("population is empty")
    fitness = [r.fitness for r in population]
    pool = [i for i, f in enumerate(fitness) if f > 0.0]
    if not pool:
        raise AllZeroFitness("every record failed the minimal criterion")
    n = len(population)
    ranked = sorted(pool, key=lambda i: (-fitness[i], i))
    n_elite = min(len(ranked), int(math.ceil(elite_frac * n))) if elite_frac > 0 else 0
    out = [population[i].params for i in ranked[:n_elite]]
    while len(out) < n:
        parent = population[_tournament(pool, fitness, tournament_size, rng)].params
        values = parent.to_dict()
        noise = rng.standard_normal(len(PARAM_NAMES))
        for k, name in enumerate(PARAM_NAMES):
            if name not in space:
                continue
            lo, hi = space[name]
            sigma = mutation_scale * (hi - lo)
            if sigma > 0.0:
                values[name] = float(min(max(values[name] + sigma * noise[k], lo), hi))
        out.append(TerrainParams(**values))
    return out


# ---------------------------------------------------------------- proxy-based scorer

@dataclass(frozen=True)
class ProxyTrialConfig:
    """Rollout settings for scoring terrain parameters with the proxy robot."""

    trials: int = 10
    duration: float = 4.0
    ll_dt: float = 0.02
    speed_range: tuple[float, float] = (0.5, 2.0)
    resolution: float = 0.1
    tile_size: float = 2.0


def _trial_catalog() -> TileCatalog:
    return TileCatalog(list(DEFAULT_KINDS), {(FLOOR0, STAIR_X, "x"), (FLOOR1, STAIR_X, "x"),
                                             (FLOOR0, FLOOR0, "x"), (FLOOR1, FLOOR1, "x")}, 2,
                       [1] * len(DEFAULT_KINDS))


def proxy_scores(params: TerrainParams, rng: np.random.Generator,
                 trial: ProxyTrialConfig = ProxyTrialConfig(),
                 proxy: ProxyConfig = ProxyConfig()) -> list[float]:
    """Drive the proxy straight across a floor-stair-floor strip and score each run."""
    cells = np.array([[FLOOR0, FLOOR0, STAIR_X, FLOOR1, FLOOR1, FLOOR1]] * 3)
    seed = int(rng.integers(0, 2**63))
    tmap = TileMap(cells.shape[1], cells.shape[0], cells, seed)
    hf = synthesize_height_field(tmap, _trial_catalog(), params, trial.resolution, trial.tile_size)
    n = int(round(trial.duration / trial.ll_dt))
    scores = []
    for _ in range(trial.trials):
        speed = float(rng.uniform(*trial.speed_range))
        y = trial.tile_size * 1.5 + float(rng.uniform(-0.3, 0.3))
        state = init_proxy(hf, trial.tile_size * 1.5, y, 0.0)
        cmd = np.array([speed, 0.0, 0.0])
        vels = np.empty((n, 2))
        for k in range(n):
            state = proxy_step(state, cmd, hf, trial.ll_dt, proxy)
            vels[k] = (state.vx, state.vy)
        scores.append(traversal_score(vels, cmd))
    return scores


def run_filter(
    generations: int,
    population_size: int,
    rng: np.random.Generator,
    scorer: Callable[[TerrainParams, np.random.Generator], list[float]] = proxy_scores,
    space: dict[str, tuple[float, float]] = DEFAULT_PARAM_SPACE,
    t_low: float = DEFAULT_T_LOW,
    t_high: float = DEFAULT_T_HIGH,
    elite_frac: float = 0.2,
    mutation_scale: float = 0.1,
    reseed_budget: int = 3,
    on_generation: Callable[[int, list[CurriculumRecord]], None] | None = None,
) -> list[CurriculumRecord]:
    """Run the genetic filter and return the last evaluated population.

    A generation where nothing passes is replaced by fresh uniform samples;
    ``AllZeroFitness`` propagates once ``reseed_budget`` such re-seeds are spent.
    """
    if generations < 1:
        raise ValueError("generations must be >= 1")
    params = [sample_terrain_params(space, rng) for _ in range(population_size)]
    reseeds = 0
    records: list[CurriculumRecord] = []
    for gen in range(generations):
        records = []
        for p in params:
            scores = scorer(p, rng)
            records.append(CurriculumRecord(p, scores, curriculum_fitness(scores, t_low, t_high)))
        if on_generation is not None:
            on_generation(gen, records)
        if gen == generations - 1:
            break
        try:
            params = evolve_params(records, rng, space, elite_frac, mutation_scale)
        except AllZeroFitness:
            reseeds += 1
            if reseeds > reseed_budget:
                raise
            params = [sample_terrain_params(space, rng) for _ in range(population_size)]
    return records


def write_records(path, generation: int, records: Sequence[CurriculumRecord], mode: str = "a") -> None:
    with open(path, mode, encoding="utf-8") as fh:
        for i, rec in enumerate(records):
            doc = {"generation": generation, "index": i, **rec.to_dict()}
            fh.write(json.dumps(doc, sort_keys=True) + "\n")


def read_records(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                doc = json.loads(line)
                doc["record"] = CurriculumRecord.from_dict(doc)
                out.append(doc)
    return out
