"""Generate navigation worlds and evaluate rollouts in them.

Exit codes: 0 ok, 2 configuration error, 3 generation contradiction,
4 I/O error, 5 invariant violation during a rollout, 6 curriculum found
no passing terrain after its re-seed budget. Errors are also written to
stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .agent import ScriptedPolicy
from .bundle import BundleError, build_world, read_bundle, write_bundle
from .config import ConfigError, RunConfig, config_from_dict, env_out, env_threads, load_config
from .curriculum import AllZeroFitness, ProxyTrialConfig, proxy_scores, run_filter, write_records
from .episode import EpisodeLog, InvariantViolation, World, run_episode
from .evaluation import evaluate_logs, write_report
from .navgraph import NavGraphError, UnknownNode, Unreachable, shortest_path
from .worldgen import ContradictionAfterRetries

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONTRADICTION = 3
EXIT_IO = 4
EXIT_INVARIANT = 5
EXIT_ALL_ZERO = 6


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.extra = extra


def _config(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        cfg = config_from_dict({"schema_version": 1})
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _out_dir(args, default: str) -> Path:
    out = args.out or env_out() or default
    return Path(out)


def _threads(args, cfg: RunConfig) -> int:
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return args.threads
    return env_threads(cfg.rollout.threads)


def _print(doc) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")


# ---------------------------------------------------------------- subcommands

def cmd_generate(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, "world")
    bundle = build_world(cfg)
    manifest = write_bundle(bundle, out, cfg, cfg.seed)
    _print({"out": str(out), "nodes": len(bundle.graph.nodes), "edges": len(bundle.graph.edges),
            "files": sorted(manifest["files"])})
    return EXIT_OK


def cmd_graph(args) -> int:
    bundle = read_bundle(args.bundle)
    g = bundle.graph
    if args.src is not None or args.dst is not None:
        if args.src is None or args.dst is None:
            raise ConfigError("--from and --to must be given together")
        try:
            path = shortest_path(g, args.src, args.dst)
        except (UnknownNode, Unreachable) as exc:
            raise ConfigError(str(exc)) from None
        _print({"path": path.nodes, "length": path.length})
        return EXIT_OK
    _print({"nodes": len(g.nodes), "edges": len(g.edges)})
    return EXIT_OK


def rollout_logs(world: World, cfg: RunConfig, episodes: int, seed: int, threads: int) -> list[EpisodeLog]:
    """Run ``episodes`` independent episodes; results are ordered by index for any thread count."""
    ep_cfg = cfg.episode_config()
    policy = ScriptedPolicy(bounds=ep_cfg.bounds, base_height=ep_cfg.proxy.base_height)

    def one(i: int) -> EpisodeLog:
        return run_episode(world, ep_cfg, np.random.default_rng([seed, i]), policy, i)

    if threads <= 1:
        return [one(i) for i in range(episodes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(episodes)))


def cmd_rollout(args) -> int:
    cfg = _config(args)
    bundle = read_bundle(args.bundle)
    episodes = cfg.rollout.episodes if args.episodes is None else args.episodes
    if episodes < 0:
        raise ConfigError("--episodes must be >= 0")
    threads = _threads(args, cfg)
    out = _out_dir(args, "rollout")
    replay_dir = out / "replays"
    replay_dir.mkdir(parents=True, exist_ok=True)
    try:
        logs = rollout_logs(bundle.world(), cfg, episodes, cfg.seed, threads)
    except InvariantViolation as exc:
        diag = out / "diagnostic.json"
        diag.write_text(json.dumps({"error": "InvariantViolation", "message": str(exc),
                                    "seed": cfg.seed}, sort_keys=True) + "\n")
        raise CliError(EXIT_INVARIANT, "InvariantViolation", str(exc), diagnostic=str(diag)) from None
    for lg in logs:
        (replay_dir / f"episode_{lg.header['episode']:05d}.jsonl").write_text(lg.to_jsonl())
    report = evaluate_logs(logs, filter_velocity=cfg.eval.lowpass)
    write_report(report, out / "metrics.json", out / "metrics.csv")
    _print({"episodes": episodes, "spl": report["spl"], "success_rate": report["success_rate"]})
    return EXIT_OK


def cmd_filter_terrain(args) -> int:
    cfg = _config(args)
    cur = cfg.curriculum
    generations = cur.generations if args.generations is None else args.generations
    if generations < 1:
        raise ConfigError("--generations must be >= 1")
    out = _out_dir(args, "curriculum")
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "curriculum.jsonl"
    log_path.write_text("")
    trial = ProxyTrialConfig(trials=cur.trials)

    def scorer(params, rng):
        return proxy_scores(params, rng, trial)

    def on_generation(gen, records):
        write_records(log_path, gen, records)

    rng = np.random.default_rng(cfg.seed)
    try:
        records = run_filter(generations, cur.population, rng, scorer, cfg.space(), cur.t_low, cur.t_high,
                             cur.elite_frac, cur.mutation_scale, cur.reseed_budget, on_generation)
    except AllZeroFitness as exc:
        raise CliError(EXIT_ALL_ZERO, "AllZeroFitness", str(exc)) from None
    fit = [r.fitness for r in records]
    summary = {
        "generations": generations,
        "population": len(records),
        "passing": sum(1 for f in fit if f > 0),
        "mean_fitness": float(np.mean(fit)) if fit else 0.0,
        "final": [r.to_dict() for r in records],
    }
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    _print({k: summary[k] for k in ("generations", "population", "passing", "mean_fitness")})
    return EXIT_OK


def _collect_logs(paths) -> list[EpisodeLog]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.jsonl")))
        else:
            files.append(p)
    logs = []
    for f in files:
        try:
            logs.append(EpisodeLog.from_jsonl(f.read_text()))
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{f}: malformed replay log ({exc})") from None
    return logs


def cmd_eval(args) -> int:
    cfg = _config(args)
    logs = _collect_logs(args.logs)
    report = evaluate_logs(logs, filter_velocity=cfg.eval.lowpass)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_report(report, out / "metrics.json", out / "metrics.csv")
    _print(report)
    return EXIT_OK


def cmd_replay_export(args) -> int:
    logs = _collect_logs([args.log])
    if len(logs) != 1:
        raise ConfigError("replay-export takes exactly one log file")
    log = logs[0]
    out = Path(args.out) if args.out else Path(args.log).with_suffix(".csv")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "y", "z", "yaw", "vx", "vy", "wz", "cmd_vx", "cmd_vy", "cmd_wz",
                    "wp1_x", "wp1_y", "wp2_x", "wp2_y", "r_low", "r_high", "done", "reason"])
        for r in log.records:
            w.writerow([repr(r["t"]), *map(repr, r["pose"]), *map(repr, r["vel"]), *map(repr, r["action"]),
                        *map(repr, r["wp1"]), *map(repr, r["wp2"]), repr(r["reward"]["r_low"]),
                        repr(r["reward"]["r_high"]), int(r["done"]), r["reason"] or ""])
    _print({"out": str(out), "rows": len(log.records)})
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wfcnav", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"wfcnav {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, episodes=False, threads=False):
        p.add_argument("--config", help="run configuration (JSON)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output path (default from WFCNAV_OUT)")
        if episodes:
            p.add_argument("--episodes", type=int)
        if threads:
            p.add_argument("--threads", type=int, help="worker threads (default from WFCNAV_THREADS)")

    p = sub.add_parser("generate", help="generate a world bundle")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("graph", help="inspect a bundle's navigation graph")
    p.add_argument("bundle")
    p.add_argument("--from", dest="src", type=int)
    p.add_argument("--to", dest="dst", type=int)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("rollout", help="roll out the scripted policy in a bundle")
    p.add_argument("bundle")
    common(p, episodes=True, threads=True)
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("filter-terrain", help="run the minimal-criterion terrain filter")
    common(p)
    p.add_argument("--generations", type=int)
    p.set_defaults(func=cmd_filter_terrain)

    p = sub.add_parser("eval", help="compute metrics from replay logs")
    p.add_argument("logs", nargs="+", help="replay files or directories")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay-export", help="convert a replay log to CSV")
    p.add_argument("log")
    p.add_argument("--out")
    p.set_defaults(func=cmd_replay_export)
    return parser


def _fail(code: int, kind: str, message: str, **extra) -> int:
    doc = {"error": kind, "message": message, "exit_code": code, **extra}
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(exc.code, exc.kind, str(exc), **exc.extra)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "ConfigError", str(exc))
    except ContradictionAfterRetries as exc:
        return _fail(EXIT_CONTRADICTION, "ContradictionAfterRetries", str(exc), attempts=exc.attempts)
    except InvariantViolation as exc:
        return _fail(EXIT_INVARIANT, "InvariantViolation", str(exc))
    except (BundleError, NavGraphError) as exc:
        return _fail(EXIT_IO, type(exc).__name__, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
