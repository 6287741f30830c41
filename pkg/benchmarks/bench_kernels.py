"""Compare the compiled kernels against the pure-Python reference.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from wfcnav import _kernels_py
from wfcnav.worldgen import EXAMPLES_DIR, build_tile_catalog, load_example_grid

try:
    from wfcnav import _kernels as _compiled
except ImportError:
    _compiled = None


def best_of(fn, repeat: int) -> float:
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    rng = np.random.default_rng(0)
    data = rng.random((320, 320)).astype(np.float32)
    friction = np.full_like(data, 0.8)
    xs = rng.uniform(0.0, 32.0, 20_000)
    ys = rng.uniform(0.0, 32.0, 20_000)
    bx = 16.0 + rng.uniform(-0.4, 0.4, 2_000)
    by = 16.0 + rng.uniform(-0.4, 0.4, 2_000)

    cat = build_tile_catalog(load_example_grid(EXAMPLES_DIR / "rooms.txt"), 2)
    allowed = cat.compatibility()
    weights = np.asarray(cat.weights, dtype=np.float64)
    wlogw = weights * np.log(weights)
    n = 48 * 48
    noise = rng.random(n) * 1e-7
    uniforms = rng.random(n)

    return {
        "bilinear 20k points": lambda k: k.bilinear_sample(data, 0.1, 0.05, 0.05, xs, ys),
        "traversal 2k targets": lambda k: k.traversal_codes(data, friction, 0.1, 0.05, 0.05, 16.0, 16.0,
                                                            bx, by, 0.2, 0.35, math.tan(0.45), 0.5),
        "wfc 48x48": lambda k: k.wfc_solve(48, 48, allowed, weights, wlogw, noise, uniforms),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'workload':<24}{'python (s)':>12}{'compiled (s)':>14}{'speedup':>10}")
    for name, run in workloads().items():
        py = best_of(lambda: run(_kernels_py), args.repeat)
        if _compiled is None:
            print(f"{name:<24}{py:>12.4f}{'n/a':>14}{'n/a':>10}")
            continue
        c = best_of(lambda: run(_compiled), args.repeat)
        print(f"{name:<24}{py:>12.4f}{c:>14.4f}{py / c:>9.1f}x")


if __name__ == "__main__":
    main()
