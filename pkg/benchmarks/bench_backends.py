#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-Python fallback.

Times the two hot kernels in isolation and a full seeded episode through
each backend. Run from the repo root:

    python benchmarks/bench_backends.py
"""

import math
import time

import numpy as np

import uavswarm.engine as engine_mod
import uavswarm.pheromone as pher_mod
from uavswarm import _kernels_py
from uavswarm.config import ScenarioConfig

try:
    from uavswarm import _kernels
except ImportError:
    _kernels = None


def bench_motion(kernels, n_uavs=50, ticks=2000):
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 6000, n_uavs)
    y = rng.uniform(0, 6000, n_uavs)
    heading = rng.uniform(0, 2 * math.pi, n_uavs)
    wx = rng.uniform(0, 6000, n_uavs)
    wy = rng.uniform(0, 6000, n_uavs)
    alive = np.ones(n_uavs, dtype=np.uint8)
    cell_x = (x // 100).astype(np.int64)
    cell_y = (y // 100).astype(np.int64)
    visits = np.zeros((60, 60), dtype=np.int64)
    pending = np.zeros((n_uavs, 60, 60))
    leg_new = np.zeros(n_uavs, dtype=np.int64)
    leg_rev = np.zeros(n_uavs, dtype=np.int64)
    reached = np.zeros(n_uavs, dtype=np.uint8)
    t0 = time.perf_counter()
    for _ in range(ticks):
        kernels.motion_tick(x, y, heading, wx, wy, alive, False, 20.0, 0.1,
                            math.radians(30.0), 6000.0, 6000.0, 100.0, 60, 60,
                            cell_x, cell_y, visits, pending, leg_new, leg_rev, reached)
    return time.perf_counter() - t0


def bench_pheromone(kernels, n_maps=50, steps=200):
    rng = np.random.default_rng(1)
    maps = rng.random((n_maps, 60, 60))
    pending = np.zeros_like(maps)
    t0 = time.perf_counter()
    for _ in range(steps):
        kernels.pheromone_step(maps, pending, 0.006, 0.006, False)
    return time.perf_counter() - t0


def bench_episode(kernels):
    engine_mod.kernels = kernels
    pher_mod.kernels = kernels
    cfg = ScenarioConfig(n_uavs=30, speed_mps=20.0, sim_seconds=600.0, policy="bscap", seed=1)
    t0 = time.perf_counter()
    engine_mod.run_episode(cfg)
    return time.perf_counter() - t0


def main():
    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.append(("compiled", _kernels))
    else:
        print("compiled kernels not built; benchmarking the fallback only")
    results = {}
    for name, kernels in backends:
        motion = bench_motion(kernels)
        pheromone = bench_pheromone(kernels)
        episode = bench_episode(kernels)
        results[name] = (motion, pheromone, episode)
        print(f"{name:9s} motion 50x2000 ticks: {motion:6.2f}s   "
              f"pheromone 50 maps x 200 steps: {pheromone:6.2f}s   "
              f"episode 30 UAVs x 600 s: {episode:6.2f}s")
    if len(results) == 2:
        py, cy = results["python"], results["compiled"]
        print(f"speedup   motion {py[0] / cy[0]:5.1f}x   pheromone {py[1] / cy[1]:5.1f}x   "
              f"episode {py[2] / cy[2]:5.1f}x")


if __name__ == "__main__":
    main()
