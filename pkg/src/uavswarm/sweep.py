"""Experiment sweeps: (config x seed) grids, per-run and aggregate CSVs.

Runs are independent and may execute on parallel workers; output rows are
always written in (config index, seed) order with fixed float formatting, so
identical configs and seeds produce byte-identical CSVs regardless of worker
count or completion order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from uavswarm.config import ScenarioConfig
from uavswarm.engine import RunTrace, run_episode
from uavswarm.metrics import RUN_COLUMNS, SAMPLE_COLUMNS
from uavswarm.qnet import load_checkpoint

AGGREGATE_COLUMNS = (
    "policy",
    "beta",
    "beta_prime",
    "omega",
    "reward_n",
    "n_uavs",
    "speed_mps",
    "failure_pct",
    "n_seeds",
    "coverage_pct_mean",
    "coverage_pct_sem",
    "tc_s_mean",
    "tc_s_sem",
    "tc_censored",
    "fairness_mean",
    "fairness_sem",
    "ncc_mean",
    "ncc_sem",
    "and_mean",
    "and_sem",
    "tbs_mean",
    "tbs_sem",
    "giant_mean",
    "giant_sem",
)


def _fmt_param(value: float) -> str:
    return f"{value:g}"


def _fmt_metric(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def _policy_params(config: ScenarioConfig) -> dict[str, str]:
    """Only the parameters the policy actually reads; others stay blank."""
    out = {"beta": "", "beta_prime": "", "omega": "", "reward_n": ""}
    if config.policy == "bscap":
        out["beta"] = _fmt_param(config.beta)
        out["beta_prime"] = _fmt_param(config.beta_prime)
    elif config.policy == "concov":
        out["omega"] = _fmt_param(config.omega)
    elif config.policy == "dqn":
        out["reward_n"] = _fmt_param(config.reward_n)
    return out


def run_row(config: ScenarioConfig, seed: int, trace: RunTrace) -> list[str]:
    params = _policy_params(config)
    return [
        config.policy,
        params["beta"],
        params["beta_prime"],
        params["omega"],
        params["reward_n"],
        str(config.n_uavs),
        _fmt_param(config.speed_mps),
        _fmt_param(config.failure_pct),
        str(seed),
        _fmt_metric(trace.coverage_pct),
        "" if trace.tc_s is None else f"{trace.tc_s:.1f}",
        _fmt_metric(trace.fairness),
        _fmt_metric(trace.mean_ncc),
        _fmt_metric(trace.mean_and),
        _fmt_metric(trace.tbs_pct),
        _fmt_metric(trace.mean_giant),
    ]


def write_samples_csv(path: Path, trace: RunTrace) -> None:
    with open(path, "w") as f:
        f.write(",".join(SAMPLE_COLUMNS) + "\n")
        for s in trace.samples:
            f.write(
                f"{s.time:.1f},{s.coverage_pct:.6f},{s.ncc},{s.and_degree:.6f},"
                f"{s.giant},{s.tbs_instant_pct:.6f}\n"
            )


def write_events_csv(path: Path, trace: RunTrace) -> None:
    with open(path, "w") as f:
        f.write("time_s,uav_id,event,detail\n")
        for t, uav, kind, detail in trace.events:
            f.write(f"{t:.1f},{uav},{kind},{detail}\n")


def write_runs_csv(path: Path, rows: list[list[str]]) -> None:
    with open(path, "w") as f:
        f.write(",".join(RUN_COLUMNS) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")


def _mean_sem(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    sem = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return mean, sem


def aggregate_row(config: ScenarioConfig, traces: list[RunTrace]) -> list[str]:
    params = _policy_params(config)
    tc_values = [t.tc_s for t in traces if t.tc_s is not None]
    censored = len(traces) - len(tc_values)
    cov = _mean_sem([t.coverage_pct for t in traces])
    fair = _mean_sem([t.fairness for t in traces if t.fairness is not None])
    ncc = _mean_sem([t.mean_ncc for t in traces])
    andm = _mean_sem([t.mean_and for t in traces])
    tbs = _mean_sem([t.tbs_pct for t in traces])
    giant = _mean_sem([t.mean_giant for t in traces])
    tc = _mean_sem(tc_values) if tc_values else (None, None)
    return [
        config.policy,
        params["beta"],
        params["beta_prime"],
        params["omega"],
        params["reward_n"],
        str(config.n_uavs),
        _fmt_param(config.speed_mps),
        _fmt_param(config.failure_pct),
        str(len(traces)),
        _fmt_metric(cov[0]),
        _fmt_metric(cov[1]),
        _fmt_metric(tc[0]),
        _fmt_metric(tc[1]),
        str(censored),
        _fmt_metric(fair[0]),
        _fmt_metric(fair[1]),
        _fmt_metric(ncc[0]),
        _fmt_metric(ncc[1]),
        _fmt_metric(andm[0]),
        _fmt_metric(andm[1]),
        _fmt_metric(tbs[0]),
        _fmt_metric(tbs[1]),
        _fmt_metric(giant[0]),
        _fmt_metric(giant[1]),
    ]


def _run_job(args: tuple[ScenarioConfig, int, str | None]) -> RunTrace:
    config, seed, checkpoint = args
    net = load_checkpoint(checkpoint) if checkpoint else None
    from dataclasses import replace

    return run_episode(replace(config, seed=seed), net=net)


def run_sweep(
    configs: list[ScenarioConfig],
    n_seeds: int,
    out_dir: Path,
    workers: int = 1,
    checkpoint: str | None = None,
) -> tuple[Path, Path]:
    """Run every (config, seed) pair and write runs.csv plus aggregate.csv.

    Per-config seeds are config.seed + 0 .. config.seed + n_seeds - 1. A
    failed run aborts the sweep; partial CSVs are not written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (ci, seed, (config, config.seed + seed, checkpoint))
        for ci, config in enumerate(configs)
        for seed in range(n_seeds)
    ]
    results: dict[tuple[int, int], RunTrace] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (ci, seed, _), trace in zip(jobs, pool.map(_run_job, [j[2] for j in jobs])):
                results[(ci, seed)] = trace
    else:
        for ci, seed, job in jobs:
            results[(ci, seed)] = _run_job(job)
    rows = []
    agg_rows = []
    for ci, config in enumerate(configs):
        traces = [results[(ci, seed)] for seed in range(n_seeds)]
        for seed, trace in enumerate(traces):
            rows.append(run_row(config, config.seed + seed, trace))
        agg_rows.append(aggregate_row(config, traces))
    runs_path = out_dir / "runs.csv"
    agg_path = out_dir / "aggregate.csv"
    write_runs_csv(runs_path, rows)
    with open(agg_path, "w") as f:
        f.write(",".join(AGGREGATE_COLUMNS) + "\n")
        for row in agg_rows:
            f.write(",".join(row) + "\n")
    return runs_path, agg_path
