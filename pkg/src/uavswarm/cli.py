"""Command-line interface.

Subcommands: simulate, sweep, gen-dataset, pretrain, train, eval.
Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from uavswarm import BACKEND
from uavswarm.config import ConfigError, ScenarioConfig, load_config, load_sweep
from uavswarm.engine import run_episode
from uavswarm.qnet import load_checkpoint, save_checkpoint
from uavswarm.rl import offline_pretrain, read_transitions, write_transitions
from uavswarm.sweep import (
    aggregate_row,
    run_row,
    run_sweep,
    write_events_csv,
    write_runs_csv,
    write_samples_csv,
)
from uavswarm.training import evaluate_policy, generate_offline_dataset, online_train


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavswarm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
        p.add_argument("--config", required=config_required, help="scenario config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default="out", help="output directory or file")

    p = sub.add_parser("simulate", help="run one episode and write CSVs")
    add_common(p)
    p.add_argument("--policy", default=None, help="override the configured policy")
    p.add_argument("--checkpoint", default=None, help="Q-network checkpoint (dqn policy)")

    p = sub.add_parser("sweep", help="run a config grid x seeds and write summary CSVs")
    add_common(p)
    p.add_argument("--seeds", type=int, default=30, help="seeds per configuration")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--checkpoint", default=None)

    p = sub.add_parser("gen-dataset", help="generate offline transitions from BS-CAP")
    add_common(p)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.1)

    p = sub.add_parser("pretrain", help="offline Q-network pre-training")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=1024)

    p = sub.add_parser("train", help="online Q-network training")
    add_common(p)
    p.add_argument("--checkpoint", required=True, help="initial (pre-trained) checkpoint")
    p.add_argument("--episodes", type=int, required=True)

    p = sub.add_parser("eval", help="evaluate a checkpoint over seeded episodes")
    add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seeds", type=int, default=10)
    return parser


def _load(args, **overrides) -> ScenarioConfig:
    if args.seed is not None:
        overrides["seed"] = args.seed
    return load_config(args.config, **overrides)


def _cmd_simulate(args) -> int:
    overrides = {}
    if args.policy is not None:
        overrides["policy"] = args.policy
    config = _load(args, **overrides)
    net = load_checkpoint(args.checkpoint) if args.checkpoint else None
    trace = run_episode(config, net=net)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_samples_csv(out / "samples.csv", trace)
    write_events_csv(out / "events.csv", trace)
    write_runs_csv(out / "summary.csv", [run_row(config, config.seed, trace)])
    tc = "censored" if trace.tc_s is None else f"{trace.tc_s:.0f}s"
    print(
        f"[{BACKEND}] {config.policy} n={config.n_uavs} seed={config.seed}: "
        f"coverage={trace.coverage_pct:.1f}% tc={tc} ncc={trace.mean_ncc:.2f} "
        f"and={trace.mean_and:.2f} tbs={trace.tbs_pct:.1f}% giant={trace.mean_giant:.1f}"
    )
    return 0


def _cmd_sweep(args) -> int:
    overrides = {"seed": args.seed} if args.seed is not None else {}
    configs = load_sweep(args.config, **overrides)
    runs_path, agg_path = run_sweep(
        configs, args.seeds, Path(args.out), workers=args.workers, checkpoint=args.checkpoint
    )
    print(f"[{BACKEND}] {len(configs)} configs x {args.seeds} seeds -> {runs_path}, {agg_path}")
    return 0


def _cmd_gen_dataset(args) -> int:
    config = _load(args)
    transitions = generate_offline_dataset(config, args.episodes, args.epsilon)
    write_transitions(args.out, transitions)
    print(f"[{BACKEND}] wrote {len(transitions)} transitions to {args.out}")
    return 0


def _cmd_pretrain(args) -> int:
    transitions = read_transitions(args.dataset)
    net, losses = offline_pretrain(
        transitions, seed=args.seed, epochs=args.epochs, batch_size=args.batch_size
    )
    save_checkpoint(net, args.out)
    print(
        f"[{BACKEND}] pretrained on {len(transitions)} transitions: "
        f"epoch-1 loss {losses[0]:.4f} -> epoch-{len(losses)} loss {losses[-1]:.4f}"
    )
    return 0


def _cmd_train(args) -> int:
    config = _load(args)
    init = load_checkpoint(args.checkpoint)
    net, stats = online_train(config, init, episodes=args.episodes, seed=config.seed)
    save_checkpoint(net, args.out)
    rewards = stats.episode_rewards
    print(
        f"[{BACKEND}] trained {args.episodes} episodes ({stats.gradient_steps} gradient steps); "
        f"mean episode reward first/last quarter: "
        f"{sum(rewards[: len(rewards) // 4 or 1]) / (len(rewards) // 4 or 1):.1f} / "
        f"{sum(rewards[-(len(rewards) // 4 or 1):]) / (len(rewards) // 4 or 1):.1f}"
    )
    return 0


def _cmd_eval(args) -> int:
    config = _load(args, policy="dqn")
    net = load_checkpoint(args.checkpoint)
    seeds = [config.seed + i for i in range(args.seeds)]
    traces = evaluate_policy(config, seeds, net=net)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [run_row(replace(config, seed=s), s, t) for s, t in zip(seeds, traces)]
    write_runs_csv(out / "runs.csv", rows)
    agg = aggregate_row(config, traces)
    mean_reward = sum(t.total_reward for t in traces) / len(traces)
    print(
        f"[{BACKEND}] eval over {args.seeds} seeds: tbs={agg[20]}% ncc={agg[16]} "
        f"mean episode reward {mean_reward:.1f} -> {out / 'runs.csv'}"
    )
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "gen-dataset": _cmd_gen_dataset,
    "pretrain": _cmd_pretrain,
    "train": _cmd_train,
    "eval": _cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
