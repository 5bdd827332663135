"""Dataset generation, online Q-learning, and policy evaluation.

Online training shares one Q-network and one replay memory across all UAVs
and all episodes: every 30 transitions pushed, a 512-sample minibatch is
drawn, one adaptive-moment gradient step is taken, and the frozen target
copy is refreshed after every 100 gradient steps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from uavswarm.config import ScenarioConfig
from uavswarm.engine import Engine, RunTrace
from uavswarm.qnet import Adam, QNetwork
from uavswarm.rl import (
    ReplayBuffer,
    TrainingTransition,
    bellman_targets,
    epsilon_schedule,
)


class TrainingDiverged(RuntimeError):
    """Raised when the online loss turns non-finite."""


def _episode_config(config: ScenarioConfig, episode_seed: int) -> ScenarioConfig:
    return replace(config, seed=episode_seed)


def _spawn_seeds(seed: int, count: int) -> list[int]:
    """Derive per-episode engine seeds from one master seed."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed).spawn(1)[0]))
    return [int(s) for s in rng.integers(0, 2**63 - 1, size=count)]


def generate_offline_dataset(
    config: ScenarioConfig, episodes: int, epsilon: float = 0.1
) -> list[TrainingTransition]:
    """Roll out epsilon-greedy BS-CAP episodes, one transition per waypoint leg."""
    base = replace(config, policy="bscap", epsilon=epsilon)
    transitions: list[TrainingTransition] = []
    for ep, seed in enumerate(_spawn_seeds(config.seed, episodes)):
        run_config = _episode_config(base, seed)
        Engine(run_config).run(transitions.append)
    return transitions


@dataclass
class OnlineStats:
    episode_rewards: list[float]
    episode_transitions: list[int]
    gradient_steps: int
    losses: list[float]


def online_train(
    config: ScenarioConfig,
    init_net: QNetwork,
    episodes: int,
    seed: int,
    replay_capacity: int = 10_000,
    update_every: int = 30,
    batch_size: int = 512,
    lr: float = 1e-4,
    target_refresh: int = 100,
    eps_start: float = 0.1,
    eps_end: float = 0.01,
) -> tuple[QNetwork, OnlineStats]:
    """Refine a pre-trained network by epsilon-greedy interaction."""
    net = init_net.copy()
    target = net.copy()
    params = net.to_flat()
    adam = Adam(net.n_params, lr=lr)
    replay = ReplayBuffer(replay_capacity)
    sample_ss, seeds_ss = np.random.SeedSequence(seed).spawn(2)
    sample_rng = np.random.Generator(np.random.PCG64(sample_ss))
    episode_seeds = [
        int(s)
        for s in np.random.Generator(np.random.PCG64(seeds_ss)).integers(
            0, 2**63 - 1, size=episodes
        )
    ]
    discount = 0.9
    stats = OnlineStats([], [], 0, [])
    state = {"pushes": 0}

    def learn(tr: TrainingTransition) -> None:
        nonlocal params, target
        replay.push(tr)
        state["pushes"] += 1
        if state["pushes"] % update_every != 0 or len(replay) < batch_size:
            return
        batch = replay.sample(sample_rng, batch_size)
        s = np.stack([b.state for b in batch])
        a = np.array([b.action for b in batch], dtype=np.int64)
        r = np.array([b.reward for b in batch])
        s2 = np.stack([b.next_state for b in batch])
        term = np.array([b.terminal for b in batch], dtype=bool)
        mask = np.array([b.next_valid for b in batch], dtype=np.int64)
        y = bellman_targets(target, r, s2, term, discount, mask)
        loss, grad = net.loss_and_grad(s, a, y)
        if not np.isfinite(loss):
            raise TrainingDiverged(f"loss became {loss} at gradient step {stats.gradient_steps}")
        params = adam.step(params, grad)
        net.from_flat(params)
        stats.losses.append(loss)
        stats.gradient_steps += 1
        if stats.gradient_steps % target_refresh == 0:
            target = net.copy()

    for ep in range(episodes):
        eps = epsilon_schedule(ep, episodes, eps_start, eps_end)
        run_config = _episode_config(replace(config, policy="dqn"), episode_seeds[ep])
        trace = Engine(run_config, net=net, epsilon=eps).run(learn)
        stats.episode_rewards.append(trace.total_reward)
        stats.episode_transitions.append(trace.n_transitions)
    return net, stats


def evaluate_policy(
    config: ScenarioConfig,
    seeds: list[int],
    net: QNetwork | None = None,
    epsilon: float = 0.0,
) -> list[RunTrace]:
    """Run the configured policy over the given seeds, collecting rewards."""
    traces = []
    for s in seeds:
        run_config = replace(config, seed=s)
        trace = Engine(run_config, net=net, epsilon=epsilon).run(lambda tr: None)
        traces.append(trace)
    return traces
