"""Q-learning plumbing: state features, rewards, replay, offline pre-training.

The 22-value state vector layout (all entries in [0, 1]):

    slots 0..4 in turn-angle order, 4 values each:
        [look-ahead pheromone, degree/15, route flag, dist to routed nbr / diag]
    [20] distance UAV -> BS / map diagonal
    [21] BS node degree / 15

Missing (boundary-clipped) slots fill with [1, 0, 0, 1] so masked actions
also look unattractive to the value function.

Transition datasets are stored as a binary file:

    magic    8 bytes  b"UAVTRNS\\0"
    version  u32 LE   1
    state    u32 LE   22
    count    u64 LE
    records  22 x f64 state, u8 action, f64 reward, 22 x f64 next state,
             u8 terminal, u8 next-action validity bitmask (bit i = slot i
             holds an in-bounds candidate in the next state)
             (little-endian, unaligned)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from uavswarm.policies import Observation, _tie_break
from uavswarm.qnet import N_ACTIONS, STATE_DIM, QNetwork, Sgd

_DATA_MAGIC = b"UAVTRNS\x00"
_DATA_VERSION = 1
_RECORD = struct.Struct("<" + "22d" + "B" + "d" + "22d" + "B" + "B")

DEGREE_CAP = 15.0


@dataclass(frozen=True)
class RewardParams:
    """Reward weights: m scales coverage, n scales BS connectivity."""

    m: float = 3.0
    n: float = 3.0
    discount: float = 0.9

    def __post_init__(self) -> None:
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount}")


@dataclass
class TrainingTransition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool = False
    next_valid: int = 0b11111  # bitmask of in-bounds action slots in next_state


def featurize(obs: Observation, diagonal: float) -> np.ndarray:
    """Encode an observation as the fixed 22-value state vector."""
    v = np.empty(STATE_DIM)
    for slot in range(N_ACTIONS):
        base = 4 * slot
        if obs.candidates.slots[slot] is None:
            v[base : base + 4] = (1.0, 0.0, 0.0, 1.0)
        else:
            v[base] = min(max(float(obs.look_ahead[slot]), 0.0), 1.0)
            v[base + 1] = min(float(obs.degree[slot]), DEGREE_CAP) / DEGREE_CAP
            v[base + 2] = 1.0 if obs.route[slot] else 0.0
            v[base + 3] = min(float(obs.dist_routed_neighbor[slot]) / diagonal, 1.0)
    v[20] = min(obs.dist_bs / diagonal, 1.0)
    v[21] = min(float(obs.bs_degree), DEGREE_CAP) / DEGREE_CAP
    return v


def reward(
    new_cells: int, revisited_cells: int, k_arrival: float, route: bool, params: RewardParams
) -> float:
    """Per-leg reward: coverage difference, node-degree shaping, BS penalty."""
    if new_cells < 0 or revisited_cells < 0:
        raise ValueError("cell counts must be non-negative")
    if 1.0 < k_arrival <= 2.0:
        r_k = -1.0
    elif 2.0 < k_arrival < 3.0:
        r_k = 0.0
    else:
        r_k = -4.0
    r_b = 0.0 if route else -3.0
    return params.m * (new_cells - revisited_cells) + r_k + params.n * r_b


class ReplayBuffer:
    """Fixed-capacity ring buffer; oldest transitions are evicted first."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list[TrainingTransition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, item: TrainingTransition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._next] = item
        self._next = (self._next + 1) % self.capacity

    def sample(self, rng: np.random.Generator, size: int) -> list[TrainingTransition]:
        idx = rng.choice(len(self._items), size=size, replace=False)
        return [self._items[i] for i in idx]


def write_transitions(path: str | Path, transitions: list[TrainingTransition]) -> None:
    with open(path, "wb") as f:
        f.write(_DATA_MAGIC)
        f.write(struct.pack("<IIQ", _DATA_VERSION, STATE_DIM, len(transitions)))
        for tr in transitions:
            f.write(
                _RECORD.pack(
                    *tr.state, tr.action, tr.reward, *tr.next_state,
                    1 if tr.terminal else 0, tr.next_valid,
                )
            )


def read_transitions(path: str | Path) -> list[TrainingTransition]:
    with open(path, "rb") as f:
        if f.read(len(_DATA_MAGIC)) != _DATA_MAGIC:
            raise ValueError("not a transition dataset: bad magic")
        version, dim, count = struct.unpack("<IIQ", f.read(16))
        if version != _DATA_VERSION or dim != STATE_DIM:
            raise ValueError(f"unsupported dataset header ({version}, {dim})")
        out = []
        for _ in range(count):
            rec = _RECORD.unpack(f.read(_RECORD.size))
            out.append(
                TrainingTransition(
                    state=np.array(rec[:22]),
                    action=int(rec[22]),
                    reward=float(rec[23]),
                    next_state=np.array(rec[24:46]),
                    terminal=bool(rec[46]),
                    next_valid=int(rec[47]),
                )
            )
        if f.read(1):
            raise ValueError("trailing bytes after final record")
        return out


def _stack(transitions: list[TrainingTransition]):
    s = np.stack([t.state for t in transitions])
    a = np.array([t.action for t in transitions], dtype=np.int64)
    r = np.array([t.reward for t in transitions])
    s2 = np.stack([t.next_state for t in transitions])
    term = np.array([t.terminal for t in transitions], dtype=bool)
    mask = np.array([t.next_valid for t in transitions], dtype=np.int64)
    return s, a, r, s2, term, mask


def bellman_targets(
    target_net: QNetwork,
    r: np.ndarray,
    s2: np.ndarray,
    term: np.ndarray,
    discount: float,
    next_valid: np.ndarray | None = None,
) -> np.ndarray:
    """r + discount * max_a' Q(s', a') over the actions valid in s'.

    Boundary-clipped slots are excluded from the bootstrap max; otherwise the
    value of actions that can never be taken leaks into the targets.
    """
    q2 = target_net.forward_batch(s2)
    if next_valid is not None:
        bits = (next_valid[:, np.newaxis] >> np.arange(N_ACTIONS)) & 1
        q2 = np.where(bits.astype(bool), q2, -np.inf)
    boot = q2.max(axis=1)
    return r + discount * np.where(term, 0.0, boot)


def offline_pretrain(
    transitions: list[TrainingTransition],
    seed: int,
    epochs: int = 50,
    batch_size: int = 1024,
    lr: float = 0.02,
    lr_decay: float = 0.95,
    target_refresh: int = 3000,
    discount: float = 0.9,
) -> tuple[QNetwork, list[float]]:
    """Offline Q-learning on a fixed dataset of BS-CAP exploration rollouts.

    Random minibatch partitions per epoch, plain SGD with a per-epoch decayed
    rate, and a frozen target copy refreshed every target_refresh minibatches.
    Returns the trained network and the mean minibatch loss per epoch.
    """
    if not transitions:
        raise ValueError("offline pre-training needs a non-empty dataset")
    init_ss, shuffle_ss = np.random.SeedSequence(seed).spawn(2)
    net = QNetwork.init_random(np.random.Generator(np.random.PCG64(init_ss)))
    shuffle_rng = np.random.Generator(np.random.PCG64(shuffle_ss))
    target = net.copy()
    s, a, r, s2, term, mask = _stack(transitions)
    params = net.to_flat()
    epoch_losses = []
    t = 1
    for _ in range(epochs):
        opt = Sgd(lr)
        perm = shuffle_rng.permutation(len(transitions))
        losses = []
        for start in range(0, len(perm), batch_size):
            batch = perm[start : start + batch_size]
            t += 1
            y = bellman_targets(target, r[batch], s2[batch], term[batch], discount, mask[batch])
            loss, grad = net.loss_and_grad(s[batch], a[batch], y)
            params = opt.step(params, grad)
            net.from_flat(params)
            losses.append(loss)
            if t % target_refresh == 0:
                target = net.copy()
        epoch_losses.append(float(np.mean(losses)))
        lr *= lr_decay
    return net, epoch_losses


def epsilon_schedule(episode: int, total_episodes: int, start: float = 0.1, end: float = 0.01) -> float:
    """Linear decay over the first half of training, then constant."""
    half = max(total_episodes // 2, 1)
    if episode >= half:
        return end
    return start + (end - start) * (episode / half)


def dqn_select(
    net: QNetwork,
    obs: Observation,
    epsilon: float,
    rng: np.random.Generator,
    diagonal: float,
    tiebreak_rng: np.random.Generator | None = None,
) -> int:
    """Epsilon-greedy waypoint slot choice over the in-bounds candidates."""
    present = obs.present_slots()
    if epsilon > 0.0 and rng.random() < epsilon:
        return present[int(rng.integers(len(present)))]
    q = net.forward(featurize(obs, diagonal))
    best = max(q[s] for s in present)
    ties = [s for s in present if q[s] == best]
    return _tie_break(ties, tiebreak_rng if tiebreak_rng is not None else rng)
