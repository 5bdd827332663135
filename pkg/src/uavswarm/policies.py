"""Non-learned mobility policies: repel-pheromone, BS-CAP, and ConCov.

All three are pure functions of a local observation (plus parameters and the
run's seeded RNG for tie-breaks), so they can be evaluated for every UAV in
parallel within a tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from uavswarm.kinematics import N_SLOTS, STRAIGHT_SLOT, CandidateSet
from uavswarm.network import NeighborRecord

ZERO_VECTOR_EPS = 1e-9


@dataclass(frozen=True)
class BsCapParams:
    """Connectivity/coverage balance knobs for the BS-CAP score."""

    beta: float = 1.5
    beta_prime: float = 3.0

    def __post_init__(self) -> None:
        if not 0 < self.beta <= self.beta_prime:
            raise ValueError(f"need 0 < beta <= beta_prime, got {self.beta}, {self.beta_prime}")


@dataclass(frozen=True)
class ConCovParams:
    omega: float = 0.3
    sensing_period: float = 5.0
    sensing_range: float = 100.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")
        if self.sensing_period <= 0 or self.sensing_range <= 0:
            raise ValueError("sensing period and range must be positive")


@dataclass
class Observation:
    """Everything a UAV knows when choosing its next waypoint.

    Per-slot arrays are aligned with candidates.slots (turn-angle order).
    dist_routed_neighbor is the distance from each candidate cell center to
    the 1-hop neighbor with the shortest advertised BS route (among those
    strictly closer to the BS than this UAV); it is inf when no such
    neighbor exists (and for missing slots). Missing slots otherwise carry
    worst-case fills: look_ahead 1, degree 0, no route, dist_bs_slots inf.
    """

    candidates: CandidateSet
    look_ahead: np.ndarray  # (5,) float
    degree: np.ndarray  # (5,) float
    route: np.ndarray  # (5,) bool
    dist_routed_neighbor: np.ndarray  # (5,) float, meters, inf = no neighbor
    dist_bs_slots: np.ndarray  # (5,) float, candidate center -> BS, meters
    dist_bs: float
    bs_degree: int
    neighbors: list[NeighborRecord] = field(default_factory=list)

    def present_slots(self) -> list[int]:
        return self.candidates.present_slots()

    @property
    def has_routed_neighbor(self) -> bool:
        return any(math.isfinite(float(self.dist_routed_neighbor[s])) for s in self.present_slots())


def alpha(k: float, params: BsCapParams) -> float:
    """Normalized node degree: rewards K near [beta, beta'], discourages more."""
    if k <= params.beta:
        return k / params.beta
    if k <= params.beta_prime:
        return 1.0
    return 1.0 / 3.0


def bscap_score(look_ahead: float, k: float, route: bool, params: BsCapParams) -> float:
    """Candidate score: degree-weighted unvisitedness, zero without a route."""
    if not route:
        return 0.0
    return alpha(k, params) * (1.0 - look_ahead)


def _tie_break(slots: list[int], rng: np.random.Generator) -> int:
    """Prefer the straightest turn; break remaining ties with the seeded RNG."""
    best_turn = min(abs(s - STRAIGHT_SLOT) for s in slots)
    finalists = [s for s in slots if abs(s - STRAIGHT_SLOT) == best_turn]
    if len(finalists) == 1:
        return finalists[0]
    return finalists[int(rng.integers(len(finalists)))]


def _argbest(values, slots: list[int], rng: np.random.Generator, minimize: bool = False) -> int:
    best = min(values[s] for s in slots) if minimize else max(values[s] for s in slots)
    return _tie_break([s for s in slots if values[s] == best], rng)


def straightest_slot(obs: Observation, rng: np.random.Generator) -> int:
    return _tie_break(obs.present_slots(), rng)


# Scores within this window of the best count as tied: look-ahead inputs are
# 6-bit quantized, so finer distinctions are knowledge noise, and strict
# argmax would lock co-located UAVs into identical choices forever.
SCORE_TIE_WINDOW = 0.04
# Among tied candidates, drop those clearly more crowded than the best one.
DEGREE_TIE_SLACK = 0.4
# Roulette floor so fully-visited candidates keep a small selection weight.
ROULETTE_FLOOR = 0.02


def bscap_select(obs: Observation, params: BsCapParams, rng: np.random.Generator) -> int:
    """BS-CAP next-waypoint choice; returns the chosen slot index.

    Maximize the score over candidates that keep a route to the BS,
    resolving quasi-ties toward lower predicted degree, then away from the
    BS (fresh area lies away from the saturated launch region), then the
    straightest turn. With no routed candidate, head for the candidate
    closest to the best routed neighbor; with no routed neighbor either,
    head back toward the BS, the one anchor whose position is always known.
    """
    present = obs.present_slots()
    routed = [s for s in present if obs.route[s]]
    if routed:
        scores = np.zeros(N_SLOTS)
        for s in routed:
            scores[s] = bscap_score(float(obs.look_ahead[s]), float(obs.degree[s]), True, params)
        best = max(scores[s] for s in routed)
        near = [s for s in routed if scores[s] >= best - SCORE_TIE_WINDOW]
        if len(near) > 1:
            k_min = min(float(obs.degree[s]) for s in near)
            near = [s for s in near if float(obs.degree[s]) <= k_min + DEGREE_TIE_SLACK]
        if len(near) > 1:
            d_max = max(float(obs.dist_bs_slots[s]) for s in near)
            near = [s for s in near if float(obs.dist_bs_slots[s]) >= d_max - 1e-9]
        return _tie_break(near, rng)
    if obs.has_routed_neighbor:
        return _argbest(obs.dist_routed_neighbor, present, rng, minimize=True)
    return _argbest(obs.dist_bs_slots, present, rng, minimize=True)


def pheromone_select(obs: Observation, rng: np.random.Generator) -> int:
    """Baseline: pheromone-weighted roulette over the candidate cells.

    Candidate i is drawn with probability proportional to its unvisitedness
    (1 - look_ahead) plus a small floor, the classic digital-pheromone
    selection rule. The stochastic choice is what decorrelates UAVs that
    share the same local knowledge; a deterministic argmin locks co-located
    UAVs into identical lanes and stalls coverage around 75%.
    """
    present = obs.present_slots()
    weights = np.array([1.0 - float(obs.look_ahead[s]) + ROULETTE_FLOOR for s in present])
    weights /= weights.sum()
    return present[int(rng.choice(len(present), p=weights))]


def pheromone_argmin(obs: Observation, rng: np.random.Generator) -> int:
    """Deterministic variant: lowest look-ahead, straightest-turn tie-break."""
    return _argbest(obs.look_ahead, obs.present_slots(), rng, minimize=True)


def concov_heading(
    position: tuple[float, float],
    heading: float,
    neighbor_positions: list[tuple[float, float]],
    route_after_ts: bool,
    routed_neighbor_bearing: float | None,
    params: ConCovParams,
) -> float:
    """ConCov heading update: weighted blend of repulsion and BS attraction.

    Repulsion pushes away from each neighbor with 1/distance weight plus a
    1/sensing_range pull along the current heading; attraction keeps the
    current heading while a route is predicted to survive the sensing period,
    otherwise it adds a unit pull toward the routed neighbor. A term whose
    vector collapses to zero is replaced by the current heading.
    """
    hx, hy = math.cos(heading), math.sin(heading)
    rcov_x = hx / params.sensing_range
    rcov_y = hy / params.sensing_range
    for nx, ny in neighbor_positions:
        dx = position[0] - nx
        dy = position[1] - ny
        d = math.hypot(dx, dy)
        if d <= 0.0:
            continue  # coincident positions give no direction
        rcov_x += dx / (d * d)
        rcov_y += dy / (d * d)
    if route_after_ts or routed_neighbor_bearing is None:
        rcon_x, rcon_y = hx, hy
    else:
        rcon_x = hx + math.cos(routed_neighbor_bearing)
        rcon_y = hy + math.sin(routed_neighbor_bearing)
    ncov = math.hypot(rcov_x, rcov_y)
    if ncov < ZERO_VECTOR_EPS:
        rcov_x, rcov_y, ncov = hx, hy, 1.0
    ncon = math.hypot(rcon_x, rcon_y)
    if ncon < ZERO_VECTOR_EPS:
        rcon_x, rcon_y, ncon = hx, hy, 1.0
    vx = params.omega * rcov_x / ncov + (1.0 - params.omega) * rcon_x / ncon
    vy = params.omega * rcov_y / ncov + (1.0 - params.omega) * rcon_y / ncon
    if math.hypot(vx, vy) < ZERO_VECTOR_EPS:
        return heading
    return math.atan2(vy, vx) % (2.0 * math.pi)
