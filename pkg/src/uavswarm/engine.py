"""Tick-driven simulation engine.

Schedule (all periods in simulated seconds): kinematics every 0.1, pheromone
update every 1, hello exchange every 2, ConCov heading update every sensing
period, metrics every 10; waypoint policies re-select whenever a UAV reaches
its waypoint. Within a tick UAVs are processed in ascending id and hello
messages are composed from pre-exchange state, so delivery order cannot leak
into the results. Runs are a pure function of (config, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from uavswarm import metrics as met
from uavswarm import network as net_mod
from uavswarm.backend import kernels
from uavswarm.config import ConfigError, RngStreams, ScenarioConfig
from uavswarm.grid import CellCoord
from uavswarm.kinematics import (
    KINEMATIC_DT,
    MAX_TURN_RATE,
    candidate_waypoints,
    waypoint_spacing,
)
from uavswarm.pheromone import UPDATE_INTERVAL, look_ahead_value
from uavswarm.policies import (
    BsCapParams,
    ConCovParams,
    Observation,
    bscap_select,
    concov_heading,
    pheromone_select,
)
from uavswarm.qnet import QNetwork
from uavswarm.rl import RewardParams, TrainingTransition, dqn_select, featurize, reward

TICKS_PER_SEC = 10
DT = KINEMATIC_DT
HELLO_TICKS = int(net_mod.HELLO_PERIOD * TICKS_PER_SEC)
PHEROMONE_TICKS = int(UPDATE_INTERVAL * TICKS_PER_SEC)
METRICS_TICKS = int(met.METRICS_PERIOD * TICKS_PER_SEC)
DEPLOY_RADIUS = 500.0  # m around the BS

TransitionSink = Callable[[TrainingTransition], None]


@dataclass(frozen=True)
class Failure:
    uav_id: int
    time: float


def make_failure_schedule(
    n_uavs: int, failure_pct: float, horizon: float, rng: np.random.Generator
) -> list[Failure]:
    """floor(n*pct/100) distinct UAVs failing at sorted uniform times in (0, horizon]."""
    if not 0.0 <= failure_pct <= 100.0:
        raise ConfigError(f"failure_pct {failure_pct} outside [0, 100]")
    count = int(n_uavs * failure_pct / 100.0)
    if count == 0:
        return []
    ids = rng.choice(n_uavs, size=count, replace=False)
    times = np.sort(horizon - rng.uniform(0.0, horizon, size=count))
    return [Failure(int(u), float(t)) for u, t in zip(ids, times)]


class PheromoneDriver:
    """Baseline: lowest look-ahead pheromone."""

    def __init__(self, tiebreak_rng: np.random.Generator) -> None:
        self.tiebreak = tiebreak_rng

    def select(self, obs: Observation, uav_id: int) -> int:
        return pheromone_select(obs, self.tiebreak)


class BsCapDriver:
    """BS-CAP heuristic, optionally with epsilon-greedy exploration."""

    def __init__(
        self,
        params: BsCapParams,
        tiebreak_rng: np.random.Generator,
        explore_rng: np.random.Generator | None = None,
        epsilon: float = 0.0,
    ) -> None:
        self.params = params
        self.tiebreak = tiebreak_rng
        self.explore = explore_rng
        self.epsilon = epsilon

    def select(self, obs: Observation, uav_id: int) -> int:
        if self.epsilon > 0.0 and self.explore is not None and self.explore.random() < self.epsilon:
            present = obs.present_slots()
            return present[int(self.explore.integers(len(present)))]
        return bscap_select(obs, self.params, self.tiebreak)


class DqnDriver:
    """Greedy (or epsilon-greedy) selection from a Q-network."""

    def __init__(
        self,
        net: QNetwork,
        epsilon: float,
        explore_rng: np.random.Generator,
        tiebreak_rng: np.random.Generator,
        diagonal: float,
    ) -> None:
        self.net = net
        self.epsilon = epsilon
        self.explore = explore_rng
        self.tiebreak = tiebreak_rng
        self.diagonal = diagonal

    def select(self, obs: Observation, uav_id: int) -> int:
        return dqn_select(self.net, obs, self.epsilon, self.explore, self.diagonal, self.tiebreak)


@dataclass
class RunTrace:
    """Everything one run produced: 10 s samples, event log, summary stats."""

    samples: list[met.MetricsSample] = field(default_factory=list)
    events: list[tuple[float, int, str, str]] = field(default_factory=list)
    coverage_pct: float = 0.0
    tc_s: float | None = None
    fairness: float | None = None
    mean_ncc: float = 0.0
    mean_and: float = 0.0
    tbs_pct: float = 0.0
    mean_giant: float = 0.0
    n_transitions: int = 0
    total_reward: float = 0.0


class Engine:
    """One seeded simulation run over a fixed scenario."""

    def __init__(
        self,
        config: ScenarioConfig,
        streams: RngStreams | None = None,
        driver=None,
        net: QNetwork | None = None,
        epsilon: float | None = None,
    ) -> None:
        self.config = config
        self.grid = config.grid()
        self.bs = config.bs_position
        self.streams = streams if streams is not None else RngStreams.from_seed(config.seed)
        eps = config.epsilon if epsilon is None else epsilon
        self.heading_hold = config.policy == "concov"
        if driver is not None:
            self.driver = driver
        elif config.policy == "pheromone":
            self.driver = PheromoneDriver(self.streams.tiebreak)
        elif config.policy == "bscap":
            self.driver = BsCapDriver(
                BsCapParams(config.beta, config.beta_prime),
                self.streams.tiebreak,
                self.streams.explore,
                eps,
            )
        elif config.policy == "dqn":
            if net is None:
                raise ConfigError("dqn policy needs a checkpoint network")
            self.driver = DqnDriver(
                net, eps, self.streams.explore, self.streams.tiebreak, self.grid.diagonal
            )
        else:
            self.driver = None  # concov steers by heading, not waypoints
        self.concov_params = ConCovParams(
            config.omega, config.sensing_period_s, config.sensing_range_m
        )
        self.reward_params = RewardParams(config.reward_m, config.reward_n)
        self.spacing = waypoint_spacing(config.speed_mps, config.cell_size_m)
        self._init_state()

    def _init_state(self) -> None:
        cfg = self.config
        n = cfg.n_uavs
        grid = self.grid
        rng = self.streams.deployment
        self.x = np.empty(n)
        self.y = np.empty(n)
        self.heading = np.empty(n)
        for u in range(n):
            r = DEPLOY_RADIUS * math.sqrt(rng.random())
            theta = rng.random() * math.pi
            self.x[u] = min(max(self.bs[0] + r * math.cos(theta), 0.0), grid.world_width)
            self.y[u] = min(max(self.bs[1] + r * math.sin(theta), 0.0), grid.world_height)
            self.heading[u] = rng.random() * 2.0 * math.pi
        self.alive = np.ones(n, dtype=np.uint8)
        self.cell_x = np.empty(n, dtype=np.int64)
        self.cell_y = np.empty(n, dtype=np.int64)
        self.wx = np.empty(n)
        self.wy = np.empty(n)
        self.wp_cell: list[CellCoord] = []
        self.has_wp = np.zeros(n, dtype=bool)
        self.reached = np.zeros(n, dtype=np.uint8)
        self.maps = np.zeros((n, grid.height, grid.width))
        self.pending = np.zeros_like(self.maps)
        self.visits = met.VisitGrid(grid)
        self.leg_new = np.zeros(n, dtype=np.int64)
        self.leg_rev = np.zeros(n, dtype=np.int64)
        self.tables = [
            net_mod.NeighborTable(grid, self.bs) for _ in range(n)
        ]
        self.own_hops = np.full(n, net_mod.HOPS_UNREACHABLE, dtype=np.int64)
        self.pending_sa: list[tuple[np.ndarray, int] | None] = [None] * n
        for u in range(n):
            cell = grid.cell_of(self.x[u], self.y[u])
            self.cell_x[u], self.cell_y[u] = cell
            self.wp_cell.append(cell)
            self.wx[u], self.wy[u] = grid.cell_center(cell)
            self.visits.visit(cell)
            self.pending[u, cell[1], cell[0]] += 1.0
        self.failures = make_failure_schedule(
            n, cfg.failure_pct, cfg.sim_seconds, self.streams.failures
        )
        self._failure_ticks = [
            (int(math.ceil(f.time * TICKS_PER_SEC - 1e-9)), f) for f in self.failures
        ]
        self._next_failure = 0

    # -- per-tick phases ---------------------------------------------------

    def _apply_failures(self, k: int, trace: RunTrace) -> None:
        while self._next_failure < len(self._failure_ticks):
            tick, fail = self._failure_ticks[self._next_failure]
            if tick > k:
                break
            self.alive[fail.uav_id] = 0
            trace.events.append((k * DT, fail.uav_id, "failure", ""))
            self._next_failure += 1

    def _announce_waypoint_index(self, u: int) -> int:
        if self.heading_hold:
            # ConCov has no waypoint; announce where the current heading leads.
            ahead = self.spacing * self.grid.cell_size
            px = self.x[u] + ahead * math.cos(self.heading[u])
            py = self.y[u] + ahead * math.sin(self.heading[u])
            return self.grid.cell_index(self.grid.cell_of(px, py))
        return self.grid.cell_index(self.wp_cell[u])

    def _exchange_hellos(self, now: float) -> None:
        cfg = self.config
        alive_ids = [u for u in range(cfg.n_uavs) if self.alive[u]]
        if not alive_ids:
            return
        # Compose every message from pre-exchange state, through the codec.
        # The decoded broadcast is identical for every receiver, so each
        # sender yields one shared (immutable) record and patch array.
        patch_buf = np.empty(25, dtype=np.uint8)
        records: dict[int, net_mod.NeighborRecord] = {}
        patches: dict[int, tuple[int, int, np.ndarray]] = {}
        for u in alive_ids:
            kernels.extract_patch(
                self.maps[u], self.pending[u], int(self.cell_x[u]), int(self.cell_y[u]), patch_buf
            )
            qx, qy = net_mod.quantize_position(float(self.x[u]), float(self.y[u]))
            msg = net_mod.HelloMessage(
                uav_id=u,
                x_coarse=qx,
                y_coarse=qy,
                waypoint_index=self._announce_waypoint_index(u),
                patch_levels=tuple(map(int, patch_buf)),
                bs_hops=int(self.own_hops[u]),
            )
            msg = net_mod.decode_hello(net_mod.encode_hello(msg))
            wp_cell = self.grid.cell_from_index(msg.waypoint_index)
            records[u] = net_mod.NeighborRecord(
                id=u,
                x=msg.position[0],
                y=msg.position[1],
                waypoint_cell=wp_cell,
                waypoint_center=self.grid.cell_center(wp_cell),
                bs_hops=msg.bs_hops,
                last_heard=now,
                patch_levels=msg.patch_levels,
            )
            mx, my = self.grid.cell_of(*msg.position)
            patches[u] = (mx, my, np.asarray(msg.patch_levels, dtype=np.uint8))
        pos = np.column_stack((self.x[alive_ids], self.y[alive_ids]))
        delta = pos[:, np.newaxis, :] - pos[np.newaxis, :, :]
        within = np.hypot(delta[..., 0], delta[..., 1]) <= cfg.tx_range_m
        bs_within = np.hypot(pos[:, 0] - self.bs[0], pos[:, 1] - self.bs[1]) <= cfg.tx_range_m
        bs_deg = min(int(bs_within.sum()), 63)
        for i, u in enumerate(alive_ids):
            table = self.tables[u]
            for j, v in enumerate(alive_ids):
                if v != u and within[i, j]:
                    table.observe_record(records[v])
                    mx, my, levels = patches[v]
                    kernels.merge_patch(self.maps[u], mx, my, levels)
            if bs_within[i]:
                table.observe_bs(bs_deg, now)
            table.evict(now)
        for u in alive_ids:
            self.own_hops[u] = net_mod.update_bs_hops(self.tables[u], now)

    def _update_concov_headings(self, now: float) -> None:
        cfg = self.config
        alive_ids = [u for u in range(cfg.n_uavs) if self.alive[u]]
        if not alive_ids:
            return
        # Ground-truth dead reckoning over the sensing period, all nodes at
        # their pre-update headings.
        ts = self.concov_params.sensing_period
        pos = np.empty((len(alive_ids) + 1, 2))
        pos[0] = self.bs
        for i, u in enumerate(alive_ids):
            pos[i + 1, 0] = self.x[u] + cfg.speed_mps * ts * math.cos(self.heading[u])
            pos[i + 1, 1] = self.y[u] + cfg.speed_mps * ts * math.sin(self.heading[u])
        graph = net_mod.build_graph(pos, cfg.tx_range_m)
        connected = met.bs_connected_flags(graph)
        for i, u in enumerate(alive_ids):
            table = self.tables[u]
            table.evict(now)
            neighbors = [(rec.x, rec.y) for rec in table.fresh()]
            routed = table.best_routed_neighbor()
            bearing = None
            if routed is not None:
                bearing = math.atan2(routed.y - self.y[u], routed.x - self.x[u])
            self.heading[u] = concov_heading(
                (float(self.x[u]), float(self.y[u])),
                float(self.heading[u]),
                neighbors,
                bool(connected[i]),
                bearing,
                self.concov_params,
            )

    def _observe(self, u: int, now: float) -> Observation:
        cfg = self.config
        table = self.tables[u]
        table.evict(now)
        own_hops = net_mod.update_bs_hops(table, now)
        cand = candidate_waypoints(
            (int(self.cell_x[u]), int(self.cell_y[u])),
            float(self.heading[u]),
            self.grid,
            self.spacing,
        )
        look = np.ones(5)
        deg = np.zeros(5)
        route = np.zeros(5, dtype=bool)
        dist_rn = np.full(5, math.inf)
        dist_bs_slots = np.full(5, math.inf)
        routed = table.best_routed_neighbor(max_hops=own_hops)
        support = net_mod.route_support_points(table, now, u)
        reach = cfg.tx_range_m * net_mod.SUPPORT_RANGE_MARGIN
        for s in cand.present_slots():
            cell = cand.slots[s]
            center = self.grid.cell_center(cell)
            look[s] = look_ahead_value(self.maps[u], self.pending[u], cell, self.grid)
            deg[s] = net_mod.weighted_degree(center, table, cfg.tx_range_m, now)
            d_bs = math.hypot(center[0] - self.bs[0], center[1] - self.bs[1])
            if d_bs <= reach:
                route[s] = True
            elif len(support):
                d = np.hypot(support[:, 0] - center[0], support[:, 1] - center[1])
                route[s] = bool((d <= reach).any())
            dist_bs_slots[s] = d_bs
            if routed is not None:
                dist_rn[s] = math.hypot(center[0] - routed.x, center[1] - routed.y)
        return Observation(
            candidates=cand,
            look_ahead=look,
            degree=deg,
            route=route,
            dist_routed_neighbor=dist_rn,
            dist_bs_slots=dist_bs_slots,
            dist_bs=math.hypot(self.x[u] - self.bs[0], self.y[u] - self.bs[1]),
            bs_degree=table.bs_degree(now),
            neighbors=table.fresh(),
        )

    def _make_decisions(self, now: float, trace: RunTrace, sink: TransitionSink | None) -> None:
        cfg = self.config
        for u in range(cfg.n_uavs):
            if not self.alive[u]:
                continue
            if self.has_wp[u] and not self.reached[u]:
                continue
            obs = self._observe(u, now)
            slot = self.driver.select(obs, u)
            cell = obs.candidates.slots[slot]
            if sink is not None:
                state = featurize(obs, self.grid.diagonal)
                valid_mask = 0
                for ps in obs.present_slots():
                    valid_mask |= 1 << ps
                prev = self.pending_sa[u]
                if prev is not None:
                    table = self.tables[u]
                    k_arr = net_mod.realized_degree(
                        (float(self.x[u]), float(self.y[u])), table, cfg.tx_range_m, now
                    )
                    route_arr = net_mod.update_bs_hops(table, now) < net_mod.HOPS_UNREACHABLE
                    r = reward(
                        int(self.leg_new[u]), int(self.leg_rev[u]), k_arr, route_arr,
                        self.reward_params,
                    )
                    sink(TrainingTransition(prev[0], prev[1], r, state, False, valid_mask))
                    trace.n_transitions += 1
                    trace.total_reward += r
                self.pending_sa[u] = (state, slot)
            self.wp_cell[u] = cell
            self.wx[u], self.wy[u] = self.grid.cell_center(cell)
            self.has_wp[u] = True
            self.reached[u] = 0
            self.leg_new[u] = 0
            self.leg_rev[u] = 0
            trace.events.append((now, u, "waypoint", f"{cell[0]},{cell[1]}"))

    def _sample_metrics(self, now: float, trace: RunTrace) -> None:
        """10 s snapshot: structural metrics over the UAV-only graph, BS
        reachability over the graph including the BS (node 0)."""
        cfg = self.config
        alive_ids = [u for u in range(cfg.n_uavs) if self.alive[u]]
        pos = np.empty((len(alive_ids) + 1, 2))
        pos[0] = self.bs
        for i, u in enumerate(alive_ids):
            pos[i + 1] = (self.x[u], self.y[u])
        graph = net_mod.build_graph(pos, cfg.tx_range_m)
        uav_graph = net_mod.ConnectivityGraph(adjacency=graph.adjacency[1:, 1:])
        ncc, giant = met.components(uav_graph)
        and_deg = met.avg_node_degree(uav_graph) if alive_ids else 0.0
        connected = met.bs_connected_flags(graph)
        trace.samples.append(
            met.MetricsSample(
                time=now,
                coverage_pct=self.visits.coverage_pct(),
                ncc=ncc,
                and_degree=and_deg,
                giant=giant,
                connected=connected,
            )
        )

    def _motion_tick(self) -> None:
        cfg = self.config
        kernels.motion_tick(
            self.x,
            self.y,
            self.heading,
            self.wx,
            self.wy,
            self.alive,
            self.heading_hold,
            cfg.speed_mps,
            DT,
            MAX_TURN_RATE,
            self.grid.world_width,
            self.grid.world_height,
            self.grid.cell_size,
            self.grid.width,
            self.grid.height,
            self.cell_x,
            self.cell_y,
            self.visits.counts,
            self.pending,
            self.leg_new,
            self.leg_rev,
            self.reached,
        )

    def run(self, transition_sink: TransitionSink | None = None) -> RunTrace:
        cfg = self.config
        trace = RunTrace()
        total_ticks = int(round(cfg.sim_seconds * TICKS_PER_SEC))
        ts_ticks = max(int(round(self.concov_params.sensing_period * TICKS_PER_SEC)), 1)
        k = 0
        while True:
            now = k / TICKS_PER_SEC
            self._apply_failures(k, trace)
            if k % HELLO_TICKS == 0:
                self._exchange_hellos(now)
            if self.heading_hold:
                if k % ts_ticks == 0:
                    self._update_concov_headings(now)
            else:
                self._make_decisions(now, trace, transition_sink)
            if k % METRICS_TICKS == 0:
                self._sample_metrics(now, trace)
            if k >= total_ticks:
                break
            self._motion_tick()
            if (k + 1) % PHEROMONE_TICKS == 0:
                kernels.pheromone_step(
                    self.maps, self.pending, cfg.evaporation, cfg.diffusion, False
                )
            k += 1
        self._summarize(trace)
        return trace

    def _summarize(self, trace: RunTrace) -> None:
        trace.coverage_pct = self.visits.coverage_pct()
        trace.fairness = self.visits.fairness()
        times = [s.time for s in trace.samples]
        covs = [s.coverage_pct for s in trace.samples]
        trace.tc_s = met.coverage_time(times, covs)
        trace.mean_ncc = float(np.mean([s.ncc for s in trace.samples]))
        trace.mean_and = float(np.mean([s.and_degree for s in trace.samples]))
        trace.mean_giant = float(np.mean([s.giant for s in trace.samples]))
        trace.tbs_pct = met.tbs([s.connected for s in trace.samples])


def run_episode(
    config: ScenarioConfig,
    net: QNetwork | None = None,
    transition_sink: TransitionSink | None = None,
    epsilon: float | None = None,
    driver=None,
) -> RunTrace:
    """Run one seeded episode and return its trace."""
    engine = Engine(config, driver=driver, net=net, epsilon=epsilon)
    return engine.run(transition_sink)
