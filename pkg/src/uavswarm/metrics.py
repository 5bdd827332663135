"""Coverage and connectivity statistics over ground-truth simulation state.

Graph metrics are sampled every 10 s. Component counts, the giant component,
and the average node degree describe the UAV-only unit-disk graph; the
BS-connected time asks, per UAV, whether a multihop path to the base station
exists in the graph that includes it. Coverage statistics come from per-cell
visit counters.

CSV schemas (fixed column names, used by the run and sweep writers):

    per-run samples: time_s, coverage_pct, ncc, and, giant, tbs_instant_pct
    per-run summary: policy, beta, beta_prime, omega, reward_n, n_uavs,
        speed_mps, failure_pct, seed, coverage_pct, tc_s, fairness, mean_ncc,
        mean_and, tbs_pct, mean_giant          (tc_s empty when 90% coverage
        was never reached; such runs are counted as censored in aggregates)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from uavswarm.grid import CellCoord, GridSpec
from uavswarm.network import ConnectivityGraph

METRICS_PERIOD = 10.0  # s
COVERAGE_TARGET_PCT = 90.0

SAMPLE_COLUMNS = ("time_s", "coverage_pct", "ncc", "and", "giant", "tbs_instant_pct")
RUN_COLUMNS = (
    "policy",
    "beta",
    "beta_prime",
    "omega",
    "reward_n",
    "n_uavs",
    "speed_mps",
    "failure_pct",
    "seed",
    "coverage_pct",
    "tc_s",
    "fairness",
    "mean_ncc",
    "mean_and",
    "tbs_pct",
    "mean_giant",
)


class VisitGrid:
    """Per-cell visit counters; monotone over a run."""

    def __init__(self, grid: GridSpec) -> None:
        self.grid = grid
        self.counts = np.zeros((grid.height, grid.width), dtype=np.int64)

    def visit(self, cell: CellCoord) -> None:
        self.counts[cell[1], cell[0]] += 1

    def coverage_pct(self) -> float:
        return 100.0 * float(np.count_nonzero(self.counts)) / self.grid.n_cells

    def fairness(self) -> float | None:
        """Jain's fairness index of the visit counts; None on an all-zero grid."""
        total = float(self.counts.sum())
        if total == 0.0:
            return None
        sq = float((self.counts.astype(np.float64) ** 2).sum())
        return total * total / (self.grid.n_cells * sq)


def coverage(grid: VisitGrid) -> float:
    return grid.coverage_pct()


def fairness(grid: VisitGrid) -> float | None:
    return grid.fairness()


def coverage_time(times: list[float], coverages: list[float]) -> float | None:
    """First sample time at or above the 90% target; None if never reached."""
    for t, c in zip(times, coverages):
        if c >= COVERAGE_TARGET_PCT:
            return t
    return None


def components(graph: ConnectivityGraph) -> tuple[int, int]:
    """(number of connected components, size of the largest one)."""
    n = graph.n_nodes
    if n == 0:
        return (0, 0)
    adj = graph.adjacency
    seen = np.zeros(n, dtype=bool)
    ncc = 0
    giant = 0
    for start in range(n):
        if seen[start]:
            continue
        ncc += 1
        stack = [start]
        seen[start] = True
        size = 0
        while stack:
            node = stack.pop()
            size += 1
            for nbr in np.flatnonzero(adj[node]):
                if not seen[nbr]:
                    seen[nbr] = True
                    stack.append(int(nbr))
        giant = max(giant, size)
    return (ncc, giant)


def avg_node_degree(graph: ConnectivityGraph) -> float:
    """Mean node degree of the given graph.

    The engine samples this on the UAV-only graph: the average counts UAV
    links among themselves, while BS reachability is reported separately
    through the connected-time statistic.
    """
    if graph.n_nodes < 1:
        raise ValueError("need at least one node")
    return float(graph.adjacency.sum()) / graph.n_nodes


def bs_connected_flags(graph: ConnectivityGraph) -> np.ndarray:
    """Per-UAV flags: in the same component as the BS (node 0)?"""
    n = graph.n_nodes
    reach = np.zeros(n, dtype=bool)
    reach[0] = True
    stack = [0]
    while stack:
        node = stack.pop()
        for nbr in np.flatnonzero(graph.adjacency[node]):
            if not reach[nbr]:
                reach[nbr] = True
                stack.append(int(nbr))
    return reach[1:]


def tbs(connected_samples: list[np.ndarray]) -> float:
    """Percentage of (UAV, sample) pairs connected to the BS.

    Each entry holds the flags of the UAVs alive at that sample; failed UAVs
    simply stop contributing pairs after their failure time.
    """
    total = sum(len(f) for f in connected_samples)
    if total == 0:
        return 0.0
    connected = sum(int(f.sum()) for f in connected_samples)
    return 100.0 * connected / total


@dataclass(frozen=True)
class MetricsSample:
    """One 10 s snapshot of the swarm's coverage and connectivity."""

    time: float
    coverage_pct: float
    ncc: int
    and_degree: float
    giant: int
    connected: np.ndarray  # per-alive-UAV BS-connectivity flags

    @property
    def tbs_instant_pct(self) -> float:
        if len(self.connected) == 0:
            return 0.0
        return 100.0 * float(self.connected.sum()) / len(self.connected)
