"""Hello-message codec, neighbor tables, hop propagation, and the link graph.

The hello message is a 24-byte broadcast sent every 2 s:

    field       bits   meaning
    uav_id         7   sender id (127 is reserved for the base station)
    x_coarse       9   x position / 10 m, saturated at 511 (5110 m)
    y_coarse       9   y position / 10 m, saturated at 511
    waypoint      12   row-major cell index of the announced next waypoint
    patch        150   25 x 6-bit pheromone levels, 5x5 around the sender
    bs_hops        4   hop count of the sender's route to the BS (15 = none)
    pad            1   zero

Fields are packed big-endian in the order above (first field in the most
significant bits). Links are unit-disk: two nodes hear each other iff their
Euclidean distance is at most the transmission range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from uavswarm.grid import CellCoord, GridSpec

HELLO_SIZE = 24
HELLO_BITS = 192
POSITION_RESOLUTION = 10.0  # m per count
POSITION_MAX_COUNT = 511
MAX_WAYPOINT_INDEX = 3599
HOPS_UNREACHABLE = 15
BS_ID = 127
HELLO_PERIOD = 2.0  # s
STALENESS_BOUND = 5.0  # s; 2.5 hello periods

_FIELD_WIDTHS = (7, 9, 9, 12) + (6,) * 25 + (4,)


class CodecError(ValueError):
    """Raised for malformed hello messages on either codec direction."""


@dataclass(frozen=True)
class HelloMessage:
    """One hello broadcast, fields already in their wire (quantized) form."""

    uav_id: int
    x_coarse: int
    y_coarse: int
    waypoint_index: int
    patch_levels: tuple[int, ...]
    bs_hops: int

    @property
    def position(self) -> tuple[float, float]:
        return (self.x_coarse * POSITION_RESOLUTION, self.y_coarse * POSITION_RESOLUTION)


def quantize_position(x: float, y: float) -> tuple[int, int]:
    """10 m resolution, round-half-up, saturating at the 9-bit limit."""
    qx = int(math.floor(x / POSITION_RESOLUTION + 0.5))
    qy = int(math.floor(y / POSITION_RESOLUTION + 0.5))
    return (min(max(qx, 0), POSITION_MAX_COUNT), min(max(qy, 0), POSITION_MAX_COUNT))


def _field_values(msg: HelloMessage) -> tuple[int, ...]:
    return (msg.uav_id, msg.x_coarse, msg.y_coarse, msg.waypoint_index) + tuple(
        msg.patch_levels
    ) + (msg.bs_hops,)


def encode_hello(msg: HelloMessage) -> bytes:
    """Pack a hello message into its 24-byte wire form."""
    if len(msg.patch_levels) != 25:
        raise CodecError(f"patch needs 25 levels, got {len(msg.patch_levels)}")
    if msg.waypoint_index > MAX_WAYPOINT_INDEX:
        raise CodecError(f"waypoint index {msg.waypoint_index} >= 3600")
    acc = 0
    for value, width in zip(_field_values(msg), _FIELD_WIDTHS):
        if not 0 <= value < (1 << width):
            raise CodecError(f"field value {value} does not fit {width} bits")
        acc = (acc << width) | value
    acc <<= 1  # pad bit
    return acc.to_bytes(HELLO_SIZE, "big")


def decode_hello(data: bytes) -> HelloMessage:
    """Unpack a 24-byte hello; inverse of encode_hello on valid messages."""
    if len(data) != HELLO_SIZE:
        raise CodecError(f"hello must be {HELLO_SIZE} bytes, got {len(data)}")
    acc = int.from_bytes(data, "big")
    if acc & 1:
        raise CodecError("nonzero pad bit")
    acc >>= 1
    values = []
    for width in reversed(_FIELD_WIDTHS):
        values.append(acc & ((1 << width) - 1))
        acc >>= width
    values.reverse()
    uav_id, qx, qy, wp = values[0], values[1], values[2], values[3]
    if wp > MAX_WAYPOINT_INDEX:
        raise CodecError(f"waypoint index {wp} >= 3600")
    return HelloMessage(
        uav_id=uav_id,
        x_coarse=qx,
        y_coarse=qy,
        waypoint_index=wp,
        patch_levels=tuple(values[4:29]),
        bs_hops=values[29],
    )


@dataclass
class NeighborRecord:
    """What one hello taught us about a neighbor."""

    id: int
    x: float
    y: float
    waypoint_cell: CellCoord
    waypoint_center: tuple[float, float]
    bs_hops: int
    last_heard: float
    patch_levels: tuple[int, ...]


@dataclass
class NeighborTable:
    """Per-UAV view of its 1-hop neighborhood, fed by received hellos.

    Entries older than the staleness bound are dropped by evict(); the
    degree/route helpers below assume evict() ran for the current time.
    """

    grid: GridSpec
    bs_position: tuple[float, float]
    staleness: float = STALENESS_BOUND
    records: dict[int, NeighborRecord] = field(default_factory=dict)
    bs_heard_at: float = -math.inf
    bs_degree_raw: int = 0
    _fresh_cache: list[NeighborRecord] | None = field(default=None, repr=False)
    _arrays_cache: tuple | None = field(default=None, repr=False)

    def observe_hello(self, msg: HelloMessage, now: float) -> None:
        if msg.bs_hops == 0:
            # hop 0 is reserved for the base station's own broadcast, which
            # carries the BS node degree in the first patch slot.
            self.observe_bs(msg.patch_levels[0], now)
            return
        px, py = msg.position
        cell = self.grid.cell_from_index(msg.waypoint_index)
        self.observe_record(
            NeighborRecord(
                id=msg.uav_id,
                x=px,
                y=py,
                waypoint_cell=cell,
                waypoint_center=self.grid.cell_center(cell),
                bs_hops=msg.bs_hops,
                last_heard=now,
                patch_levels=msg.patch_levels,
            )
        )

    def observe_record(self, rec: NeighborRecord) -> None:
        """Insert a prebuilt record; records are treated as immutable, so one
        instance may be shared by every receiver of the same broadcast."""
        self.records[rec.id] = rec
        self._fresh_cache = None

    def observe_bs(self, degree: int, now: float) -> None:
        self.bs_heard_at = now
        self.bs_degree_raw = degree

    def evict(self, now: float) -> None:
        dead = [i for i, r in self.records.items() if now - r.last_heard > self.staleness]
        for i in dead:
            del self.records[i]
            self._fresh_cache = None

    def fresh(self) -> list[NeighborRecord]:
        """Records in ascending id order (canonical iteration order)."""
        if self._fresh_cache is None:
            self._fresh_cache = [self.records[i] for i in sorted(self.records)]
            self._arrays_cache = None
        return self._fresh_cache

    def arrays(self):
        """(ids, positions (n,2), waypoint centers (n,2), hops) as arrays."""
        self.fresh()
        if self._arrays_cache is None:
            recs = self._fresh_cache
            n = len(recs)
            ids = np.empty(n, dtype=np.int64)
            pos = np.empty((n, 2))
            wp = np.empty((n, 2))
            hops = np.empty(n, dtype=np.int64)
            for i, r in enumerate(recs):
                ids[i] = r.id
                pos[i, 0] = r.x
                pos[i, 1] = r.y
                wp[i, 0] = r.waypoint_center[0]
                wp[i, 1] = r.waypoint_center[1]
                hops[i] = r.bs_hops
            self._arrays_cache = (ids, pos, wp, hops)
        return self._arrays_cache

    def bs_direct(self, now: float) -> bool:
        return now - self.bs_heard_at <= self.staleness

    def bs_degree(self, now: float) -> int:
        return self.bs_degree_raw if self.bs_direct(now) else 0

    def best_routed_neighbor(self, max_hops: int = HOPS_UNREACHABLE) -> NeighborRecord | None:
        """The neighbor advertising the shortest live route to the BS.

        Restricting max_hops to the UAV's own estimate keeps a saturating
        (count-to-infinity) neighborhood from being chased as if it still
        had a route.
        """
        best = None
        for rec in self.fresh():
            if rec.bs_hops < max_hops and (best is None or rec.bs_hops < best.bs_hops):
                best = rec
        return best


def gamma(distance: float, tx_range: float) -> float:
    """Distance-weighted connectivity of one link."""
    if distance <= 0.6 * tx_range:
        return 1.0
    if distance <= tx_range:
        return 2.5 * (1.0 - distance / tx_range)
    return 0.0


def _gamma_sum(dists: np.ndarray, tx_range: float) -> float:
    close = dists <= 0.6 * tx_range
    mid = ~close & (dists <= tx_range)
    return float(close.sum()) + float((2.5 * (1.0 - dists[mid] / tx_range)).sum())


def weighted_degree(
    point: tuple[float, float], table: NeighborTable, tx_range: float, now: float
) -> float:
    """Predicted distance-weighted node degree at a candidate point.

    Each fresh neighbor is assumed to sit at its announced next waypoint; the
    BS counts as a neighbor at its fixed position while in direct contact.
    """
    _ids, _pos, wp, _hops = table.arrays()
    k = _gamma_sum(np.hypot(wp[:, 0] - point[0], wp[:, 1] - point[1]), tx_range) if len(wp) else 0.0
    if table.bs_direct(now):
        k += gamma(math.hypot(point[0] - table.bs_position[0], point[1] - table.bs_position[1]), tx_range)
    return k


SUPPORT_RANGE_MARGIN = 0.92


def route_support_points(
    table: NeighborTable, now: float, uav_id: int
) -> np.ndarray:
    """Announced waypoints of the neighbors this UAV may lean on for a route:
    strictly fewer hops than its own estimate, or equal hops with a lower id
    (the acyclic support order; see route_available_at)."""
    own = update_bs_hops(table, now)
    ids, _pos, wp, hops = table.arrays()
    if len(ids) == 0:
        return wp[:0]
    ahead = (hops < HOPS_UNREACHABLE) & ((hops < own) | ((hops == own) & (ids < uav_id)))
    return wp[ahead]


def route_available_at(
    point: tuple[float, float],
    table: NeighborTable,
    tx_range: float,
    now: float,
    uav_id: int,
) -> bool:
    """Will a BS route exist from this point, as far as the UAV can predict?

    True if the BS itself is in range of the point, or a fresh neighbor
    *ahead of this UAV in (hops, id) order* announced a next waypoint within
    range of it. Links are only trusted up to a fraction of the transmission
    range (SUPPORT_RANGE_MARGIN) so a one-hello-period of relative motion
    cannot silently break a predicted link.

    The (hops, id) ordering makes the support relation acyclic and grounds
    every support chain at the BS: without it, two peers can keep vouching
    for each other's route while the swarm collectively walks away from the
    BS, because every hop estimate transitively rests on the very UAV that
    is about to leave. Allowing equal-hop support (id-ordered) avoids the
    opposite failure, where every BS-adjacent UAV is pinned inside the BS
    disc forever.
    """
    reach = tx_range * SUPPORT_RANGE_MARGIN
    if math.hypot(point[0] - table.bs_position[0], point[1] - table.bs_position[1]) <= reach:
        return True
    support = route_support_points(table, now, uav_id)
    if len(support) == 0:
        return False
    d = np.hypot(support[:, 0] - point[0], support[:, 1] - point[1])
    return bool((d <= reach).any())


def realized_degree(
    point: tuple[float, float], table: NeighborTable, tx_range: float, now: float
) -> float:
    """Distance-weighted degree at a point using neighbors' reported positions
    (rather than their announced waypoints); used at waypoint arrival."""
    _ids, pos, _wp, _hops = table.arrays()
    k = _gamma_sum(np.hypot(pos[:, 0] - point[0], pos[:, 1] - point[1]), tx_range) if len(pos) else 0.0
    if table.bs_direct(now):
        k += gamma(math.hypot(point[0] - table.bs_position[0], point[1] - table.bs_position[1]), tx_range)
    return k


def update_bs_hops(table: NeighborTable, now: float) -> int:
    """Distance-vector hop estimate: 1 if the BS is heard directly, else
    1 + min of the neighbors' advertised hops, saturated at 15 (no route)."""
    if table.bs_direct(now):
        return 1
    _ids, _pos, _wp, hops = table.arrays()
    if len(hops) == 0:
        return HOPS_UNREACHABLE
    return min(int(hops.min()) + 1, HOPS_UNREACHABLE)


@dataclass(frozen=True)
class ConnectivityGraph:
    """Undirected unit-disk graph; by convention node 0 is the base station."""

    adjacency: np.ndarray  # (n, n) bool, symmetric, zero diagonal

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    def degree(self, node: int) -> int:
        return int(self.adjacency[node].sum())


def build_graph(positions: np.ndarray, tx_range: float) -> ConnectivityGraph:
    """Edges between every pair of nodes within tx_range of each other."""
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise ValueError("positions must be an (n, 2) array")
    delta = pos[:, np.newaxis, :] - pos[np.newaxis, :, :]
    dist = np.hypot(delta[..., 0], delta[..., 1])
    adj = dist <= tx_range
    np.fill_diagonal(adj, False)
    return ConnectivityGraph(adjacency=adj)
