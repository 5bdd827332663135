"""Fixed-wing UAV pose, heading sectors, candidate waypoints, and motion.

Headings are radians in [0, 2*pi), measured counterclockwise from +x.
Sector 0 is the +x axis; sectors advance counterclockwise in 45-degree steps.
Waypoints sit two cells away along the eight compass directions; of those, a
UAV may only pick the five "forward-facing" ones (its own sector plus two to
either side).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from uavswarm._kernels_py import wrap_angle
from uavswarm.grid import CellCoord, GridSpec

N_SECTORS = 8
N_SLOTS = 5
WAYPOINT_SPACING_CELLS = 2  # default spacing; the engine scales it with speed
LEG_TARGET_SECONDS = 5.0
MAX_TURN_RATE = math.radians(30.0)  # rad/s; turn radius 38 m at 20 m/s
KINEMATIC_DT = 0.1  # s

# Unit (dx, dy) cell offsets per sector; waypoints sit spacing * offset away.
SECTOR_OFFSETS: tuple[CellCoord, ...] = (
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
)


def waypoint_spacing(speed: float, cell_size: float) -> int:
    """Cells between consecutive waypoints, scaled so a leg lasts ~5 s.

    The waypoint distance grows with UAV speed (one cell at 20 m/s, two at
    40 m/s on the 100 m grid), keeping the decision rate roughly constant
    and the scanned trail contiguous.
    """
    return max(1, int(round(speed * LEG_TARGET_SECONDS / cell_size)))

# Slot order: hard-left, soft-left, straight, soft-right, hard-right.
SLOT_TURNS = (2, 1, 0, -1, -2)
STRAIGHT_SLOT = 2


def discretize_heading(heading: float) -> int:
    """Nearest of 8 compass sectors, round-half-up at sector boundaries."""
    h = wrap_angle(heading)
    return int(math.floor(h / (math.pi / 4.0) + 0.5)) % N_SECTORS


@dataclass(frozen=True)
class CandidateSet:
    """Up to five forward-facing waypoint cells in turn-angle order.

    slots[i] is None where the 2-cell offset left the grid. In the degenerate
    corner case where all five forward cells are clipped, the slots are
    refilled with whatever compass offsets remain in bounds, nearest-to-
    straight first (left preferred on ties).
    """

    sector: int
    slots: tuple[CellCoord | None, ...]

    @property
    def cells(self) -> list[CellCoord]:
        return [c for c in self.slots if c is not None]

    def present_slots(self) -> list[int]:
        return [i for i, c in enumerate(self.slots) if c is not None]


def _signed_sector_diff(sector: int, base: int) -> int:
    """Sector difference in {-4..3}, positive meaning left of base."""
    return (sector - base + 4) % N_SECTORS - 4


def candidate_waypoints(
    cell: CellCoord,
    heading: float,
    grid: GridSpec,
    spacing: int = WAYPOINT_SPACING_CELLS,
) -> CandidateSet:
    """The five forward-facing waypoint cells, clipped to the grid."""
    s = discretize_heading(heading)
    slots: list[CellCoord | None] = []
    for turn in SLOT_TURNS:
        dx, dy = SECTOR_OFFSETS[(s + turn) % N_SECTORS]
        cand = (cell[0] + spacing * dx, cell[1] + spacing * dy)
        slots.append(cand if grid.in_bounds(cand) else None)
    if all(c is None for c in slots):
        # Outward-facing corner: fall back to any in-bounds compass offset.
        order = sorted(
            range(N_SECTORS),
            key=lambda sec: (abs(_signed_sector_diff(sec, s)), -_signed_sector_diff(sec, s)),
        )
        refill: list[CellCoord | None] = []
        for sec in order:
            dx, dy = SECTOR_OFFSETS[sec]
            cand = (cell[0] + spacing * dx, cell[1] + spacing * dy)
            if grid.in_bounds(cand):
                refill.append(cand)
        refill = refill[:N_SLOTS]
        refill += [None] * (N_SLOTS - len(refill))
        slots = refill
    return CandidateSet(sector=s, slots=tuple(slots))


@dataclass(frozen=True)
class UavState:
    """Pose of one UAV. id must fit 7 bits (hello message constraint)."""

    id: int
    x: float
    y: float
    heading: float
    speed: float
    waypoint: CellCoord | None = None
    alive: bool = True

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


def step_motion(
    state: UavState,
    grid: GridSpec,
    dt: float = KINEMATIC_DT,
    max_turn_rate: float = MAX_TURN_RATE,
) -> UavState:
    """Turn toward the waypoint (rate-limited) and advance speed*dt.

    Single-UAV reference implementation; the engine runs the same math
    through the batched kernel.
    """
    if state.waypoint is None:
        raise ValueError("step_motion requires a waypoint")
    wx, wy = grid.cell_center(state.waypoint)
    h = state.heading
    bearing = math.atan2(wy - state.y, wx - state.x)
    diff = math.fmod(bearing - h + math.pi, 2.0 * math.pi)
    if diff < 0.0:
        diff += 2.0 * math.pi
    diff -= math.pi
    cap = max_turn_rate * dt
    if diff > cap:
        diff = cap
    elif diff < -cap:
        diff = -cap
    h = wrap_angle(h + diff)
    px = state.x + state.speed * dt * math.cos(h)
    py = state.y + state.speed * dt * math.sin(h)
    px = min(max(px, 0.0), grid.world_width)
    py = min(max(py, 0.0), grid.world_height)
    return replace(state, x=px, y=py, heading=h)


def reached(state: UavState, grid: GridSpec) -> bool:
    """True once within half a cell of the waypoint center."""
    if state.waypoint is None:
        raise ValueError("reached requires a waypoint")
    wx, wy = grid.cell_center(state.waypoint)
    return math.hypot(state.x - wx, state.y - wy) < 0.5 * grid.cell_size
