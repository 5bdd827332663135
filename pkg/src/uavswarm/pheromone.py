"""Repel-pheromone field: deposit, evaporation/diffusion, look-ahead, patches.

Each cell holds a scalar in [0, 1]. Deposits are readable the moment they
happen (a scanned cell is immediately marked in the scanner's map); they
accumulate in a pending buffer that the next step() folds into the settled
field with the update

    p <- (1 - evaporation) * ((1 - diffusion) * p + deposits + inflow)

where inflow is diffusion/8 times the sum of the eight neighbours' previous
settled values. The step runs once per update interval (12 s of simulated
time in the engine) and clamps to [0, 1]; reads between steps overlay the
pending deposits, clamped to 1.

Boundary modes: "absorbing" (default) loses diffusion mass over the edge and
treats out-of-grid *reads* (look-ahead, patch extraction) as 1.0, i.e. the
world outside the mission area looks permanently visited; "wrap" closes the
grid into a torus and exists for mass-conservation checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO

import numpy as np

from uavswarm.backend import kernels
from uavswarm.grid import CellCoord, GridSpec

PATCH_SIDE = 5
PATCH_CELLS = PATCH_SIDE * PATCH_SIDE
LEVEL_MAX = 63
OUT_OF_BOUNDS_VALUE = 1.0
UPDATE_INTERVAL = 12.0  # s between decay/diffusion steps


def quantize(value: float) -> int:
    """Uniform 6-bit quantization of a value in [0, 1], round-half-up.

    Out-of-range inputs are clamped, not rejected.
    """
    if value < 0.0:
        value = 0.0
    elif value > 1.0:
        value = 1.0
    return int(math.floor(value * 63.0 + 0.5))


def dequantize(level: int) -> float:
    if not 0 <= level <= LEVEL_MAX:
        raise ValueError(f"level {level} outside 0..{LEVEL_MAX}")
    return level / 63.0


def look_ahead_value(
    values: np.ndarray, pending: np.ndarray, cell: CellCoord, grid: GridSpec
) -> float:
    """Look-ahead pheromone on raw arrays with absorbing boundary reads.

    Same weighting as PheromoneMap.look_ahead: (1/12)*(3*center + 3x3 sum),
    out-of-grid cells reading as 1.0 and pending deposits visible (clamped).
    """
    return kernels.look_ahead(values, pending, cell[0], cell[1], OUT_OF_BOUNDS_VALUE)


@dataclass(frozen=True)
class PheromonePatch:
    """A quantized 5x5 block of the field, centered at center_cell."""

    center_cell: CellCoord
    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.levels) != PATCH_CELLS:
            raise ValueError(f"patch needs {PATCH_CELLS} levels, got {len(self.levels)}")
        if any(not 0 <= v <= LEVEL_MAX for v in self.levels):
            raise ValueError("patch level outside 0..63")


class PheromoneMap:
    """Dense pheromone grid with pending-deposit accumulation.

    Single-writer: the simulation engine mutates the map once per update
    interval; look_ahead and extract_patch are read-only.
    """

    def __init__(
        self,
        grid: GridSpec,
        evaporation: float = 0.006,
        diffusion: float = 0.006,
        boundary: str = "absorbing",
    ) -> None:
        if not 0.0 <= evaporation <= 1.0 or not 0.0 <= diffusion <= 1.0:
            raise ValueError("evaporation and diffusion rates must lie in [0, 1]")
        if boundary not in ("absorbing", "wrap"):
            raise ValueError(f"unknown boundary mode {boundary!r}")
        self.grid = grid
        self.evaporation = evaporation
        self.diffusion = diffusion
        self.boundary = boundary
        # Row-major [y][x] to match world coordinates.
        self.values = np.zeros((grid.height, grid.width), dtype=np.float64)
        self.pending = np.zeros_like(self.values)

    def _check(self, cell: CellCoord) -> None:
        if not self.grid.in_bounds(cell):
            raise IndexError(f"cell {cell} outside {self.grid.width}x{self.grid.height} grid")

    def deposit(self, cell: CellCoord) -> None:
        """Queue a unit deposit; it takes effect at the next step()."""
        self._check(cell)
        self.pending[cell[1], cell[0]] += 1.0

    def step(self) -> None:
        kernels.pheromone_step(
            self.values[np.newaxis],
            self.pending[np.newaxis],
            self.evaporation,
            self.diffusion,
            self.boundary == "wrap",
        )

    def value(self, cell: CellCoord) -> float:
        """Current readable value: settled field plus pending deposits."""
        self._check(cell)
        return min(float(self.values[cell[1], cell[0]]) + float(self.pending[cell[1], cell[0]]), 1.0)

    def _read(self, x: int, y: int) -> float:
        """Read a cell, mapping out-of-grid coordinates per boundary mode."""
        if self.boundary == "wrap":
            x %= self.grid.width
            y %= self.grid.height
        elif not (0 <= x < self.grid.width and 0 <= y < self.grid.height):
            return OUT_OF_BOUNDS_VALUE
        return min(float(self.values[y, x]) + float(self.pending[y, x]), 1.0)

    def look_ahead(self, cell: CellCoord) -> float:
        """Weighted average (1/12)*(3*center + sum of the 3x3 block)."""
        self._check(cell)
        cx, cy = cell
        total = 3.0 * self._read(cx, cy)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                total += self._read(cx + dx, cy + dy)
        return total / 12.0

    def extract_patch(self, center: CellCoord) -> PheromonePatch:
        self._check(center)
        levels = np.empty(PATCH_CELLS, dtype=np.uint8)
        kernels.extract_patch(self.values, self.pending, center[0], center[1], levels)
        return PheromonePatch(center, tuple(int(v) for v in levels))

    def merge_patch(self, patch: PheromonePatch) -> None:
        """Element-wise max of local values and the dequantized patch.

        Patch cells outside the grid are ignored, so a patch centered near
        (or beyond) the edge only touches the in-bounds overlap.
        """
        levels = np.asarray(patch.levels, dtype=np.uint8)
        kernels.merge_patch(self.values, patch.center_cell[0], patch.center_cell[1], levels)

    def total(self) -> float:
        return float(self.values.sum())

    def dump_csv(self, stream: IO[str]) -> None:
        """Debug dump: one grid row per line, 6 decimal places, row-major."""
        for row in self.values:
            stream.write(",".join(f"{v:.6f}" for v in row))
            stream.write("\n")
