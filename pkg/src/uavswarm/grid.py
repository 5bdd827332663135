"""Grid geometry shared by the pheromone map, waypoints, and coverage stats."""

from __future__ import annotations

import math
from dataclasses import dataclass

CellCoord = tuple[int, int]


@dataclass(frozen=True)
class GridSpec:
    """A fixed rectangular grid of square cells over the mission area.

    Cell (0, 0) has its lower-left corner at world position (0, 0); x grows
    right, y grows up. Cell coordinates are (x, y).
    """

    width: int
    height: int
    cell_size: float = 100.0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1 or self.cell_size <= 0:
            raise ValueError(f"invalid grid {self.width}x{self.height} @ {self.cell_size}")

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    @property
    def world_width(self) -> float:
        return self.width * self.cell_size

    @property
    def world_height(self) -> float:
        return self.height * self.cell_size

    @property
    def diagonal(self) -> float:
        return math.hypot(self.world_width, self.world_height)

    def in_bounds(self, cell: CellCoord) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def cell_of(self, x: float, y: float) -> CellCoord:
        """Cell containing world position (x, y), clamped to the grid edge."""
        cx = int(x // self.cell_size)
        cy = int(y // self.cell_size)
        cx = min(max(cx, 0), self.width - 1)
        cy = min(max(cy, 0), self.height - 1)
        return (cx, cy)

    def cell_center(self, cell: CellCoord) -> tuple[float, float]:
        return ((cell[0] + 0.5) * self.cell_size, (cell[1] + 0.5) * self.cell_size)

    def cell_index(self, cell: CellCoord) -> int:
        """Row-major scalar index, as carried in hello messages."""
        return cell[1] * self.width + cell[0]

    def cell_from_index(self, index: int) -> CellCoord:
        if not 0 <= index < self.n_cells:
            raise IndexError(f"cell index {index} outside {self.width}x{self.height} grid")
        return (index % self.width, index // self.width)
