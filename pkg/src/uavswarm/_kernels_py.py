"""Pure-Python kernels: the reference semantics for the hot inner loops.

The compiled twin in _kernels.pyx must stay bit-identical to this module,
which means the same floating-point operations in the same order. Keep scalar
math here on libm functions (math.sin etc.), not vectorized transcendentals,
so both backends round identically.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

TWO_PI = 2.0 * math.pi

# 8-neighbour offsets as (dy, dx); the accumulation order is part of the
# cross-backend contract.
_NEIGHBOR_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def wrap_angle(a: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    a = math.fmod(a, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    return a


def motion_tick(
    x,
    y,
    heading,
    wx,
    wy,
    alive,
    heading_hold,
    speed,
    dt,
    max_turn,
    world_w,
    world_h,
    cell_size,
    grid_w,
    grid_h,
    cell_x,
    cell_y,
    visits,
    pending,
    leg_new,
    leg_rev,
    reached,
):
    """Advance every alive UAV by one kinematic tick.

    Waypoint mode: turn toward the waypoint at most max_turn*dt, advance
    speed*dt along the new heading, clamp to the world box, and flag arrival
    within half a cell of the waypoint center. Heading-hold mode: fly straight
    and reflect off the world boundary. Cell entries update the visit grid,
    the per-UAV pending pheromone deposits, and the per-leg new/revisit
    counters.
    """
    n = x.shape[0]
    step = speed * dt
    turn_cap = max_turn * dt
    half_cell = 0.5 * cell_size
    for u in range(n):
        if not alive[u]:
            continue
        h = float(heading[u])
        px = float(x[u])
        py = float(y[u])
        if heading_hold:
            px += step * math.cos(h)
            py += step * math.sin(h)
            if px < 0.0:
                px = -px
                h = math.pi - h
            elif px > world_w:
                px = 2.0 * world_w - px
                h = math.pi - h
            if py < 0.0:
                py = -py
                h = -h
            elif py > world_h:
                py = 2.0 * world_h - py
                h = -h
            h = wrap_angle(h)
        else:
            bearing = math.atan2(float(wy[u]) - py, float(wx[u]) - px)
            diff = math.fmod(bearing - h + math.pi, TWO_PI)
            if diff < 0.0:
                diff += TWO_PI
            diff -= math.pi
            if diff > turn_cap:
                diff = turn_cap
            elif diff < -turn_cap:
                diff = -turn_cap
            h = wrap_angle(h + diff)
            px += step * math.cos(h)
            py += step * math.sin(h)
            if px < 0.0:
                px = 0.0
            elif px > world_w:
                px = world_w
            if py < 0.0:
                py = 0.0
            elif py > world_h:
                py = world_h
            ddx = float(wx[u]) - px
            ddy = float(wy[u]) - py
            reached[u] = 1 if math.sqrt(ddx * ddx + ddy * ddy) < half_cell else 0
        x[u] = px
        y[u] = py
        heading[u] = h
        cx = int(px / cell_size)
        cy = int(py / cell_size)
        if cx > grid_w - 1:
            cx = grid_w - 1
        if cy > grid_h - 1:
            cy = grid_h - 1
        if cx != cell_x[u] or cy != cell_y[u]:
            if visits[cy, cx] == 0:
                leg_new[u] += 1
            else:
                leg_rev[u] += 1
            visits[cy, cx] += 1
            pending[u, cy, cx] += 1.0
            cell_x[u] = cx
            cell_y[u] = cy


def pheromone_step(maps, pending, evaporation, diffusion, wrap):
    """One synchronous update of stacked pheromone grids (n, h, w).

    new = (1-evaporation) * ((1-diffusion)*old + deposits + diffusion/8 * S)
    where S sums the eight neighbours' old values. In wrap mode the grids are
    toroidal; otherwise mass diffusing off the edge is lost. Values are
    clamped to [0, 1] and pending deposits are cleared.
    """
    one_m_lam = 1.0 - evaporation
    one_m_psi = 1.0 - diffusion
    psi8 = diffusion / 8.0
    s = np.zeros_like(maps)
    if wrap:
        # roll by the negated offset so cell (y, x) accumulates neighbor
        # (y+dy, x+dx), in the same order as the compiled kernel
        for dy, dx in _NEIGHBOR_OFFSETS:
            s += np.roll(maps, (-dy, -dx), axis=(-2, -1))
    else:
        h = maps.shape[-2]
        w = maps.shape[-1]
        for dy, dx in _NEIGHBOR_OFFSETS:
            dst_y = slice(max(0, -dy), h - max(0, dy))
            dst_x = slice(max(0, -dx), w - max(0, dx))
            src_y = slice(max(0, dy), h - max(0, -dy))
            src_x = slice(max(0, dx), w - max(0, -dx))
            s[..., dst_y, dst_x] += maps[..., src_y, src_x]
    new = one_m_psi * maps
    new += pending
    new += psi8 * s
    new *= one_m_lam
    np.clip(new, 0.0, 1.0, out=new)
    maps[...] = new
    pending[...] = 0.0


def look_ahead(grid2d, pending2d, cx, cy, oob_value):
    """Weighted 3x3 average (1/12)*(3*center + block sum); reads overlay
    pending deposits (clamped to 1) and off-grid cells read oob_value."""
    h, w = grid2d.shape
    total = 3.0 * min(float(grid2d[cy, cx]) + float(pending2d[cy, cx]), 1.0)
    for dy in (-1, 0, 1):
        yy = cy + dy
        for dx in (-1, 0, 1):
            xx = cx + dx
            if 0 <= xx < w and 0 <= yy < h:
                total += min(float(grid2d[yy, xx]) + float(pending2d[yy, xx]), 1.0)
            else:
                total += oob_value
    return total / 12.0


def extract_patch(grid2d, pending2d, cx, cy, out_levels):
    """Quantize the 5x5 block centered at (cx, cy) into 6-bit levels.

    Reads see pending deposits immediately (clamped to 1), since a scan
    exists in the field the moment it happens; the update interval only
    schedules decay and diffusion. Off-grid cells encode as level 63 (the
    outside world reads as fully repellent). Levels use round-half-up on
    value*63.
    """
    h, w = grid2d.shape
    k = 0
    for dy in range(-2, 3):
        yy = cy + dy
        for dx in range(-2, 3):
            xx = cx + dx
            if 0 <= yy < h and 0 <= xx < w:
                v = float(grid2d[yy, xx]) + float(pending2d[yy, xx])
                if v > 1.0:
                    v = 1.0
                lvl = int(math.floor(v * 63.0 + 0.5))
                if lvl < 0:
                    lvl = 0
                elif lvl > 63:
                    lvl = 63
            else:
                lvl = 63
            out_levels[k] = lvl
            k += 1


def merge_patch(grid2d, cx, cy, levels):
    """Merge a received 5x5 patch by element-wise max of dequantized levels."""
    h, w = grid2d.shape
    k = 0
    for dy in range(-2, 3):
        yy = cy + dy
        for dx in range(-2, 3):
            xx = cx + dx
            if 0 <= yy < h and 0 <= xx < w:
                v = levels[k] / 63.0
                if v > grid2d[yy, xx]:
                    grid2d[yy, xx] = v
            k += 1
