# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot inner loops.

Bit-identical twin of _kernels_py: the same floating-point operations in the
same order, on the same libm calls. Any change here must be mirrored there
(tests assert exact agreement).
"""

from libc.math cimport M_PI, atan2, cos, floor, fmod, sin, sqrt

import numpy as np

BACKEND = "compiled"

cdef double TWO_PI = 2.0 * M_PI

cdef int[8] OFF_Y = [-1, -1, -1, 0, 0, 1, 1, 1]
cdef int[8] OFF_X = [-1, 0, 1, -1, 1, -1, 0, 1]


cdef inline double _wrap(double a) noexcept nogil:
    a = fmod(a, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    return a


def wrap_angle(double a):
    """Wrap an angle into [0, 2*pi)."""
    return _wrap(a)


def motion_tick(double[::1] x, double[::1] y, double[::1] heading,
                double[::1] wx, double[::1] wy,
                unsigned char[::1] alive, bint heading_hold,
                double speed, double dt, double max_turn,
                double world_w, double world_h, double cell_size,
                long long grid_w, long long grid_h,
                long long[::1] cell_x, long long[::1] cell_y,
                long long[:, ::1] visits, double[:, :, ::1] pending,
                long long[::1] leg_new, long long[::1] leg_rev,
                unsigned char[::1] reached):
    """Advance every alive UAV by one kinematic tick (see _kernels_py)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef double step = speed * dt
    cdef double turn_cap = max_turn * dt
    cdef double half_cell = 0.5 * cell_size
    cdef Py_ssize_t u
    cdef double h, px, py, bearing, diff, ddx, ddy
    cdef long long cx, cy
    for u in range(n):
        if not alive[u]:
            continue
        h = heading[u]
        px = x[u]
        py = y[u]
        if heading_hold:
            px += step * cos(h)
            py += step * sin(h)
            if px < 0.0:
                px = -px
                h = M_PI - h
            elif px > world_w:
                px = 2.0 * world_w - px
                h = M_PI - h
            if py < 0.0:
                py = -py
                h = -h
            elif py > world_h:
                py = 2.0 * world_h - py
                h = -h
            h = _wrap(h)
        else:
            bearing = atan2(wy[u] - py, wx[u] - px)
            diff = fmod(bearing - h + M_PI, TWO_PI)
            if diff < 0.0:
                diff += TWO_PI
            diff -= M_PI
            if diff > turn_cap:
                diff = turn_cap
            elif diff < -turn_cap:
                diff = -turn_cap
            h = _wrap(h + diff)
            px += step * cos(h)
            py += step * sin(h)
            if px < 0.0:
                px = 0.0
            elif px > world_w:
                px = world_w
            if py < 0.0:
                py = 0.0
            elif py > world_h:
                py = world_h
            ddx = wx[u] - px
            ddy = wy[u] - py
            reached[u] = 1 if sqrt(ddx * ddx + ddy * ddy) < half_cell else 0
        x[u] = px
        y[u] = py
        heading[u] = h
        cx = <long long>(px / cell_size)
        cy = <long long>(py / cell_size)
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


def pheromone_step(double[:, :, ::1] maps, double[:, :, ::1] pending,
                   double evaporation, double diffusion, bint wrap):
    """One synchronous update of stacked pheromone grids (see _kernels_py)."""
    cdef Py_ssize_t n = maps.shape[0]
    cdef Py_ssize_t h = maps.shape[1]
    cdef Py_ssize_t w = maps.shape[2]
    cdef double one_m_lam = 1.0 - evaporation
    cdef double one_m_psi = 1.0 - diffusion
    cdef double psi8 = diffusion / 8.0
    scratch_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] scratch = scratch_arr
    cdef Py_ssize_t i, yy, xx, k, ny, nx
    cdef double s, v
    for i in range(n):
        for yy in range(h):
            for xx in range(w):
                s = 0.0
                for k in range(8):
                    ny = yy + OFF_Y[k]
                    nx = xx + OFF_X[k]
                    if wrap:
                        ny = (ny + h) % h
                        nx = (nx + w) % w
                        s = s + maps[i, ny, nx]
                    elif 0 <= ny < h and 0 <= nx < w:
                        s = s + maps[i, ny, nx]
                v = ((one_m_psi * maps[i, yy, xx] + pending[i, yy, xx]) + psi8 * s) * one_m_lam
                if v < 0.0:
                    v = 0.0
                elif v > 1.0:
                    v = 1.0
                scratch[yy, xx] = v
        for yy in range(h):
            for xx in range(w):
                maps[i, yy, xx] = scratch[yy, xx]
                pending[i, yy, xx] = 0.0


def look_ahead(double[:, ::1] grid2d, double[:, ::1] pending2d,
               long long cx, long long cy, double oob_value):
    """Weighted 3x3 average; see _kernels_py.look_ahead."""
    cdef Py_ssize_t h = grid2d.shape[0]
    cdef Py_ssize_t w = grid2d.shape[1]
    cdef double total, v
    cdef long long dy, dx, yy, xx
    v = grid2d[cy, cx] + pending2d[cy, cx]
    if v > 1.0:
        v = 1.0
    total = 3.0 * v
    for dy in range(-1, 2):
        yy = cy + dy
        for dx in range(-1, 2):
            xx = cx + dx
            if 0 <= xx < w and 0 <= yy < h:
                v = grid2d[yy, xx] + pending2d[yy, xx]
                if v > 1.0:
                    v = 1.0
                total += v
            else:
                total += oob_value
    return total / 12.0


def extract_patch(double[:, ::1] grid2d, double[:, ::1] pending2d,
                  long long cx, long long cy,
                  unsigned char[::1] out_levels):
    """Quantize the 5x5 block centered at (cx, cy) into 6-bit levels.

    Reads see pending deposits immediately (clamped to 1); see _kernels_py.
    """
    cdef Py_ssize_t h = grid2d.shape[0]
    cdef Py_ssize_t w = grid2d.shape[1]
    cdef Py_ssize_t k = 0
    cdef long long dy, dx, yy, xx
    cdef long long lvl
    cdef double v
    for dy in range(-2, 3):
        yy = cy + dy
        for dx in range(-2, 3):
            xx = cx + dx
            if 0 <= yy < h and 0 <= xx < w:
                v = grid2d[yy, xx] + pending2d[yy, xx]
                if v > 1.0:
                    v = 1.0
                lvl = <long long>floor(v * 63.0 + 0.5)
                if lvl < 0:
                    lvl = 0
                elif lvl > 63:
                    lvl = 63
            else:
                lvl = 63
            out_levels[k] = <unsigned char>lvl
            k += 1


def merge_patch(double[:, ::1] grid2d, long long cx, long long cy,
                unsigned char[::1] levels):
    """Merge a received 5x5 patch by element-wise max of dequantized levels."""
    cdef Py_ssize_t h = grid2d.shape[0]
    cdef Py_ssize_t w = grid2d.shape[1]
    cdef Py_ssize_t k = 0
    cdef long long dy, dx, yy, xx
    cdef double v
    for dy in range(-2, 3):
        yy = cy + dy
        for dx in range(-2, 3):
            xx = cx + dx
            if 0 <= yy < h and 0 <= xx < w:
                v = levels[k] / 63.0
                if v > grid2d[yy, xx]:
                    grid2d[yy, xx] = v
            k += 1
