"""Hot numeric kernels: grid raycasting, footprint collision, rollout evaluation.

All functions take flat scalar/array arguments so they compile under numba's
nopython mode. Grids are uint8 arrays indexed ``cells[iy, ix]`` with nonzero
meaning occupied; world coordinates map to cells via resolution and origin
(origin = world position of the lower-left corner of cell (0, 0)).
"""

import math

import numpy as np

from .accel import njit


@njit
def cast_ray(cells, resolution, origin_x, origin_y, sx, sy, angle, max_range):
    """Distance from (sx, sy) along `angle` to the first occupied cell.

    Amanatides-Woo traversal. Returns max_range when nothing is hit within
    range or the ray leaves the grid.
    """
    height, width = cells.shape
    dx = math.cos(angle)
    dy = math.sin(angle)

    gx = (sx - origin_x) / resolution
    gy = (sy - origin_y) / resolution
    ix = int(math.floor(gx))
    iy = int(math.floor(gy))
    if ix < 0 or ix >= width or iy < 0 or iy >= height:
        return max_range

    step_x = 1 if dx > 0.0 else -1
    step_y = 1 if dy > 0.0 else -1
    # Distance (meters) to the next vertical / horizontal cell boundary.
    if dx > 0.0:
        t_max_x = ((ix + 1) - gx) * resolution / dx
        t_delta_x = resolution / dx
    elif dx < 0.0:
        t_max_x = (gx - ix) * resolution / -dx
        t_delta_x = resolution / -dx
    else:
        t_max_x = np.inf
        t_delta_x = np.inf
    if dy > 0.0:
        t_max_y = ((iy + 1) - gy) * resolution / dy
        t_delta_y = resolution / dy
    elif dy < 0.0:
        t_max_y = (gy - iy) * resolution / -dy
        t_delta_y = resolution / -dy
    else:
        t_max_y = np.inf
        t_delta_y = np.inf

    t = 0.0
    while t <= max_range:
        if cells[iy, ix] != 0:
            if t <= 0.0:
                return min(resolution * 1e-3, max_range)
            return min(t, max_range)
        if t_max_x < t_max_y:
            t = t_max_x
            t_max_x += t_delta_x
            ix += step_x
        else:
            t = t_max_y
            t_max_y += t_delta_y
            iy += step_y
        if ix < 0 or ix >= width or iy < 0 or iy >= height:
            return max_range
    return max_range


@njit
def cast_rays(cells, resolution, origin_x, origin_y, sx, sy, angles, max_range, out):
    for i in range(angles.shape[0]):
        out[i] = cast_ray(cells, resolution, origin_x, origin_y, sx, sy, angles[i], max_range)


@njit
def cast_ray_mark(cells, known, resolution, origin_x, origin_y, sx, sy, angle, max_range):
    """Like cast_ray, but records traversal into `known`.

    Cells crossed before the hit are marked 1 (seen free), the hit cell is
    marked 2 (seen occupied). `known` has the same shape as `cells`.
    """
    height, width = cells.shape
    dx = math.cos(angle)
    dy = math.sin(angle)
    gx = (sx - origin_x) / resolution
    gy = (sy - origin_y) / resolution
    ix = int(math.floor(gx))
    iy = int(math.floor(gy))
    if ix < 0 or ix >= width or iy < 0 or iy >= height:
        return max_range

    step_x = 1 if dx > 0.0 else -1
    step_y = 1 if dy > 0.0 else -1
    if dx > 0.0:
        t_max_x = ((ix + 1) - gx) * resolution / dx
        t_delta_x = resolution / dx
    elif dx < 0.0:
        t_max_x = (gx - ix) * resolution / -dx
        t_delta_x = resolution / -dx
    else:
        t_max_x = np.inf
        t_delta_x = np.inf
    if dy > 0.0:
        t_max_y = ((iy + 1) - gy) * resolution / dy
        t_delta_y = resolution / dy
    elif dy < 0.0:
        t_max_y = (gy - iy) * resolution / -dy
        t_delta_y = resolution / -dy
    else:
        t_max_y = np.inf
        t_delta_y = np.inf

    t = 0.0
    while t <= max_range:
        if cells[iy, ix] != 0:
            known[iy, ix] = 2
            if t <= 0.0:
                return min(resolution * 1e-3, max_range)
            return min(t, max_range)
        if known[iy, ix] == 0:
            known[iy, ix] = 1
        if t_max_x < t_max_y:
            t = t_max_x
            t_max_x += t_delta_x
            ix += step_x
        else:
            t = t_max_y
            t_max_y += t_delta_y
            iy += step_y
        if ix < 0 or ix >= width or iy < 0 or iy >= height:
            return max_range
    return max_range


@njit
def footprint_collides(cells, resolution, origin_x, origin_y,
                       x, y, theta, half_length, half_width, center_offset):
    """True if the rotated footprint rectangle covers any occupied cell center.

    (x, y) is the rear-axle midpoint; the rectangle center sits
    `center_offset` ahead of it along the heading. A pose whose reference
    point lies outside the grid counts as a collision.
    """
    height, width = cells.shape
    gx = (x - origin_x) / resolution
    gy = (y - origin_y) / resolution
    if gx < 0.0 or gx >= width or gy < 0.0 or gy >= height:
        return True

    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    cx = x + center_offset * cos_t
    cy = y + center_offset * sin_t
    radius = math.sqrt(half_length * half_length + half_width * half_width)

    ix_lo = int(math.floor((cx - radius - origin_x) / resolution))
    ix_hi = int(math.floor((cx + radius - origin_x) / resolution))
    iy_lo = int(math.floor((cy - radius - origin_y) / resolution))
    iy_hi = int(math.floor((cy + radius - origin_y) / resolution))

    for iy in range(iy_lo, iy_hi + 1):
        for ix in range(ix_lo, ix_hi + 1):
            if ix < 0 or ix >= width or iy < 0 or iy >= height:
                continue
            if cells[iy, ix] == 0:
                continue
            px = origin_x + (ix + 0.5) * resolution - cx
            py = origin_y + (iy + 0.5) * resolution - cy
            # Into the body frame.
            bx = cos_t * px + sin_t * py
            by = -sin_t * px + cos_t * py
            if abs(bx) <= half_length and abs(by) <= half_width:
                return True
    return False


@njit
def _rk4_advance(x, y, theta, v, phi, wheelbase, dt):
    tan_phi = math.tan(phi)

    k1x = math.cos(theta) * v
    k1y = math.sin(theta) * v
    k1t = v / wheelbase * tan_phi

    t2 = theta + 0.5 * dt * k1t
    k2x = math.cos(t2) * v
    k2y = math.sin(t2) * v
    k2t = k1t

    t3 = theta + 0.5 * dt * k2t
    k3x = math.cos(t3) * v
    k3y = math.sin(t3) * v
    k3t = k1t

    t4 = theta + dt * k3t
    k4x = math.cos(t4) * v
    k4y = math.sin(t4) * v
    k4t = k1t

    nx = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    ny = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    nt = theta + dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
    # Normalize to (-pi, pi].
    nt = (nt + math.pi) % (2.0 * math.pi)
    if nt <= 0.0:
        nt += 2.0 * math.pi
    return nx, ny, nt - math.pi


@njit
def evaluate_rollout(cells, resolution, origin_x, origin_y,
                     x, y, theta, v, phi, wheelbase, dt, n_steps,
                     half_length, half_width, center_offset,
                     clearance_angles, clearance_range):
    """Roll a constant (v, phi) forward and score it.

    Returns (collided, min_clearance, end_x, end_y, end_theta). Clearance is
    the minimum free ray distance over all rollout poses, capped at
    clearance_range; it is only meaningful when collided is False.
    """
    min_clear = clearance_range
    for _ in range(n_steps):
        x, y, theta = _rk4_advance(x, y, theta, v, phi, wheelbase, dt)
        if footprint_collides(cells, resolution, origin_x, origin_y,
                              x, y, theta, half_length, half_width, center_offset):
            return True, 0.0, x, y, theta
        for k in range(clearance_angles.shape[0]):
            r = cast_ray(cells, resolution, origin_x, origin_y,
                         x, y, theta + clearance_angles[k], clearance_range)
            if r < min_clear:
                min_clear = r
    return False, min_clear, x, y, theta
