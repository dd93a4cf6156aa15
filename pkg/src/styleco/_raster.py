"""Numba kernels for depth buffering and anti-aliased line drawing."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def depth_buffer(xy, z, faces, width, height):
    """Rasterize triangles into a buffer of normalized depth (inf = empty).

    ``xy`` are buffer-space coordinates, ``z`` normalized depths. Depth is
    interpolated linearly in 1/z-like screen space by the caller supplying
    ``z`` already as a screen-linear quantity.
    """
    buf = np.full((height, width), np.inf)
    for f in range(faces.shape[0]):
        a = faces[f, 0]
        b = faces[f, 1]
        c = faces[f, 2]
        x0, y0, z0 = xy[a, 0], xy[a, 1], z[a]
        x1, y1, z1 = xy[b, 0], xy[b, 1], z[b]
        x2, y2, z2 = xy[c, 0], xy[c, 1], z[c]
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if area == 0.0 or not math.isfinite(area):
            continue
        xmin = max(int(math.floor(min(x0, x1, x2) - 0.5)), 0)
        xmax = min(int(math.ceil(max(x0, x1, x2) - 0.5)), width - 1)
        ymin = max(int(math.floor(min(y0, y1, y2) - 0.5)), 0)
        ymax = min(int(math.ceil(max(y0, y1, y2) - 0.5)), height - 1)
        inv = 1.0 / area
        for py in range(ymin, ymax + 1):
            cy = py + 0.5
            for px in range(xmin, xmax + 1):
                cx = px + 0.5
                w0 = ((x1 - cx) * (y2 - cy) - (x2 - cx) * (y1 - cy)) * inv
                w1 = ((x2 - cx) * (y0 - cy) - (x0 - cx) * (y2 - cy)) * inv
                w2 = 1.0 - w0 - w1
                if w0 < -1e-9 or w1 < -1e-9 or w2 < -1e-9:
                    continue
                d = w0 * z0 + w1 * z1 + w2 * z2
                if d < buf[py, px]:
                    buf[py, px] = d
    return buf


@njit(cache=True)
def _conservative_depth(buf, bx, by):
    # max depth over the 3x3 neighbourhood of a buffer sample
    h, w = buf.shape
    ix = int(math.floor(bx))
    iy = int(math.floor(by))
    best = -np.inf
    for dy in range(-1, 2):
        yy = iy + dy
        if yy < 0 or yy >= h:
            continue
        for dx in range(-1, 2):
            xx = ix + dx
            if xx < 0 or xx >= w:
                continue
            v = buf[yy, xx]
            if v > best:
                best = v
    return best


@njit(cache=True)
def point_visible(buf, scale, u, v, d, bias):
    """Depth test of an image-space point against a supersampled buffer."""
    h, w = buf.shape
    bx = u * scale
    by = v * scale
    if bx < 0 or by < 0 or bx >= w or by >= h:
        return False
    return d <= _conservative_depth(buf, bx, by) + bias


@njit(cache=True)
def draw_segments(p0, p1, d0, d1, buf, scale, bias, width, height, step):
    """Draw visible portions of screen segments with 1-px tent-filtered ink.

    ``d0``/``d1`` are screen-linear depths at the endpoints. Pixel intensity is
    the max over samples of tent(dx) * tent(dy), composited by max.
    """
    img = np.zeros((height, width))
    for s in range(p0.shape[0]):
        ux0, uy0 = p0[s, 0], p0[s, 1]
        ux1, uy1 = p1[s, 0], p1[s, 1]
        length = math.hypot(ux1 - ux0, uy1 - uy0)
        n = int(math.ceil(length / step)) + 1
        for k in range(n + 1):
            t = k / n if n > 0 else 0.0
            u = ux0 + t * (ux1 - ux0)
            v = uy0 + t * (uy1 - uy0)
            if u < -1.0 or v < -1.0 or u > width + 1.0 or v > height + 1.0:
                continue
            d = d0[s] + t * (d1[s] - d0[s])
            if not point_visible(buf, scale, min(max(u, 0.0), width - 1e-9),
                                 min(max(v, 0.0), height - 1e-9), d, bias):
                continue
            cx0 = int(math.floor(u - 0.5))
            cy0 = int(math.floor(v - 0.5))
            for py in range(cy0, cy0 + 2):
                if py < 0 or py >= height:
                    continue
                wy = 1.0 - abs(v - (py + 0.5))
                if wy <= 0.0:
                    continue
                for px in range(cx0, cx0 + 2):
                    if px < 0 or px >= width:
                        continue
                    wx = 1.0 - abs(u - (px + 0.5))
                    if wx <= 0.0:
                        continue
                    val = wx * wy
                    if val > img[py, px]:
                        img[py, px] = val
    return img
