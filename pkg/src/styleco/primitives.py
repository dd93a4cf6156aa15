"""Procedural meshes: boxes, prisms, grids, icospheres and mesh merging."""

import numpy as np

from .mesh import TriMesh


def grid_quad(origin, du, dv, nu=1, nv=1):
    """Planar quad origin + s*du + t*dv, s,t in [0,1], split into 2*nu*nv triangles.

    Winding follows du x dv.
    """
    origin, du, dv = (np.asarray(a, dtype=np.float64) for a in (origin, du, dv))
    s = np.linspace(0, 1, nu + 1)
    t = np.linspace(0, 1, nv + 1)
    S, T = np.meshgrid(s, t, indexing="ij")
    verts = origin + S[..., None] * du + T[..., None] * dv
    verts = verts.reshape(-1, 3)
    idx = np.arange((nu + 1) * (nv + 1)).reshape(nu + 1, nv + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[1:, :-1].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[:-1, 1:].ravel()
    faces = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return verts, faces


def merge(parts):
    """Concatenate (vertices, faces) parts into one vertex/face array pair."""
    verts, faces, off = [], [], 0
    for v, f in parts:
        verts.append(v)
        faces.append(np.asarray(f) + off)
        off += len(v)
    return np.concatenate(verts), np.concatenate(faces)


def weld(verts, faces, tol=1e-9):
    """Merge coincident vertices."""
    key = np.round(verts / tol).astype(np.int64)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    return verts[first], inv[faces]


def box(center=(0, 0, 0), size=(1, 1, 1), axes=None, subdiv=1):
    """Closed outward-oriented box, optionally with each face subdivided."""
    c = np.asarray(center, dtype=np.float64)
    h = np.asarray(size, dtype=np.float64) / 2
    ax = np.eye(3) if axes is None else np.asarray(axes, dtype=np.float64)
    ex, ey, ez = ax[0] * h[0], ax[1] * h[1], ax[2] * h[2]
    n = subdiv
    parts = [
        grid_quad(c - ex - ey + ez, 2 * ex, 2 * ey, n, n),  # +z
        grid_quad(c + ex - ey - ez, -2 * ex, 2 * ey, n, n),  # -z
        grid_quad(c + ex - ey + ez, -2 * ez, 2 * ey, n, n),  # +x
        grid_quad(c - ex - ey - ez, 2 * ez, 2 * ey, n, n),  # -x
        grid_quad(c - ex + ey + ez, 2 * ex, -2 * ez, n, n),  # +y
        grid_quad(c - ex - ey - ez, 2 * ex, 2 * ez, n, n),  # -y
    ]
    return weld(*merge(parts))


def prism(n_sides=8, radius=0.5, height=1.0, center=(0, 0, 0), vsub=1):
    """Closed regular n-gon prism along +Y."""
    c = np.asarray(center, dtype=np.float64)
    ang = 2 * np.pi * (np.arange(n_sides) + 0.5) / n_sides
    ring = np.stack([radius * np.sin(ang), np.zeros(n_sides), radius * np.cos(ang)], 1)
    up = np.array([0, height, 0.0])
    base = c - up / 2
    parts = []
    for k in range(n_sides):
        p0, p1 = ring[k], ring[(k + 1) % n_sides]
        parts.append(grid_quad(base + p0, p1 - p0, up, 1, vsub))
    top = np.vstack([c + up / 2, c + up / 2 + ring])
    bot = np.vstack([base, base + ring])
    k = np.arange(n_sides)
    parts.append((top, np.stack([np.zeros(n_sides, int), 1 + k, 1 + (k + 1) % n_sides], 1)))
    parts.append((bot, np.stack([np.zeros(n_sides, int), 1 + (k + 1) % n_sides, 1 + k], 1)))
    return weld(*merge(parts))


def icosphere(subdiv=3, radius=1.0):
    t = (1 + 5**0.5) / 2
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=np.float64)
    f = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    verts = list(v / np.linalg.norm(v, axis=1, keepdims=True))
    faces = f
    for _ in range(subdiv):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new
    return np.array(verts) * radius, np.array(faces)


def as_mesh(parts_or_vf, shape_id=""):
    v, f = parts_or_vf
    return TriMesh(v, f, shape_id)


def unit_cube(corner=(0, 0, 0), edge=1.0, shape_id="cube"):
    """Axis-aligned cube with 8 vertices and 12 triangles."""
    c = np.asarray(corner, dtype=np.float64) + edge / 2
    return TriMesh(*box(c, (edge, edge, edge)), shape_id)
