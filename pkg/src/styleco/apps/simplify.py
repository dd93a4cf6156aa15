"""Style-aware quadric edge-collapse simplification.

Garland-Heckbert with per-vertex plane quadrics, boundary constraint planes,
quadric-optimal placement (midpoint when the 3x3 system is near singular) and
a lazy-deletion heap. Edges touching a style face are either penalized or
removed from consideration.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from ..config import ConfigError, SimplifyConfig
from ..mesh import TriMesh, make_mesh

BOUNDARY_WEIGHT = 1000.0
SINGULAR_DET = 1e-12
AREA_EPS = 1e-12


@dataclass
class SimplifyResult:
    mesh: TriMesh
    face_origin: np.ndarray  # original face index of every output face
    faces_before: int
    style_faces_before: int
    style_faces_after: int
    collapse_costs: list = field(default_factory=list)  # raw quadric cost per executed collapse

    @property
    def faces_after(self) -> int:
        return self.mesh.n_faces


def _plane_quadric(n, p):
    d = -float(n @ p)
    q = np.append(n, d)
    return np.outer(q, q)


class _Collapser:
    def __init__(self, mesh: TriMesh, styled: np.ndarray, cfg: SimplifyConfig):
        self.V = mesh.vertices.copy()
        self.F = mesh.faces.copy()
        self.alive_f = np.ones(len(self.F), dtype=bool)
        self.alive_v = np.ones(len(self.V), dtype=bool)
        self.vf = [set() for _ in range(len(self.V))]
        for f, tri in enumerate(self.F):
            for v in tri:
                self.vf[v].add(f)
        self.area_eps = AREA_EPS * mesh.bbox_diagonal**2
        self.cfg = cfg
        self.version = np.zeros(len(self.V), dtype=np.int64)

        style_v = np.zeros(len(self.V), dtype=bool)
        style_v[np.unique(mesh.faces[styled])] = True
        self.style_v = style_v
        locked = np.zeros(len(self.V), dtype=bool)
        nm = mesh.nonmanifold_edges
        if len(nm):
            locked[np.unique(mesh.edges[nm])] = True
        self.locked = locked

        Q = np.zeros((len(self.V), 4, 4))
        normals, areas = mesh.face_normals, mesh.face_areas
        for f, tri in enumerate(self.F):
            if areas[f] <= 0:
                continue
            K = _plane_quadric(normals[f], self.V[tri[0]])
            for v in tri:
                Q[v] += K
        for e in mesh.boundary_edges:
            a, b = mesh.edges[e]
            (f,) = mesh.edge_faces(e)
            d = self.V[b] - self.V[a]
            n = np.cross(d, normals[f])
            nn = np.linalg.norm(n)
            if nn == 0:
                continue
            K = BOUNDARY_WEIGHT * _plane_quadric(n / nn, self.V[a])
            Q[a] += K
            Q[b] += K
        self.Q = Q

    # -- local topology
    def neighbors(self, v):
        out = set()
        for f in self.vf[v]:
            out.update(self.F[f])
        out.discard(v)
        return out

    def edge_faces(self, u, v):
        return self.vf[u] & self.vf[v]

    def is_boundary_vertex(self, v):
        for n in self.neighbors(v):
            if len(self.edge_faces(v, n)) == 1:
                return True
        return False

    def link_ok(self, u, v):
        shared = self.edge_faces(u, v)
        if len(shared) not in (1, 2):
            return False
        opposite = set()
        for f in shared:
            opposite.update(self.F[f])
        opposite -= {u, v}
        if self.neighbors(u) & self.neighbors(v) != opposite:
            return False
        if len(shared) == 2 and self.is_boundary_vertex(u) and self.is_boundary_vertex(v):
            return False
        return True

    # -- costs
    def placement(self, u, v):
        Q = self.Q[u] + self.Q[v]
        A = Q[:3, :3]
        if abs(np.linalg.det(A)) >= SINGULAR_DET:
            x = np.linalg.solve(A, -Q[:3, 3])
        else:
            x = 0.5 * (self.V[u] + self.V[v])
        h = np.append(x, 1.0)
        return x, max(float(h @ Q @ h), 0.0)

    def styled_edge(self, u, v):
        return self.style_v[u] or self.style_v[v]

    def push(self, heap, u, v):
        if u > v:
            u, v = v, u
        if self.locked[u] or self.locked[v]:
            return
        styled = self.styled_edge(u, v)
        if styled and self.cfg.mode == "hard-lock":
            return
        _, cost = self.placement(u, v)
        key = cost * self.cfg.style_penalty if styled else cost
        heapq.heappush(heap, (key, u, v, self.version[u], self.version[v], cost))

    def flips(self, u, v, x):
        """True if moving u and v to x folds or degenerates a surviving face."""
        fs = [f for f in self.vf[u] ^ self.vf[v]]
        if not fs:
            return False
        tri = self.F[fs]
        p = self.V[tri]
        n_old = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        moved = (tri == u) | (tri == v)
        p[moved] = x
        n_new = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        area = 0.5 * np.linalg.norm(n_new, axis=1)
        return bool(((area <= self.area_eps) | ((n_new * n_old).sum(1) <= 0)).any())

    def collapse(self, u, v, x):
        """Merge v into u placed at x; returns number of faces removed."""
        removed = 0
        for f in list(self.vf[v]):
            tri = self.F[f]
            if u in tri:
                self.alive_f[f] = False
                for w in tri:
                    self.vf[w].discard(f)
                removed += 1
            else:
                tri[list(tri).index(v)] = u
                self.vf[u].add(f)
        self.vf[v].clear()
        self.alive_v[v] = False
        self.V[u] = x
        self.Q[u] += self.Q[v]
        self.style_v[u] = self.style_v[u] or self.style_v[v]
        self.version[u] += 1
        self.version[v] += 1
        return removed


def simplify(mesh: TriMesh, region=None, cfg: SimplifyConfig | None = None) -> SimplifyResult:
    """Collapse edges until at most (1 - target_reduction) of the faces remain.

    ``region`` is a StyleRegion, a per-face score array, or None. A face is a
    style face when its score is positive. Ties in cost break on the lower
    vertex pair, so a style_penalty of 1 with an empty region reproduces plain QEM.
    """
    cfg = cfg or SimplifyConfig()
    scores = np.zeros(mesh.n_faces)
    if region is not None:
        scores = np.asarray(getattr(region, "face_scores", region), dtype=np.float64)
        if scores.shape != (mesh.n_faces,):
            raise ValueError("style region does not match the mesh faces")
    styled = scores > 0
    target = int(np.floor((1 - cfg.target_reduction) * mesh.n_faces + 1e-9))
    if cfg.mode == "hard-lock" and cfg.target_reduction > 0 and styled.all():
        if not cfg.best_effort:
            raise ConfigError("unachievable target: every face is a style face under hard-lock")

    c = _Collapser(mesh, styled, cfg)
    heap = []
    for a, b in mesh.edges:
        c.push(heap, int(a), int(b))
    n_faces = mesh.n_faces
    costs = []
    while n_faces > target and heap:
        _, u, v, vu, vv, cost = heapq.heappop(heap)
        if not (c.alive_v[u] and c.alive_v[v]) or c.version[u] != vu or c.version[v] != vv:
            continue
        if not c.edge_faces(u, v) or not c.link_ok(u, v):
            continue
        x, cost = c.placement(u, v)
        if c.flips(u, v, x):
            continue
        n_faces -= c.collapse(u, v, x)
        costs.append(cost)
        for n in c.neighbors(u):
            c.push(heap, u, n)

    keep = np.flatnonzero(c.alive_f)
    used = np.unique(c.F[keep])
    remap = np.full(len(c.V), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    out = make_mesh(c.V[used], remap[c.F[keep]], mesh.shape_id)
    if out.n_faces != len(keep):
        raise RuntimeError("simplification produced degenerate faces")
    return SimplifyResult(out, keep, mesh.n_faces, int(styled.sum()), int(styled[keep].sum()), costs)


def simplify_stats(res: SimplifyResult) -> dict:
    def frac(a, b):
        return 1.0 - b / a if a else 0.0

    return {
        "faces_before": res.faces_before,
        "faces_after": res.faces_after,
        "style_faces_before": res.style_faces_before,
        "style_faces_after": res.style_faces_after,
        "total_reduction": frac(res.faces_before, res.faces_after),
        "style_reduction": frac(res.style_faces_before, res.style_faces_after),
    }
