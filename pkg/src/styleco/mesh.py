"""Triangle meshes: loading, validation, normalization and surface queries."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

log = logging.getLogger(__name__)

DEGENERATE_REL_AREA = 1e-12


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Indexed triangle mesh. Treat as immutable once constructed."""

    vertices: np.ndarray
    faces: np.ndarray
    shape_id: str = ""

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.ascontiguousarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def face_normals(self) -> np.ndarray:
        """Unit face normals (zero for degenerate faces)."""
        tri = self.vertices[self.faces]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)

    @cached_property
    def face_areas(self) -> np.ndarray:
        tri = self.vertices[self.faces]
        return 0.5 * np.linalg.norm(
            np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1
        )

    @cached_property
    def face_centroids(self) -> np.ndarray:
        return self.vertices[self.faces].mean(axis=1)

    @cached_property
    def _edge_table(self):
        fe = np.stack(
            [self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]], axis=1
        ).reshape(-1, 2)
        fe = np.sort(fe, axis=1)
        edges, inverse, counts = np.unique(
            fe, axis=0, return_inverse=True, return_counts=True
        )
        inverse = inverse.reshape(-1)
        order = np.argsort(inverse, kind="stable")
        face_of = order // 3
        starts = np.concatenate([[0], np.cumsum(counts)])
        return edges, counts, face_of, starts

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted vertex pairs, shape (E, 2)."""
        return self._edge_table[0]

    @property
    def edge_face_counts(self) -> np.ndarray:
        return self._edge_table[1]

    def edge_faces(self, e: int) -> tuple[int, ...]:
        _, _, face_of, starts = self._edge_table
        return tuple(int(x) for x in face_of[starts[e] : starts[e + 1]])

    @cached_property
    def edge_adjacency(self) -> dict[tuple[int, int], tuple[int, ...]]:
        """Map (i, j) with i < j to the incident face indices."""
        return {
            (int(a), int(b)): self.edge_faces(e) for e, (a, b) in enumerate(self.edges)
        }

    @cached_property
    def manifold_edge_faces(self) -> tuple[np.ndarray, np.ndarray]:
        """(edge indices, (k, 2) face pairs) for edges with exactly two faces."""
        edges, counts, face_of, starts = self._edge_table
        idx = np.flatnonzero(counts == 2)
        pairs = np.stack([face_of[starts[idx]], face_of[starts[idx] + 1]], axis=1)
        return idx, pairs

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_face_counts == 1)

    @property
    def nonmanifold_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_face_counts > 2)

    @cached_property
    def bbox_diagonal(self) -> float:
        if len(self.vertices) == 0:
            return 0.0
        return float(np.linalg.norm(self.vertices.max(0) - self.vertices.min(0)))

    @cached_property
    def content_hash(self) -> str:
        """Digest of geometry only; shape_id is deliberately excluded."""
        h = hashlib.sha256()
        h.update(self.vertices.tobytes())
        h.update(self.faces.tobytes())
        return h.hexdigest()

    def with_id(self, shape_id: str) -> "TriMesh":
        return TriMesh(self.vertices, self.faces, shape_id)


def _drop_degenerate(vertices, faces, shape_id=""):
    mesh = TriMesh(vertices, faces, shape_id)
    if mesh.n_faces == 0:
        return mesh
    thresh = DEGENERATE_REL_AREA * mesh.bbox_diagonal**2
    repeated = (
        (mesh.faces[:, 0] == mesh.faces[:, 1])
        | (mesh.faces[:, 1] == mesh.faces[:, 2])
        | (mesh.faces[:, 0] == mesh.faces[:, 2])
    )
    bad = repeated | (mesh.face_areas <= thresh)
    if bad.any():
        log.warning("%s: dropped %d degenerate faces", shape_id or "mesh", int(bad.sum()))
        mesh = TriMesh(mesh.vertices, mesh.faces[~bad], shape_id)
    if len(mesh.nonmanifold_edges):
        log.info("%s: %d non-manifold edges", shape_id or "mesh", len(mesh.nonmanifold_edges))
    return mesh


def make_mesh(vertices, faces, shape_id: str = "") -> TriMesh:
    """Validated mesh from raw arrays (degenerate faces removed)."""
    mesh = _drop_degenerate(vertices, faces, shape_id)
    if mesh.n_faces == 0:
        raise MeshError("empty mesh")
    return mesh


def parse_obj(text: str, shape_id: str = "") -> TriMesh:
    verts = []
    faces = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        tag = parts[0]
        try:
            if tag == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif tag == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) < 3:
                    raise MeshError(f"line {lineno}: face with fewer than 3 vertices")
                # fan split for polygons
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
        except (ValueError, IndexError) as exc:
            if isinstance(exc, MeshError):
                raise
            raise MeshError(f"line {lineno}: cannot parse {line!r}") from exc
    if not faces:
        raise MeshError("empty mesh")
    verts = np.array(verts, dtype=np.float64).reshape(-1, 3)
    faces = np.array(faces, dtype=np.int64)
    if faces.min() < 0 or faces.max() >= len(verts):
        raise MeshError("face index out of range")
    return make_mesh(verts, faces, shape_id)


def load_mesh(path, shape_id: str | None = None) -> TriMesh:
    """Read a Wavefront OBJ file (only v/f records are used)."""
    path = Path(path)
    try:
        text = path.read_text()
    except UnicodeDecodeError as exc:
        raise MeshError(f"{path}: not a text OBJ file") from exc
    return parse_obj(text, shape_id if shape_id is not None else path.stem)


def save_obj(mesh: TriMesh, path) -> None:
    lines = [f"# {mesh.shape_id}"] if mesh.shape_id else []
    lines += [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")


def surface_centroid(mesh: TriMesh) -> np.ndarray:
    a = mesh.face_areas
    return (mesh.face_centroids * a[:, None]).sum(0) / a.sum()


def normalize_upright(mesh: TriMesh) -> TriMesh:
    """Center on the area-weighted centroid and scale to a unit bounding sphere.

    The +Y axis is assumed to be up already, so no rotation is applied.
    """
    c = surface_centroid(mesh)
    v = mesh.vertices - c
    r = np.linalg.norm(v, axis=1).max()
    if r > 0:
        v = v / r
    return TriMesh(v, mesh.faces, mesh.shape_id)


class SeedPoint(NamedTuple):
    seed_id: int
    position: np.ndarray
    face_index: int
    barycentric: np.ndarray


@dataclass(frozen=True)
class Seeds:
    """A batch of surface samples stored column-wise."""

    positions: np.ndarray
    face_index: np.ndarray
    barycentric: np.ndarray
    seed_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.seed_ids is None:
            object.__setattr__(self, "seed_ids", np.arange(len(self.positions)))

    def __len__(self):
        return len(self.positions)

    def __iter__(self) -> Iterator[SeedPoint]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i) -> SeedPoint:
        return SeedPoint(
            int(self.seed_ids[i]), self.positions[i], int(self.face_index[i]), self.barycentric[i]
        )


def sample_surface(mesh: TriMesh, n: int, rng_seed) -> Seeds:
    """Area-uniform surface samples, deterministic for a fixed seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(rng_seed)
    p = mesh.face_areas / mesh.face_areas.sum()
    faces = rng.choice(mesh.n_faces, size=n, p=p)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    bary = np.stack([1 - r1, r1 * (1 - r2), r1 * r2], axis=1)
    tri = mesh.vertices[mesh.faces[faces]]
    pos = np.einsum("nk,nkd->nd", bary, tri)
    return Seeds(pos, faces.astype(np.int64), bary)


def dihedral_angle(mesh: TriMesh, edge) -> float | None:
    """Angle in [0, pi] between the normals of the two faces sharing ``edge``.

    Returns None when the edge is not shared by exactly two faces.
    """
    key = (min(edge), max(edge))
    faces = mesh.edge_adjacency.get((int(key[0]), int(key[1])))
    if faces is None:
        raise KeyError(f"{edge} is not an edge of the mesh")
    if len(faces) != 2:
        return None
    n0, n1 = mesh.face_normals[list(faces)]
    return float(np.arccos(np.clip(n0 @ n1, -1.0, 1.0)))


def dihedral_angles(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    """Normal angles for all two-face edges: (edge indices, angles)."""
    idx, pairs = mesh.manifold_edge_faces
    n = mesh.face_normals
    dots = np.einsum("ij,ij->i", n[pairs[:, 0]], n[pairs[:, 1]])
    return idx, np.arccos(np.clip(dots, -1.0, 1.0))
