"""Virtual cameras, object-space feature lines and hidden-line rasterization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _raster
from .mesh import Seeds, TriMesh, dihedral_angles

IMAGE_SIZE = 200
DEPTH_BIAS = 1e-3
SUPERSAMPLE = 2
DEFAULT_FOV = 35.0
DEFAULT_ELEVATION = 30.0
DEFAULT_SHARP = math.radians(40.0)
_STROKE_STEP = 0.25


@dataclass(frozen=True)
class Camera:
    view_index: int
    eye: np.ndarray
    target: np.ndarray
    up: np.ndarray
    fov: float = DEFAULT_FOV
    near: float = 0.1
    far: float = 10.0
    size: int = IMAGE_SIZE
    azimuth: float = 0.0
    elevation: float = 0.0

    def basis(self):
        fwd = self.target - self.eye
        fwd = fwd / np.linalg.norm(fwd)
        right = np.cross(fwd, self.up)
        right = right / np.linalg.norm(right)
        up = np.cross(right, fwd)
        return right, up, fwd

    @property
    def focal(self) -> float:
        """Focal length in pixels."""
        return 0.5 * self.size / math.tan(math.radians(self.fov) / 2)

    def project(self, points):
        """Image coordinates (u right, v down), view depth z and normalized depth.

        Normalized depth is affine in 1/z so it interpolates linearly in screen space.
        """
        right, up, fwd = self.basis()
        rel = np.asarray(points, dtype=np.float64) - self.eye
        x = rel @ right
        y = rel @ up
        z = rel @ fwd
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.size / 2 + self.focal * x / z
            v = self.size / 2 - self.focal * y / z
            nd = (1 / self.near - 1 / z) / (1 / self.near - 1 / self.far)
        return np.stack([u, v], axis=-1), z, nd

    def units_per_pixel(self, z) -> np.ndarray:
        return np.asarray(z) / self.focal


def look_at(eye, target=(0.0, 0.0, 0.0), *, view_index=0, fov=DEFAULT_FOV, size=IMAGE_SIZE,
            up=(0.0, 1.0, 0.0), near=None, far=None) -> Camera:
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    dist = float(np.linalg.norm(eye - target))
    if dist == 0:
        raise ValueError("eye coincides with target")
    near = max(dist - 1.5, 0.05) if near is None else near
    far = dist + 1.5 if far is None else far
    return Camera(view_index, eye, target, np.asarray(up, dtype=np.float64), fov, near, far, size)


def camera_distance(fov=DEFAULT_FOV, fill=0.95) -> float:
    """Distance at which a unit sphere spans ``fill`` of the vertical frame."""
    half = math.atan(fill * math.tan(math.radians(fov) / 2))
    return 1.0 / math.sin(half)


def make_cameras(p: int = 12, *, elevation=DEFAULT_ELEVATION, fov=DEFAULT_FOV,
                 size=IMAGE_SIZE, fill=0.95) -> list[Camera]:
    """Cameras on a circle around the origin at azimuth k*360/p.

    Azimuth runs so that rotating a mesh by +360/p degrees about +Y and
    rendering view k reproduces view k+1 of the unrotated mesh.
    """
    if p < 1:
        raise ValueError("need at least one view")
    d = camera_distance(fov, fill)
    el = math.radians(elevation)
    cams = []
    for k in range(p):
        az_deg = k * 360.0 / p
        az = math.radians(az_deg)
        eye = d * np.array([-math.cos(el) * math.sin(az), math.sin(el), math.cos(el) * math.cos(az)])
        cam = look_at(eye, view_index=k, fov=fov, size=size)
        cams.append(Camera(k, cam.eye, cam.target, cam.up, fov, cam.near, cam.far, size,
                           az_deg, float(elevation)))
    return cams


def extract_feature_lines(mesh: TriMesh, sharp_threshold: float = DEFAULT_SHARP) -> np.ndarray:
    """View-independent feature lines as (S, 2, 3) segments.

    Union of sharp edges (normal angle above threshold), boundary edges and
    non-manifold edges.
    """
    return mesh.vertices[mesh.edges[feature_edge_indices(mesh, sharp_threshold)]]


def feature_edge_indices(mesh: TriMesh, sharp_threshold: float = DEFAULT_SHARP) -> np.ndarray:
    idx, ang = dihedral_angles(mesh)
    keep = np.zeros(len(mesh.edges), dtype=bool)
    keep[idx[ang > sharp_threshold]] = True
    keep[mesh.edge_face_counts != 2] = True
    return np.flatnonzero(keep)


def silhouette_edges(mesh: TriMesh, cam: Camera) -> np.ndarray:
    """Indices of two-face edges separating a front-facing and a back-facing face."""
    idx, pairs = mesh.manifold_edge_faces
    view = cam.eye - mesh.face_centroids
    front = np.einsum("ij,ij->i", mesh.face_normals, view) > 0
    return idx[front[pairs[:, 0]] != front[pairs[:, 1]]]


@dataclass(frozen=True)
class LineImage:
    shape_id: str
    view_index: int
    pixels: np.ndarray


@dataclass(frozen=True)
class ProjectedSeed:
    seed_id: int
    view_index: int
    pixel: tuple[float, float]
    visible: bool


def depth_map(mesh: TriMesh, cam: Camera) -> np.ndarray:
    """Normalized depth buffer at SUPERSAMPLE x resolution (inf where empty)."""
    uv, z, nd = cam.project(mesh.vertices)
    s = SUPERSAMPLE
    faces = mesh.faces
    ok = (z[faces] > cam.near).all(axis=1)
    return _raster.depth_buffer(uv * s, nd, np.ascontiguousarray(faces[ok]), cam.size * s, cam.size * s)


def _draw(segments: np.ndarray, cam: Camera, buf: np.ndarray) -> np.ndarray:
    if len(segments) == 0:
        return np.zeros((cam.size, cam.size))
    uv, z, nd = cam.project(segments.reshape(-1, 3))
    uv = uv.reshape(-1, 2, 2)
    nd = nd.reshape(-1, 2)
    z = z.reshape(-1, 2)
    ok = (z > cam.near).all(axis=1)
    return _raster.draw_segments(
        np.ascontiguousarray(uv[ok, 0]), np.ascontiguousarray(uv[ok, 1]),
        np.ascontiguousarray(nd[ok, 0]), np.ascontiguousarray(nd[ok, 1]),
        buf, float(SUPERSAMPLE), DEPTH_BIAS, cam.size, cam.size, _STROKE_STEP,
    )


def view_segments(mesh: TriMesh, lines, cam: Camera) -> np.ndarray:
    """Object-space lines plus this view's silhouette edges."""
    sil = mesh.vertices[mesh.edges[silhouette_edges(mesh, cam)]]
    lines = np.asarray(lines, dtype=np.float64).reshape(-1, 2, 3)
    return np.concatenate([lines, sil], axis=0)


def render_lines(mesh: TriMesh, lines, cam: Camera, buf: np.ndarray | None = None) -> LineImage:
    """Rasterize feature lines and silhouettes with hidden-line removal."""
    if buf is None:
        buf = depth_map(mesh, cam)
    img = _draw(view_segments(mesh, lines, cam), cam, buf)
    return LineImage(mesh.shape_id, cam.view_index, img)


def project_seeds(mesh: TriMesh, seeds: Seeds, cam: Camera,
                  buf: np.ndarray | None = None) -> list[ProjectedSeed]:
    if buf is None:
        buf = depth_map(mesh, cam)
    uv, z, nd = cam.project(seeds.positions)
    out = []
    for i, sid in enumerate(seeds.seed_ids):
        u, v = float(uv[i, 0]), float(uv[i, 1])
        inside = z[i] > cam.near and nd[i] <= 1.0 and 0 <= u < cam.size and 0 <= v < cam.size
        vis = bool(inside and _raster.point_visible(buf, float(SUPERSAMPLE), u, v, nd[i], DEPTH_BIAS))
        out.append(ProjectedSeed(int(sid), cam.view_index, (u, v), vis))
    return out


def render_views(mesh: TriMesh, cams, sharp_threshold=DEFAULT_SHARP, seed_sets=()):
    """Render every camera once, projecting each seed set with the same depth buffer.

    Returns (images, [projections per seed set], each a list over views).
    """
    lines = extract_feature_lines(mesh, sharp_threshold)
    images = []
    projections = [[] for _ in seed_sets]
    for cam in cams:
        buf = depth_map(mesh, cam)
        images.append(render_lines(mesh, lines, cam, buf))
        for k, seeds in enumerate(seed_sets):
            projections[k].append(project_seeds(mesh, seeds, cam, buf))
    return images, projections
