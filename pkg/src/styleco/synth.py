"""Planted-style benchmark: simple content shapes carrying decorative motifs.

Content classes (cabinet, chest, drum, stepped) fix the coarse geometry; style
classes (groove, flute, boss, lattice) fix the decoration motif applied to
every side panel. The ground truth for style analysis is the motif.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import primitives as prim
from .mesh import TriMesh, make_mesh, save_obj

CONTENTS = ("cabinet", "chest", "drum", "stepped")
STYLES = ("groove", "flute", "boss", "lattice")

STRIP_WIDTH = 0.045
RELIEF = 0.035
SINK = 0.01
YAW_JITTER = 15.0  # degrees; shapes are roughly but not exactly aligned


@dataclass(frozen=True)
class Panel:
    center: np.ndarray
    u: np.ndarray  # horizontal in-plane axis
    v: np.ndarray  # vertical in-plane axis
    n: np.ndarray  # outward normal
    hu: float
    hv: float


@dataclass(frozen=True)
class SynthShape:
    mesh: TriMesh
    style: str
    content: str
    style_faces: np.ndarray  # indices of decoration faces


def _box_panels(center, size):
    c = np.asarray(center, dtype=np.float64)
    sx, sy, sz = size
    y = np.array([0, 1.0, 0])
    out = []
    for n, u, hu in (
        (np.array([0, 0, 1.0]), np.array([1.0, 0, 0]), sx / 2),
        (np.array([0, 0, -1.0]), np.array([-1.0, 0, 0]), sx / 2),
        (np.array([1.0, 0, 0]), np.array([0, 0, -1.0]), sz / 2),
        (np.array([-1.0, 0, 0]), np.array([0, 0, 1.0]), sz / 2),
    ):
        depth = sz / 2 if abs(n[2]) else sx / 2
        out.append(Panel(c + n * depth, u, y, n, hu, sy / 2))
    return out


def _top_panel(center, hx, hz, top):
    """Horizontal panel facing +Y at height ``top``."""
    c = np.array([center[0], top, center[2]], dtype=np.float64)
    return Panel(c, np.array([1.0, 0, 0]), np.array([0, 0, -1.0]), np.array([0, 1.0, 0]), hx, hz)


def _content(kind, rng, subdiv):
    j = lambda: rng.uniform(0.88, 1.12)  # noqa: E731
    if kind == "cabinet":
        size = (0.8 * j(), 1.6 * j(), 0.6 * j())
        parts = [prim.box((0, 0, 0), size, subdiv=subdiv)]
        panels = _box_panels((0, 0, 0), size) + [_top_panel((0, 0, 0), size[0] / 2, size[2] / 2, size[1] / 2)]
    elif kind == "chest":
        size = (1.6 * j(), 0.8 * j(), 0.8 * j())
        parts = [prim.box((0, 0, 0), size, subdiv=subdiv)]
        panels = _box_panels((0, 0, 0), size) + [_top_panel((0, 0, 0), size[0] / 2, size[2] / 2, size[1] / 2)]
    elif kind == "drum":
        r, h, n = 0.65 * j(), 1.1 * j(), 8
        parts = [prim.prism(n, r, h, vsub=subdiv)]
        apothem = r * math.cos(math.pi / n)
        half_side = r * math.sin(math.pi / n)
        panels = []
        for k in range(n):
            a = 2 * math.pi * (k + 1) / n  # facet between ring vertices k and k+1
            nrm = np.array([math.sin(a), 0, math.cos(a)])
            u = np.array([math.cos(a), 0, -math.sin(a)])
            panels.append(Panel(nrm * apothem, u, np.array([0, 1.0, 0]), nrm, half_side, h / 2))
        inner = apothem / math.sqrt(2)  # square inscribed in the octagon
        panels.append(_top_panel((0, 0, 0), inner, inner, h / 2))
    elif kind == "stepped":
        lo = (1.3 * j(), 0.7 * j(), 0.9 * j())
        hi = (0.8 * j(), 0.7 * j(), 0.55 * j())
        c_lo = (0, -lo[1] / 2, 0)
        c_hi = (0, hi[1] / 2 - 0.001, 0)
        parts = [prim.box(c_lo, lo, subdiv=subdiv), prim.box(c_hi, hi, subdiv=subdiv)]
        panels = _box_panels(c_lo, lo) + _box_panels(c_hi, hi)
        panels.append(_top_panel(c_hi, hi[0] / 2, hi[2] / 2, c_hi[1] + hi[1] / 2))
    else:
        raise ValueError(f"unknown content class {kind!r}")
    return parts, panels


def _strip(panel, a, b, direction, length, width):
    """Raised box on the panel centred at panel coords (a, b)."""
    d = direction[0] * panel.u + direction[1] * panel.v
    d = d / np.linalg.norm(d)
    e = np.cross(panel.n, d)
    center = panel.center + a * panel.u + b * panel.v + panel.n * (RELIEF / 2 - SINK)
    return prim.box(center, (length, width, RELIEF + SINK), axes=np.stack([d, e, panel.n]))


def _spaced(half, pitch, margin):
    """Evenly spaced offsets in [-half+margin, half-margin] at roughly ``pitch``."""
    span = 2 * (half - margin)
    if span <= 0:
        return np.zeros(1)
    n = max(1, int(round(span / pitch)) + 1)
    if n == 1:
        return np.zeros(1)
    return np.linspace(-span / 2, span / 2, n)


def _clip_line(half_u, half_v, point, d):
    """Parameter interval where point + t*d stays inside the panel rectangle."""
    lo, hi = -np.inf, np.inf
    for k, h in ((0, half_u), (1, half_v)):
        if abs(d[k]) < 1e-12:
            if abs(point[k]) > h:
                return None
            continue
        t0, t1 = sorted(((-h - point[k]) / d[k], (h - point[k]) / d[k]))
        lo, hi = max(lo, t0), min(hi, t1)
    return (lo, hi) if hi > lo else None


def _decorate(style, panel, rng):
    margin = 0.06
    w = STRIP_WIDTH
    pitch = rng.uniform(0.85, 1.15)
    out = []
    hu, hv = panel.hu - margin, panel.hv - margin
    if hu <= w or hv <= w:
        return out
    if style == "groove":
        for b in _spaced(panel.hv, 0.17 * pitch, margin + w):
            out.append(_strip(panel, 0.0, b, (1, 0), 2 * hu, w))
    elif style == "flute":
        for a in _spaced(panel.hu, 0.15 * pitch, margin + w):
            out.append(_strip(panel, a, 0.0, (0, 1), 2 * hv, w))
    elif style == "boss":
        s = 0.085
        for a in _spaced(panel.hu, 0.2 * pitch, margin + s):
            for b in _spaced(panel.hv, 0.2 * pitch, margin + s):
                out.append(_strip(panel, a, b, (1, 0), s, s))
    elif style == "lattice":
        step = 0.24 * pitch
        for sgn in (1, -1):
            d = np.array([1.0, sgn]) / math.sqrt(2)
            nrm = np.array([-d[1], d[0]])
            reach = hu + hv
            for off in np.arange(-reach, reach + 1e-9, step) + rng.uniform(-0.02, 0.02):
                p = nrm * off
                seg = _clip_line(hu, hv, p, d)
                if seg is None or seg[1] - seg[0] < 3 * w:
                    continue
                mid = p + d * (seg[0] + seg[1]) / 2
                out.append(_strip(panel, mid[0], mid[1], d, seg[1] - seg[0], w))
    else:
        raise ValueError(f"unknown style {style!r}")
    return out


def _yaw(verts, angle):
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    return verts @ R.T


def make_shape(content: str, style: str, rng, shape_id="", subdiv=6, yaw=YAW_JITTER) -> SynthShape:
    """One decorated shape; ``yaw`` is the maximum random rotation about +Y in degrees."""
    parts, panels = _content(content, rng, subdiv)
    base_faces = sum(len(f) for _, f in parts)
    deco = [d for p in panels for d in _decorate(style, p, rng)]
    verts, faces = prim.merge(parts + deco)
    angle = rng.uniform(-1, 1) * math.radians(yaw)
    if yaw:
        verts = _yaw(verts, angle)
    style_faces = np.arange(base_faces, len(faces))
    mesh = make_mesh(verts, faces, shape_id)
    if mesh.n_faces != len(faces):
        raise RuntimeError("synthetic mesh produced degenerate faces")
    return SynthShape(mesh, style, content, style_faces)


def make_benchmark(n_shapes: int = 40, seed: int = 0, subdiv=6, yaw=YAW_JITTER) -> list[SynthShape]:
    """Balanced collection: shape i gets content i % 4 and style (i // 4) % 4."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_shapes):
        content = CONTENTS[i % len(CONTENTS)]
        style = STYLES[(i // len(CONTENTS)) % len(STYLES)]
        out.append(make_shape(content, style, rng, f"s{i:03d}_{content}_{style}", subdiv, yaw))
    return out


def benchmark_inputs(n_shapes: int = 40, seed: int = 0, subdiv=6, yaw=YAW_JITTER):
    """(shapes, normalized meshes, shape_id -> style) for an in-memory benchmark run."""
    from .mesh import normalize_upright

    shapes = make_benchmark(n_shapes, seed, subdiv, yaw)
    meshes = [normalize_upright(s.mesh) for s in shapes]
    return shapes, meshes, {s.mesh.shape_id: s.style for s in shapes}


def label_subset(shapes, fraction, seed=0):
    """Stratified random subset of shape ids to label, ~fraction of each style."""
    rng = np.random.default_rng(seed)
    by_style = {}
    for s in shapes:
        by_style.setdefault(s.style, []).append(s.mesh.shape_id)
    total = int(round(fraction * len(shapes)))
    chosen = []
    styles = sorted(by_style)
    per = [total // len(styles) + (k < total % len(styles)) for k in range(len(styles))]
    for st, n in zip(styles, per):
        ids = by_style[st]
        chosen += [ids[i] for i in rng.permutation(len(ids))[: max(1, n)]]
    return sorted(chosen)


def planted_triplets(shapes, n, seed=0):
    """Triplets (a, b, c): a shares its style with b but not with c.

    Drawn without replacement from all valid triplets; fewer than ``n`` are
    returned when the collection does not have that many.
    """
    rng = np.random.default_rng(seed)
    ids = [s.mesh.shape_id for s in shapes]
    style = {s.mesh.shape_id: s.style for s in shapes}
    valid = [(a, b, c) for a in ids for b in ids for c in ids
             if a != b and style[a] == style[b] and style[a] != style[c]]
    pick = rng.permutation(len(valid))[: min(n, len(valid))]
    return [valid[i] for i in pick]


def write_benchmark(out_dir, shapes, label_fraction=None, n_triplets=None, seed=0):
    """Write OBJ files, manifest, ground truth and optional constraint files."""
    out = Path(out_dir)
    (out / "meshes").mkdir(parents=True, exist_ok=True)
    manifest, truth = [], ["shape_id,style,content"]
    for s in shapes:
        sid = s.mesh.shape_id
        save_obj(s.mesh, out / "meshes" / f"{sid}.obj")
        np.savetxt(out / "meshes" / f"{sid}.style_faces.txt", s.style_faces, fmt="%d")
        manifest.append(f"meshes/{sid}.obj {sid}")
        truth.append(f"{sid},{s.style},{s.content}")
    (out / "manifest.txt").write_text("\n".join(manifest) + "\n")
    (out / "truth.csv").write_text("\n".join(truth) + "\n")
    style = {s.mesh.shape_id: s.style for s in shapes}
    records = []
    if label_fraction:
        ids = label_subset(shapes, label_fraction, seed)
        lab = "".join(f"L {i} {style[i]}\n" for i in ids)
        (out / "labels.txt").write_text(lab)
        records.append(lab)
    if n_triplets:
        trip = planted_triplets(shapes, n_triplets, seed)
        tri = "".join(f"T {a} {b} {c}\n" for a, b, c in trip)
        (out / "triplets.txt").write_text(tri)
        records.append(tri)
    if records:
        (out / "constraints.txt").write_text("".join(records))
    return out
