"""Cluster-and-select co-analysis: render, sample, pre-select, encode, fuse,
cluster, re-select, repeat; then backproject style patches to surfaces."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import cluster as clu
from . import lineproj as lp
from .config import RunConfig
from .hog import HogMap, encode_map, hog
from .io import read_manifest, read_pgm, write_pgm
from .mesh import Seeds, TriMesh, load_mesh, normalize_upright, sample_surface
from .patches import (Patch, compute_support, preselect_kmeans, reselect_discriminant,
                      sample_patches)
from .pslf import PslfConfig, fit_labeled, fit_unsupervised, one_hot, predict_labels

log = logging.getLogger(__name__)

MODES = ("unsupervised", "labels", "triplets")


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary printable parts."""
    digest = hashlib.sha256(":".join(map(str, parts)).encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


# -- rendering ----------------------------------------------------------------


@dataclass
class RenderedShape:
    """Line images and seed projections for one shape across all views."""

    shape_id: str
    mesh: TriMesh
    seeds: Seeds
    dense_seeds: Seeds
    images: list  # uint8 rasters, one per view
    projected: list  # per view, list of ProjectedSeed
    dense_projected: list
    cameras: list
    _maps: dict = field(default_factory=dict, repr=False)

    def line_image(self, p) -> lp.LineImage:
        return lp.LineImage(self.shape_id, p, self.images[p] / 255.0)

    def hog_map(self, p) -> HogMap:
        if p not in self._maps:
            self._maps[p] = hog(self.images[p] / 255.0)
        return self._maps[p]

    def seed_depth(self, p, seed_pos) -> float:
        _, z, _ = self.cameras[p].project(np.asarray(seed_pos)[None])
        return float(z[0])


def render_key(mesh: TriMesh, rcfg, seed) -> str:
    blob = json.dumps([mesh.content_hash, asdict(rcfg), seed], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:32]


def cameras_for(rcfg):
    return lp.make_cameras(rcfg.views, elevation=rcfg.elevation, fov=rcfg.fov, size=rcfg.image_size)


def shape_seeds(mesh, rcfg, seed):
    """Seeds keyed by geometry, so duplicated shapes share seed points."""
    base = sample_surface(mesh, rcfg.seeds, derive_seed(seed, mesh.content_hash, "seeds"))
    dense = sample_surface(mesh, rcfg.seeds * rcfg.dense_factor,
                           derive_seed(seed, mesh.content_hash, "dense"))
    return base, dense


def render_shape(mesh: TriMesh, rcfg, seed) -> RenderedShape:
    cams = cameras_for(rcfg)
    seeds, dense = shape_seeds(mesh, rcfg, seed)
    images, (proj, dproj) = lp.render_views(
        mesh, cams, math.radians(rcfg.sharp_threshold_deg), (seeds, dense))
    raster = [np.clip(np.rint(im.pixels * 255), 0, 255).astype(np.uint8) for im in images]
    return RenderedShape(mesh.shape_id, mesh, seeds, dense, raster, proj, dproj, cams)


def _seeds_json(seeds: Seeds, proj):
    return {
        "positions": seeds.positions.tolist(),
        "face_index": seeds.face_index.tolist(),
        "barycentric": seeds.barycentric.tolist(),
        "seed_ids": seeds.seed_ids.tolist(),
        "projections": [
            [[ps.seed_id, ps.pixel[0], ps.pixel[1], ps.visible] for ps in view] for view in proj
        ],
    }


def _seeds_from_json(d, view_offset=0):
    seeds = Seeds(np.array(d["positions"]).reshape(-1, 3), np.array(d["face_index"], dtype=np.int64),
                  np.array(d["barycentric"]).reshape(-1, 3), np.array(d["seed_ids"], dtype=np.int64))
    proj = [[lp.ProjectedSeed(int(s), p, (u, v), bool(vis)) for s, u, v, vis in view]
            for p, view in enumerate(d["projections"])]
    return seeds, proj


def save_rendered(r: RenderedShape, folder, prefix="v") -> None:
    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    for p, im in enumerate(r.images):
        write_pgm(folder / f"{prefix}{p}.pgm", im)
    sidecar = {"shape_id": r.shape_id, "seeds": _seeds_json(r.seeds, r.projected),
               "dense": _seeds_json(r.dense_seeds, r.dense_projected)}
    (folder / "seeds.json").write_text(json.dumps(sidecar))


def load_rendered(folder, mesh: TriMesh, rcfg) -> RenderedShape:
    folder = Path(folder)
    side = json.loads((folder / "seeds.json").read_text())
    seeds, proj = _seeds_from_json(side["seeds"])
    dense, dproj = _seeds_from_json(side["dense"])
    images = [read_pgm(folder / f"v{p}.pgm") for p in range(rcfg.views)]
    return RenderedShape(mesh.shape_id, mesh, seeds, dense, images, proj, dproj, cameras_for(rcfg))


class RenderCache:
    """Content-addressed render store: in memory, optionally mirrored on disk."""

    def __init__(self, cache_dir=None):
        self.dir = Path(cache_dir) if cache_dir else None
        self.memory = {}
        self.renders_performed = 0

    def get(self, mesh: TriMesh, rcfg, seed) -> RenderedShape:
        return self.get_many([mesh], rcfg, seed)[0]

    def get_many(self, meshes, rcfg, seed, jobs=1):
        out = [None] * len(meshes)
        todo = []
        for i, m in enumerate(meshes):
            key = render_key(m, rcfg, seed)
            hit = self.memory.get(key)
            if hit is None and self.dir is not None and (self.dir / key / "seeds.json").exists():
                hit = load_rendered(self.dir / key, m, rcfg)
                self.memory[key] = hit
            if hit is not None:
                # the same geometry may appear under several ids
                out[i] = hit if hit.shape_id == m.shape_id else _rename(hit, m)
            else:
                todo.append((i, key, m))
        if todo:
            if jobs > 1 and len(todo) > 1:
                with ProcessPoolExecutor(jobs) as ex:
                    done = list(ex.map(render_shape, [m for _, _, m in todo],
                                       [rcfg] * len(todo), [seed] * len(todo)))
            else:
                done = [render_shape(m, rcfg, seed) for _, _, m in todo]
            for (i, key, m), r in zip(todo, done):
                self.renders_performed += 1
                self.memory[key] = r
                if self.dir is not None:
                    save_rendered(r, self.dir / key)
                out[i] = r
        return out


def _rename(r: RenderedShape, mesh: TriMesh) -> RenderedShape:
    return RenderedShape(mesh.shape_id, mesh, r.seeds, r.dense_seeds, r.images, r.projected,
                         r.dense_projected, r.cameras, r._maps)


def load_shapes(manifest) -> list[TriMesh]:
    return [normalize_upright(load_mesh(p, sid)) for p, sid in read_manifest(manifest)]


# -- analysis -----------------------------------------------------------------


@dataclass
class StyleRegion:
    shape_id: str
    face_scores: np.ndarray
    seed_ids: tuple = ()

    @property
    def faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_scores > 0)


@dataclass
class AnalysisState:
    iteration: int = 0
    bank: dict = field(default_factory=dict)  # view -> list[Patch]
    features: dict = field(default_factory=dict)  # view -> (matrix, filter ids, shape ids)
    model: object = None
    assignment: np.ndarray | None = None
    selected: set = field(default_factory=set)
    provenance: dict = field(default_factory=dict)  # cluster -> patch ids
    converged: bool = False


@dataclass
class StyleResult:
    shape_ids: list
    assignment: np.ndarray
    n_clusters: int
    mode: str
    style_patches: list  # Patch
    provenance: dict
    regions: list  # StyleRegion
    trace: list
    state: AnalysisState
    purity: float | None = None
    constraint_satisfaction: float | None = None
    n_labeled: int = 0
    config: RunConfig | None = None

    @property
    def assignment_map(self) -> dict:
        return {s: int(c) for s, c in zip(self.shape_ids, self.assignment)}


def encode_bank(rendered, bank, views):
    """Per-view feature matrices (5K, N) for the current filter bank."""
    out = {}
    ids = [r.shape_id for r in rendered]
    for p in views:
        filters = np.stack([pt.hog for pt in bank[p]])
        mat = np.stack([encode_map(r.hog_map(p), filters) for r in rendered], axis=1)
        out[p] = (mat, tuple(pt.patch_id for pt in bank[p]), tuple(ids))
    return out


def same_partition(a, b) -> bool:
    return a is not None and b is not None and np.array_equal(
        clu.canonical_labels(a), clu.canonical_labels(b))


def _pslf_config(fc, features, seed):
    m_min = min(mat.shape[0] for mat, _, _ in features.values())
    k = max(1, min(fc.n_factors, m_min))
    return PslfConfig.from_eta(k, fc.eta, lam=fc.lam, beta=fc.beta, gamma=fc.gamma,
                               max_iters=fc.max_iters, tol=fc.tol, restarts=fc.restarts,
                               rng_seed=seed)


def _cluster_round(mode, X, cfg, labels, constraints, ids, seed):
    """Fit PSLF on columns in manifest order and return (assignment, model, C)."""
    cc = cfg.cluster
    if mode == "labels":
        classes = sorted(set(labels.values()))
        lab_idx = [i for i, s in enumerate(ids) if s in labels]
        unl_idx = [i for i, s in enumerate(ids) if s not in labels]
        order = lab_idx + unl_idx
        Xo = [x[:, order] for x in X]
        Y = one_hot([classes.index(labels[ids[i]]) for i in lab_idx], len(classes))
        pcfg = _pslf_config(cfg.fusion, {p: (x, 0, 0) for p, x in enumerate(X)}, seed)
        model, W = fit_labeled(Xo, Y, pcfg)
        assign = np.empty(len(ids), dtype=np.int64)
        assign[lab_idx] = Y.argmax(0)
        if unl_idx:
            # NNLS in the basis-induced metric, the same geometry used for clustering
            root = model.metric_root()
            pred = predict_labels(root @ W, (root @ model.fused())[:, len(lab_idx):])
            assign[unl_idx] = pred.labels
        return assign, model, len(classes)
    pcfg = _pslf_config(cfg.fusion, {p: (x, 0, 0) for p, x in enumerate(X)}, seed)
    model = fit_unsupervised(X, pcfg)
    Z = model.embedding()
    assign, C = clu.spectral_cluster(Z, cc.c_max, seed % (2**32))
    if mode == "triplets":
        C = max(C, 2)
        A = clu.similarity_from_features(Z)
        Ap = clu.apply_triplets(A, constraints, ids)
        # warm start from the spectral partition of the unmodified similarity
        ind = clu.symnmf_cluster(Ap, C, seed % (2**32), init=assign)
        assign = clu.canonical_labels(ind.labels)
        C = len(np.unique(assign))
    return assign, model, C


def run_analysis(shapes, mode: str = "unsupervised", constraints=None, config: RunConfig | None = None,
                 truth: dict | None = None, cache: RenderCache | None = None) -> StyleResult:
    """Full cluster-and-select analysis over a shape collection.

    ``shapes`` is a manifest path or a list of normalized TriMesh objects with
    unique ids. ``constraints`` is a dict shape_id -> class name (labels mode)
    or a list of (a, b, c) triplets / ConstraintSet (triplets mode).
    """
    cfg = config or RunConfig()
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    meshes = load_shapes(shapes) if isinstance(shapes, (str, Path)) else list(shapes)
    if len(meshes) < 2:
        raise ValueError("need at least two shapes")
    input_ids = [m.shape_id for m in meshes]
    if len(set(input_ids)) != len(input_ids):
        raise ValueError("shape ids must be unique")
    # work in id order so the outcome does not depend on manifest order
    meshes = sorted(meshes, key=lambda m: m.shape_id)
    ids = [m.shape_id for m in meshes]
    labels, cset = {}, None
    if mode == "labels":
        labels = {k: v for k, v in dict(constraints or {}).items() if k in set(ids)}
        if not labels:
            raise ValueError("labels mode needs at least one labeled shape")
        if len(set(labels.values())) < 2:
            raise ValueError("labels mode needs at least two classes")
    elif mode == "triplets":
        if isinstance(constraints, clu.ConstraintSet):
            cset = constraints
        else:
            trip = [t for t in (constraints or ()) if set(t) <= set(ids)]
            if not trip:
                raise ValueError("triplets mode needs at least one triplet")
            cset = clu.decompose_triplets(trip)
        if len(cset) == 0:
            raise ValueError("triplets mode needs at least one usable constraint")

    cache = cache if cache is not None else RenderCache(cfg.paths.cache_dir)
    rendered = cache.get_many(meshes, cfg.render, cfg.seed, jobs=cfg.jobs)
    P = cfg.render.views
    pc, cc = cfg.patches, cfg.cluster

    pools = {p: [] for p in range(P)}
    for r in rendered:
        for p in range(P):
            pools[p] += sample_patches(r.line_image(p), r.hog_map(p), r.projected[p], pc.size, pc.min_ink)
    views = [p for p in range(P) if pools[p]]
    if not views:
        raise ValueError("no patches could be sampled from any view")
    state = AnalysisState()
    state.bank = {p: preselect_kmeans(pools[p], pc.k, derive_seed(cfg.seed, "kmeans", p) % (2**32),
                                      pc.kmeans_iters) for p in views}
    trace = []
    prev_assign, prev_sel = None, None
    for it in range(cc.max_rounds):
        state.iteration = it
        feats = encode_bank(rendered, state.bank, views)
        X = [feats[p][0] for p in views]
        seed = derive_seed(cfg.seed, "round", it)
        assign, model, C = _cluster_round(mode, X, cfg, labels, cset, ids, seed)
        support = compute_support(feats, cc.tau_s)
        col = {pid: j for j, pid in enumerate(support.patch_ids)}
        selected, provenance = set(), {}
        for p in views:
            cols = [col[pt.patch_id] for pt in state.bank[p]]
            sel = reselect_discriminant(support.x[:, cols], assign, cc.mu)
            for lab, js in sel.selected.items():
                chosen = [state.bank[p][j].patch_id for j in js]
                selected.update(chosen)
                provenance.setdefault(int(lab), set()).update(chosen)
        new_bank = {p: [pt for pt in state.bank[p] if pt.patch_id in selected] or state.bank[p]
                    for p in views}
        churn = (len(selected ^ prev_sel) / max(len(selected), 1)) if prev_sel is not None else 1.0
        stable = same_partition(assign, prev_assign) and churn < cc.churn
        entry = {
            "iteration": it,
            "n_clusters": int(C),
            "n_patches": int(sum(len(b) for b in state.bank.values())),
            "n_selected": len(selected),
            "churn": float(churn),
            "objective": float(model.objective_trace[-1]),
            "pslf_iterations": len(model.objective_trace) - 1,
            "assignment": [int(a) for a in assign],
        }
        if truth:
            entry["purity"] = clu.purity(assign, [truth[s] for s in ids])
        trace.append(entry)
        log.info("round %d: C=%d patches=%d selected=%d churn=%.3f%s", it, C, entry["n_patches"],
                 len(selected), churn, f" purity={entry['purity']:.3f}" if truth else "")
        state.features, state.model, state.assignment = feats, model, assign
        state.selected = selected
        state.provenance = {k: sorted(v) for k, v in sorted(provenance.items())}
        prev_assign, prev_sel = assign, selected
        if stable:
            state.converged = True
            break
        state.bank = new_bank

    all_patches = {pt.patch_id: pt for b in state.bank.values() for pt in b}
    style = [all_patches[pid] for pid in sorted(state.selected) if pid in all_patches]
    regions = backproject(style, rendered, cfg)
    back = [ids.index(s) for s in input_ids]
    for entry in trace:
        entry["assignment"] = [entry["assignment"][i] for i in back]
    result = StyleResult(input_ids, state.assignment[back], int(len(np.unique(state.assignment))), mode,
                         style, state.provenance, [regions[i] for i in back], trace, state, config=cfg,
                         n_labeled=len(labels))
    if truth:
        result.purity = clu.purity(result.assignment, [truth[s] for s in input_ids])
    if cset is not None:
        result.constraint_satisfaction = cset.satisfaction(result.assignment_map)
    return result


# -- backprojection ----------------------------------------------------------


def _unit_hogs(patches):
    if not patches:
        return np.zeros((0, 0))
    m = np.stack([p.hog.reshape(-1) for p in patches])
    n = np.linalg.norm(m, axis=1, keepdims=True)
    return np.divide(m, n, out=np.zeros_like(m), where=n > 0)


def match_counts(candidates, style_patches, tau_b) -> np.ndarray:
    """Boolean mask: candidate patch has HOG cosine >= tau_b to some style patch."""
    if not candidates or not style_patches:
        return np.zeros(len(candidates), dtype=bool)
    sim = _unit_hogs(candidates) @ _unit_hogs(style_patches).T
    return sim.max(axis=1) >= tau_b


def _ball_faces(mesh: TriMesh, center, radius, face_index):
    d = np.linalg.norm(mesh.face_centroids - center, axis=1)
    hit = d <= radius
    hit[face_index] = True
    return hit


def _view_patches(r: RenderedShape, cfg, dense):
    proj = r.dense_projected if dense else r.projected
    return {p: sample_patches(r.line_image(p), r.hog_map(p), proj[p], cfg.patches.size,
                              cfg.patches.min_ink, tag="d" if dense else "s")
            for p in range(len(r.images))}


def dense_patches(r: RenderedShape, cfg):
    """Patches at the 3x re-sampled seeds, per view."""
    return _view_patches(r, cfg, dense=True)


def backproject(style_patches, rendered, cfg: RunConfig) -> list[StyleRegion]:
    """Per-face style scores: one vote per contributing (patch, view) pair.

    On every shape, patches at the original and at the densely re-sampled seeds
    that resemble some style patch (HOG cosine at least tau_b) mark a ball
    around their seeds. A style patch matches itself, so its own seed is always
    marked, and identical shapes receive identical regions whichever copy the
    patch came from. The ball radius is half the patch width back-projected at
    the seed depth.
    """
    half = cfg.patches.size / 2
    tau_b = cfg.cluster.tau_b
    regions = []
    for r in rendered:
        scores = np.zeros(r.mesh.n_faces)
        contrib = []

        def mark(seeds, seed_id, view, tag):
            pos = seeds.positions[seed_id]
            cam = r.cameras[view]
            radius = half * cam.units_per_pixel(r.seed_depth(view, pos))
            scores[_ball_faces(r.mesh, pos, radius, seeds.face_index[seed_id])] += 1
            contrib.append(f"{tag}{seed_id}@v{view}")

        if style_patches:
            for seeds, dense in ((r.seeds, False), (r.dense_seeds, True)):
                for p, cands in _view_patches(r, cfg, dense).items():
                    for pt, ok in zip(cands, match_counts(cands, style_patches, tau_b)):
                        if ok:
                            mark(seeds, pt.seed_id, p, "d" if dense else "s")
        regions.append(StyleRegion(r.shape_id, scores, tuple(contrib)))
    return regions


# -- export -------------------------------------------------------------------

SUMMARY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "mode", "seed", "n_shapes", "n_clusters", "cluster_sizes", "n_labeled",
                 "purity", "constraint_satisfaction", "converged", "iterations",
                 "n_style_patches", "style_patches_per_cluster", "trace", "config"],
    "properties": {
        "version": {"type": "string"},
        "mode": {"enum": list(MODES)},
        "seed": {"type": "integer"},
        "n_shapes": {"type": "integer", "minimum": 2},
        "n_clusters": {"type": "integer", "minimum": 1},
        "cluster_sizes": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 1}},
        "n_labeled": {"type": "integer", "minimum": 0},
        "purity": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "constraint_satisfaction": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "converged": {"type": "boolean"},
        "iterations": {"type": "integer", "minimum": 1},
        "n_style_patches": {"type": "integer", "minimum": 0},
        "style_patches_per_cluster": {"type": "object",
                                      "additionalProperties": {"type": "integer", "minimum": 0}},
        "trace": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["iteration", "n_clusters", "n_patches", "n_selected", "churn",
                             "objective", "pslf_iterations", "assignment"],
                "properties": {
                    "iteration": {"type": "integer", "minimum": 0},
                    "n_clusters": {"type": "integer", "minimum": 1},
                    "n_patches": {"type": "integer", "minimum": 0},
                    "n_selected": {"type": "integer", "minimum": 0},
                    "churn": {"type": "number", "minimum": 0},
                    "objective": {"type": "number"},
                    "pslf_iterations": {"type": "integer", "minimum": 0},
                    "assignment": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "purity": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
        "config": {"type": "object"},
    },
}


def summary_dict(result: StyleResult) -> dict:
    from . import __version__

    cfg = result.config or RunConfig()
    sizes = np.bincount(result.assignment)
    return {
        "version": __version__,
        "mode": result.mode,
        "seed": int(cfg.seed),
        "n_shapes": len(result.shape_ids),
        "n_clusters": int(result.n_clusters),
        "cluster_sizes": {str(c): int(n) for c, n in enumerate(sizes) if n},
        "n_labeled": int(result.n_labeled),
        "purity": result.purity,
        "constraint_satisfaction": result.constraint_satisfaction,
        "converged": bool(result.state.converged),
        "iterations": len(result.trace),
        "n_style_patches": len(result.style_patches),
        "style_patches_per_cluster": {str(k): len(v) for k, v in result.provenance.items()},
        "trace": result.trace,
        "config": cfg.to_dict(),
    }


def validate_summary(summary: dict) -> None:
    import jsonschema

    jsonschema.validate(summary, SUMMARY_SCHEMA)


def _box(img, window, value=128):
    r, c, s = window
    h, w = img.shape
    r1, c1 = min(r + s - 1, h - 1), min(c + s - 1, w - 1)
    img[r, c : c1 + 1] = img[r1, c : c1 + 1] = value
    img[r : r1 + 1, c] = img[r : r1 + 1, c1] = value


def _patch_record(pt: Patch, selected=False, clusters=()):
    return {"patch_id": pt.patch_id, "shape_id": pt.shape_id, "seed_id": int(pt.seed_id),
            "view_index": int(pt.view_index), "window": [int(v) for v in pt.window],
            "selected": bool(selected), "clusters": list(clusters)}


def _dump_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def export_result(result: StyleResult, out_dir, rendered=None) -> Path:
    """Write the run directory; returns its path.

    Layout: assignments.csv, summary.json, regions/<shape>.json, filter_bank.json
    plus filter_bank.bin (HOG blocks), style_patches.bin, features/view_<p>.bin,
    support.bin, model/, images/<shape>_v<k>.pgm (style boxes drawn at value
    128) and run_manifest.json with sha256 hashes of every artifact.
    """
    from datetime import datetime, timezone

    from .io import sha256_file, write_csv, write_matrix

    out = Path(out_dir)
    for sub in ("regions", "features", "model", "images"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    state = result.state

    write_csv(out / "assignments.csv", ["shape_id", "cluster"],
              [[s, int(c)] for s, c in zip(result.shape_ids, result.assignment)])

    for reg in result.regions:
        faces = reg.faces
        _dump_json(out / "regions" / f"{reg.shape_id}.json", {
            "shape_id": reg.shape_id, "n_faces": int(len(reg.face_scores)),
            "faces": faces.tolist(), "scores": reg.face_scores[faces].tolist(),
            "seed_ids": list(reg.seed_ids)})

    clusters_of = {}
    for lab, pids in result.provenance.items():
        for pid in pids:
            clusters_of.setdefault(pid, []).append(int(lab))
    bank = [pt for p in sorted(state.bank) for pt in state.bank[p]]
    sel = {pt.patch_id for pt in result.style_patches}
    _dump_json(out / "filter_bank.json", [_patch_record(pt, pt.patch_id in sel, clusters_of.get(pt.patch_id, ()))
                                          for pt in bank])
    if bank:
        write_matrix(out / "filter_bank.bin", np.stack([pt.hog for pt in bank]),
                     patch_ids=[pt.patch_id for pt in bank])
    style = result.style_patches
    _dump_json(out / "style_patches.json", [_patch_record(pt, True, clusters_of.get(pt.patch_id, ()))
                                            for pt in style])
    if style:
        write_matrix(out / "style_patches.bin", np.stack([pt.hog for pt in style]),
                     patch_ids=[pt.patch_id for pt in style])

    for p, (mat, fids, sids) in sorted(state.features.items()):
        write_matrix(out / "features" / f"view_{p}.bin", mat, view=int(p), filter_ids=list(fids),
                     shape_ids=list(sids))
    if state.features:
        sup = compute_support(state.features, (result.config or RunConfig()).cluster.tau_s)
        write_matrix(out / "support.bin", sup.x, tau_s=sup.tau_s, shape_ids=list(sup.shape_ids),
                     patch_ids=list(sup.patch_ids))
    if state.model is not None:
        save_model(state.model, out / "model")

    if rendered is not None:
        by_view = {}
        for pt in style:
            by_view.setdefault((pt.shape_id, pt.view_index), []).append(pt)
        for r in rendered:
            for k, im in enumerate(r.images):
                img = im.copy()
                for pt in by_view.get((r.shape_id, k), ()):
                    _box(img, pt.window)
                write_pgm(out / "images" / f"{r.shape_id}_v{k}.pgm", img)

    summary = summary_dict(result)
    validate_summary(summary)
    _dump_json(out / "summary.json", summary)

    files = sorted(f for f in out.rglob("*") if f.is_file() and f.name != "run_manifest.json")
    manifest = {"created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                "artifacts": {f.relative_to(out).as_posix(): sha256_file(f) for f in files}}
    _dump_json(out / "run_manifest.json", manifest)
    return out


def save_model(model, folder) -> None:
    """PSLF model directory: config.json, matrices as header-prefixed binaries, trace CSV."""
    from .io import write_csv, write_matrix

    folder = Path(folder)
    folder.mkdir(parents=True, exist_ok=True)
    _dump_json(folder / "config.json", dict(asdict(model.config), n_views=model.n_views))
    for p in range(model.n_views):
        write_matrix(folder / f"U_{p}.bin", model.U[p])
        write_matrix(folder / f"Vs_{p}.bin", model.Vs[p])
    write_matrix(folder / "Vc.bin", model.Vc)
    write_matrix(folder / "pi.bin", model.pi)
    write_csv(folder / "objective_trace.csv", ["iteration", "objective"],
              [[i, repr(float(v))] for i, v in enumerate(model.objective_trace)])


def load_model(folder):
    from .io import read_matrix
    from .pslf import PslfModel

    folder = Path(folder)
    conf = json.loads((folder / "config.json").read_text())
    P = conf.pop("n_views")
    U = [read_matrix(folder / f"U_{p}.bin")[0] for p in range(P)]
    Vs = [read_matrix(folder / f"Vs_{p}.bin")[0] for p in range(P)]
    lines = (folder / "objective_trace.csv").read_text().splitlines()[1:]
    trace = [float(line.split(",")[1]) for line in lines if line]
    return PslfModel(U, Vs, read_matrix(folder / "Vc.bin")[0], read_matrix(folder / "pi.bin")[0],
                     trace, PslfConfig(**conf))


def load_regions(run_dir) -> dict:
    """shape_id -> StyleRegion from an exported run directory."""
    out = {}
    for f in sorted((Path(run_dir) / "regions").glob("*.json")):
        d = json.loads(f.read_text())
        scores = np.zeros(d["n_faces"])
        scores[np.asarray(d["faces"], dtype=np.int64)] = d["scores"]
        out[d["shape_id"]] = StyleRegion(d["shape_id"], scores, tuple(d["seed_ids"]))
    return out


def load_style_patches(run_dir) -> list[Patch]:
    from .io import read_matrix

    run_dir = Path(run_dir)
    recs = json.loads((run_dir / "style_patches.json").read_text())
    if not recs:
        return []
    hogs, head = read_matrix(run_dir / "style_patches.bin")
    if head["patch_ids"] != [r["patch_id"] for r in recs]:
        raise ValueError(f"{run_dir}: style patch files disagree")
    return [Patch(r["patch_id"], r["shape_id"], r["seed_id"], r["view_index"], tuple(r["window"]), h)
            for r, h in zip(recs, hogs)]
