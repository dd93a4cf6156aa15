"""Command line entry point.

    styleco synth|render|analyze|simplify|bestview --config FILE [--mode M] [--seed S] [--jobs J]

Exit codes: 0 success, 1 some shapes failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline as pl
from .apps import best_view, simplify, simplify_stats
from .config import ConfigError, RunConfig, load_config
from .io import read_constraints, read_manifest, read_truth, write_csv, write_pgm
from .mesh import load_mesh, normalize_upright, save_obj

log = logging.getLogger("styleco")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def _load_shapes(cfg: RunConfig):
    """Normalized meshes from the manifest plus a list of (shape_id, error) failures."""
    if not cfg.paths.manifest:
        raise ConfigError("paths.manifest is required")
    try:
        entries = read_manifest(cfg.paths.manifest)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"manifest: {exc}") from exc
    meshes, failed = [], []
    for path, sid in entries:
        try:
            meshes.append(normalize_upright(load_mesh(path, sid)))
        except (OSError, ValueError) as exc:
            failed.append((sid, str(exc)))
            log.error("shape %s: %s", sid, exc)
    return meshes, failed


def _cache(cfg: RunConfig):
    d = cfg.paths.cache_dir or str(Path(cfg.paths.out_dir) / "cache")
    return pl.RenderCache(d)


def _report(out_dir, failed):
    path = Path(out_dir) / "failures.csv"
    if failed:
        write_csv(path, ["shape_id", "error"], failed)
        print(f"{len(failed)} shape(s) failed; see {path}", file=sys.stderr)
    elif path.exists():
        path.unlink()
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_synth(cfg: RunConfig, args) -> int:
    from . import synth

    sc = cfg.synth
    shapes = synth.make_benchmark(sc.n_shapes, seed=cfg.seed, subdiv=sc.subdiv, yaw=sc.yaw)
    out = synth.write_benchmark(cfg.paths.out_dir, shapes, sc.label_fraction or None,
                                sc.n_triplets or None, cfg.seed)
    print(f"wrote {len(shapes)} shapes to {out}")
    return EXIT_OK


def cmd_render(cfg: RunConfig, args) -> int:
    meshes, failed = _load_shapes(cfg)
    out = Path(cfg.paths.out_dir) / "renders"
    out.mkdir(parents=True, exist_ok=True)
    cache = _cache(cfg)
    rendered = []
    if meshes:
        try:
            rendered = cache.get_many(meshes, cfg.render, cfg.seed, jobs=cfg.jobs)
        except Exception:  # fall back to one at a time to isolate the failing shapes
            for m in meshes:
                try:
                    rendered.append(cache.get(m, cfg.render, cfg.seed))
                except Exception as exc:  # noqa: BLE001
                    failed.append((m.shape_id, str(exc)))
    for r in rendered:
        for k, im in enumerate(r.images):
            write_pgm(out / f"{r.shape_id}_v{k}.pgm", im)
        side = {"shape_id": r.shape_id, "seeds": pl._seeds_json(r.seeds, r.projected)}
        (out / f"{r.shape_id}.seeds.json").write_text(json.dumps(side))
    print(f"rendered {len(rendered)} shapes x {cfg.render.views} views "
          f"({cache.renders_performed} renders performed)")
    return _report(cfg.paths.out_dir, failed)


def _constraints(cfg: RunConfig):
    labels, triplets = {}, []
    if cfg.paths.constraints:
        try:
            triplets, labels = read_constraints(cfg.paths.constraints)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"constraints: {exc}") from exc
    if cfg.mode == "labels":
        if not labels:
            raise ConfigError("mode 'labels' needs L records in paths.constraints")
        return labels
    if cfg.mode == "triplets":
        if not triplets:
            raise ConfigError("mode 'triplets' needs T records in paths.constraints")
        return triplets
    return None


def cmd_analyze(cfg: RunConfig, args) -> int:
    constraints = _constraints(cfg)
    truth = None
    if cfg.paths.truth:
        try:
            truth = read_truth(cfg.paths.truth)
        except OSError as exc:
            raise ConfigError(f"truth: {exc}") from exc
    meshes, failed = _load_shapes(cfg)
    if truth is not None:
        missing = [m.shape_id for m in meshes if m.shape_id not in truth]
        if missing:
            raise ConfigError(f"ground truth lacks {missing[:5]}")
    cache = _cache(cfg)
    try:
        result = pl.run_analysis(meshes, cfg.mode, constraints, cfg, truth, cache)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rendered = cache.get_many(meshes, cfg.render, cfg.seed)
    out = pl.export_result(result, cfg.paths.out_dir, rendered)
    msg = f"{cfg.mode}: {len(meshes)} shapes, {result.n_clusters} clusters, {len(result.trace)} rounds"
    if result.purity is not None:
        msg += f", purity {result.purity:.3f}"
    if result.constraint_satisfaction is not None:
        msg += f", constraint satisfaction {result.constraint_satisfaction:.3f}"
    if result.n_labeled:
        msg += f", N_l={result.n_labeled}"
    print(msg)
    print(f"results in {out}")
    return _report(out, failed)


def _run_dir(cfg, args) -> Path:
    d = Path(args.run_dir or cfg.paths.out_dir)
    if not (d / "summary.json").exists():
        raise ConfigError(f"{d} is not a completed analysis run directory")
    return d


def cmd_simplify(cfg: RunConfig, args) -> int:
    run_dir = _run_dir(cfg, args)
    scfg = cfg.simplify
    if args.reduction is not None:
        scfg = type(scfg)(args.reduction, scfg.style_penalty, scfg.mode, scfg.best_effort)
    regions = pl.load_regions(run_dir)
    meshes, failed = _load_shapes(cfg)
    out = run_dir / "simplified"
    out.mkdir(exist_ok=True)
    rows = []
    for m in meshes:
        reg = regions.get(m.shape_id)
        try:
            if reg is None:
                raise ValueError("no style region in run directory")
            res = simplify(m, reg, scfg)
        except ValueError as exc:
            failed.append((m.shape_id, str(exc)))
            log.error("shape %s: %s", m.shape_id, exc)
            continue
        save_obj(res.mesh, out / f"{m.shape_id}.obj")
        st = simplify_stats(res)
        rows.append([m.shape_id, st["faces_before"], st["faces_after"], st["style_faces_before"],
                     st["style_faces_after"], f"{st['total_reduction']:.6f}",
                     f"{st['style_reduction']:.6f}"])
    write_csv(run_dir / "simplify_stats.csv",
              ["shape_id", "faces_before", "faces_after", "style_faces_before", "style_faces_after",
               "total_reduction", "style_reduction"], rows)
    print(f"simplified {len(rows)} shapes into {out}")
    return _report(run_dir, failed)


def cmd_bestview(cfg: RunConfig, args) -> int:
    run_dir = _run_dir(cfg, args)
    style = pl.load_style_patches(run_dir)
    meshes, failed = _load_shapes(cfg)
    rendered = _cache(cfg).get_many(meshes, cfg.render, cfg.seed, jobs=cfg.jobs)
    rows = []
    for r in rendered:
        try:
            choice = best_view(pl.dense_patches(r, cfg), style, r.cameras, cfg.cluster.tau_b)
        except ValueError as exc:
            failed.append((r.shape_id, str(exc)))
            continue
        rows.append([r.shape_id, choice.view_index, choice.count])
    write_csv(run_dir / "bestview.csv", ["shape_id", "view_index", "match_count"], rows)
    print(f"best views for {len(rows)} shapes in {run_dir / 'bestview.csv'}")
    return _report(run_dir, failed)


COMMANDS = {"synth": cmd_synth, "render": cmd_render, "analyze": cmd_analyze,
            "simplify": cmd_simplify, "bestview": cmd_bestview}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="styleco", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML or JSON run configuration")
        p.add_argument("--mode", choices=pl.MODES)
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--out", help="override paths.out_dir")
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("simplify", "bestview"):
            p.add_argument("--run-dir", help="analysis run directory (default paths.out_dir)")
        if name == "simplify":
            p.add_argument("--reduction", type=float, help="override simplify.target_reduction")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        over = {k: v for k, v in (("mode", args.mode), ("seed", args.seed), ("jobs", args.jobs))
                if v is not None}
        if args.out:
            over["paths__out_dir"] = args.out
        cfg = cfg.replace(**over) if over else cfg
        Path(cfg.paths.out_dir).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
