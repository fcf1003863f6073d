"""Command-line pipeline: ingest, tile, synth, simulate, baseline, evaluate, render.

Exit codes: 0 success, 1 usage error, 2 data or format error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import baselines, coverage, geo, metrics, store, tiles
from .config import build_config, derive_seed
from .errors import FormatError, InputDomainError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_MAX_ROW_WARNINGS = 20


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tile_filename(tile_id: int) -> str:
    return f"tile_{tile_id:06d}.cmt"


def _read_points_csv(path: Path, radio: str | None) -> tuple[list[geo.GeoPoint], dict]:
    """Parse a headered CSV with lon/lat columns; bad rows are skipped and
    counted, exact duplicate coordinates collapse to one point."""
    stats = {"rows": 0, "bad": 0, "filtered": 0, "duplicates": 0}
    warnings = []
    seen = set()
    points = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputDomainError(f"{path}: empty file, expected a CSV header")
        cols = [c.strip().lower() for c in reader.fieldnames]
        if "lon" not in cols or "lat" not in cols:
            raise InputDomainError(f"{path}: header must include 'lon' and 'lat', got {cols}")
        if radio is not None and "radio" not in cols:
            raise InputDomainError(f"{path}: --radio given but no 'radio' column present")
        for lineno, row in enumerate(reader, start=2):
            stats["rows"] += 1
            clean = {k.strip().lower(): (v or "").strip() for k, v in row.items()
                     if k is not None}
            if radio is not None and clean.get("radio", "") != radio:
                stats["filtered"] += 1
                continue
            try:
                p = geo.GeoPoint(float(clean["lat"]), float(clean["lon"]))
            except (ValueError, KeyError, InputDomainError) as e:
                stats["bad"] += 1
                if len(warnings) < _MAX_ROW_WARNINGS:
                    warnings.append(f"line {lineno}: skipped ({e})")
                continue
            key = (p.lat_deg, p.lon_deg)
            if key in seen:
                stats["duplicates"] += 1
                continue
            seen.add(key)
            points.append(p)
    for w in warnings:
        print(w, file=sys.stderr)
    if stats["bad"] > _MAX_ROW_WARNINGS:
        print(f"... {stats['bad'] - _MAX_ROW_WARNINGS} further bad rows", file=sys.stderr)
    considered = stats["rows"] - stats["filtered"]
    if considered > 0 and stats["bad"] > 0.5 * considered:
        raise InputDomainError(
            f"{stats['bad']} of {considered} rows unusable (>50%), refusing to continue")
    return points, stats


def cmd_ingest(args) -> int:
    points, stats = _read_points_csv(Path(args.csv), args.radio)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = ["lon,lat"] + [f"{p.lon_deg!r},{p.lat_deg!r}" for p in points]
    store.atomic_write(out, ("\n".join(lines) + "\n").encode())
    print(f"read {stats['rows']} rows: {len(points)} points kept, "
          f"{stats['bad']} bad, {stats['duplicates']} duplicates, "
          f"{stats['filtered']} filtered by radio")
    print(f"wrote {out}")
    return EXIT_OK


def _write_dataset(out_dir: Path, cfg, kept: list[tiles.RoiTile], source: str) -> None:
    assignment = tiles.split(kept, cfg.train_fraction, derive_seed(cfg.seed, "split"))
    tile_dir = out_dir / "tiles"
    tile_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for t in kept:
        rel = f"tiles/{_tile_filename(t.tile_id)}"
        store.write_tile(out_dir / rel, t, [])
        entries.append(store.TileEntry(
            tile_id=t.tile_id, path=rel, bs_count=t.bs_count,
            split=assignment.assignment[t.tile_id], sha256=store.sha256_file(out_dir / rel)))
    manifest = store.DatasetManifest(
        grid=cfg.grid, alpha=cfg.alpha, noise_over_power=cfg.noise_over_power,
        gamma_db=list(cfg.gamma_db), channel="rayleigh_mean1", tiles=entries,
        params={"seed": cfg.seed, "b_min": cfg.b_min, "b_max": cfg.b_max,
                "train_fraction": cfg.train_fraction, "source": source})
    manifest.save(out_dir / "manifest.json")
    n_train = len(assignment.ids("train"))
    print(f"wrote {len(kept)} tiles ({n_train} train, {len(kept) - n_train} test) "
          f"and manifest to {out_dir}")


def cmd_tile(args, cfg) -> int:
    points, _ = _read_points_csv(Path(args.points), None)
    if not points:
        raise InputDomainError("point set is empty")
    lats = [p.lat_deg for p in points]
    lons = [p.lon_deg for p in points]
    bbox = (geo.GeoPoint(min(lats), min(lons)), geo.GeoPoint(max(lats), max(lons)))
    frames = geo.partition(bbox, cfg.roi_side_m)
    assigned, skipped = geo.assign(points, frames)
    all_tiles = [tiles.rasterize(assigned[fid], cfg.grid, tile_id=fid)
                 for fid in sorted(assigned)]
    kept = tiles.filter_tiles(all_tiles, cfg.b_min, cfg.b_max)
    print(f"{len(frames)} frames, {len(all_tiles)} with points, "
          f"{len(kept)} kept after count filter [{cfg.b_min}, {cfg.b_max}], "
          f"{skipped} points outside all frames")
    if not kept:
        raise InputDomainError(
            f"no tile has a BS count inside [{cfg.b_min}, {cfg.b_max}]; "
            "check roi_side_m against the deployment density")
    _write_dataset(Path(args.out), cfg, kept, source=f"csv:{args.points}")
    return EXIT_OK


def cmd_synth(args, cfg) -> int:
    if args.count < 1:
        raise InputDomainError(f"count must be >= 1, got {args.count}")
    gen = tiles.synth_ppp if args.process == "ppp" else tiles.synth_clustered
    made = [gen(args.density, cfg.grid, derive_seed(cfg.seed, "synth", i), tile_id=i)
            for i in range(args.count)]
    kept = tiles.filter_tiles(made, cfg.b_min, cfg.b_max)
    print(f"generated {len(made)} tiles, {len(made) - len(kept)} rejected by "
          f"count filter [{cfg.b_min}, {cfg.b_max}]")
    if not kept:
        raise InputDomainError("every synthetic tile fell outside the count filter")
    _write_dataset(Path(args.out), cfg, kept,
                   source=f"synth density={args.density!r} count={args.count}")
    return EXIT_OK


def _simulate_one(task) -> tuple[int, str]:
    path, side_m, alpha, noise, gamma_dbs = task
    tile, _ = store.read_tile(path, side_m)
    params = [coverage.ChannelParams.from_db(g, alpha, noise) for g in gamma_dbs]
    manifolds = coverage.manifold_set(tile, params)
    store.write_tile(path, tile, manifolds)
    return tile.tile_id, store.sha256_file(path)


def cmd_simulate(args, cfg) -> int:
    base = Path(args.dataset)
    manifest = store.DatasetManifest.load(base / "manifest.json")
    gamma_dbs = list(cfg.gamma_db) if args.gamma_db is not None else list(manifest.gamma_db)
    tasks = [(str(base / t.path), manifest.grid.side_m, manifest.alpha,
              manifest.noise_over_power, gamma_dbs) for t in manifest.tiles]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = dict(pool.map(_simulate_one, tasks))
    else:
        results = dict(_simulate_one(t) for t in tasks)
    for entry in manifest.tiles:
        entry.sha256 = results[entry.tile_id]
    manifest.gamma_db = gamma_dbs
    manifest.save(base / "manifest.json")
    print(f"simulated {len(manifest.tiles)} tiles x {len(gamma_dbs)} thresholds")
    return EXIT_OK


def cmd_baseline(args, cfg) -> int:
    base = Path(args.dataset)
    manifest = store.DatasetManifest.load(base / "manifest.json")
    out_dir = Path(args.out) if args.out else base / "predictions" / args.predictor
    out_dir.mkdir(parents=True, exist_ok=True)
    for entry in manifest.tiles:
        tile, truths = store.read_tile(base / entry.path, manifest.grid.side_m)
        if args.predictor == "ppp":
            preds = [baselines.ppp_manifold(tile, coverage.ChannelParams.from_db(
                g, manifest.alpha, manifest.noise_over_power)) for g in manifest.gamma_db]
        else:
            if not truths:
                raise InputDomainError(
                    f"bfsg needs simulated manifolds; tile {entry.tile_id} has none "
                    "(run `covmap simulate` first)")
            preds = [baselines.bfsg_manifold(m) for m in truths]
        store.write_tile(out_dir / _tile_filename(entry.tile_id), tile, preds)
    print(f"wrote {args.predictor} predictions for {len(manifest.tiles)} tiles to {out_dir}")
    return EXIT_OK


def _manifolds_by_gamma(path: Path, side_m: float) -> dict[float, coverage.CoverageManifold]:
    _, manifolds = store.read_tile(path, side_m)
    return {round(m.gamma_db, 3): m for m in manifolds}


def cmd_evaluate(args, cfg) -> int:
    base = Path(args.dataset)
    manifest = store.DatasetManifest.load(base / "manifest.json")
    pred_dir = Path(args.pred)
    if not pred_dir.exists() and (base / "predictions" / args.pred).exists():
        pred_dir = base / "predictions" / args.pred
    ids = manifest.split_ids(args.split)
    if not ids:
        raise InputDomainError(f"split {args.split!r} selects no tiles")

    missing = [t for t in ids if not (pred_dir / _tile_filename(t)).exists()]
    if missing:
        raise InputDomainError(f"missing prediction files for tile_ids {missing}")

    truth: dict[float, dict[int, coverage.CoverageManifold]] = {}
    pred: dict[float, dict[int, coverage.CoverageManifold]] = {}
    for tid in ids:
        entry = manifest.entry(tid)
        t_by_g = _manifolds_by_gamma(base / entry.path, manifest.grid.side_m)
        if not t_by_g:
            raise InputDomainError(
                f"tile {tid} has no simulated manifolds (run `covmap simulate` first)")
        p_by_g = _manifolds_by_gamma(pred_dir / _tile_filename(tid), manifest.grid.side_m)
        for g, m in t_by_g.items():
            truth.setdefault(g, {})[tid] = m
        for g, m in p_by_g.items():
            pred.setdefault(g, {})[tid] = m

    if args.gamma_db is not None:
        wanted = [round(g, 3) for g in cfg.gamma_db]
    else:
        wanted = sorted(set(truth) & set(pred))
    if not wanted:
        raise InputDomainError("no threshold present in both truth and predictions")
    reports = []
    for g in wanted:
        if g not in truth or g not in pred:
            raise InputDomainError(f"gamma {g} dB not present in both truth and predictions")
        reports.append(metrics.dataset_error(pred[g], truth[g],
                                             predictor=pred_dir.name, gamma_db=g))

    doc = "[\n" + ",\n".join(r.to_json() for r in reports) + "\n]\n"
    if args.out:
        store.atomic_write(Path(args.out), doc.encode())
        print(f"wrote {args.out}")
    print(metrics.render_table(reports))
    return EXIT_OK


def cmd_render(args, cfg) -> int:
    def pick(path: Path) -> coverage.CoverageManifold:
        by_g = _manifolds_by_gamma(path, 1.0)
        key = round(args.gamma_db, 3)
        if key not in by_g:
            raise InputDomainError(
                f"{path} has no manifold at {args.gamma_db} dB; available: "
                f"{sorted(by_g) or 'none'}")
        return by_g[key]

    if args.triptych is not None:
        png = store.render_triptych(pick(Path(args.tile)), pick(Path(args.triptych)))
    elif args.source == "truth":
        png = store.render_png(pick(Path(args.tile)))
    else:
        png = store.render_png(pick(Path(args.source)))
    store.atomic_write(Path(args.out), png)
    print(f"wrote {args.out}")
    return EXIT_OK


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="root seed for all stage streams")
    p.add_argument("--roi-side-m", type=float, dest="roi_side_m")
    p.add_argument("--n-cells", type=int, dest="n_cells")
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma-db", dest="gamma_db",
                   help="comma-separated thresholds in dB, e.g. 0,5,10,15,20")
    p.add_argument("--noise-over-power", type=float, dest="noise_over_power")
    p.add_argument("--b-min", type=int, dest="b_min")
    p.add_argument("--b-max", type=int, dest="b_max")
    p.add_argument("--train-fraction", type=float, dest="train_fraction")
    p.add_argument("--jobs", type=int)


def _config_from_args(args) -> "PipelineConfig":
    overrides = {}
    for key in ("roi_side_m", "n_cells", "alpha", "noise_over_power", "b_min",
                "b_max", "train_fraction", "seed", "jobs"):
        overrides[key] = getattr(args, key, None)
    raw_gamma = getattr(args, "gamma_db", None)
    if raw_gamma is not None:
        if isinstance(raw_gamma, str):
            overrides["gamma_db"] = tuple(float(x) for x in raw_gamma.split(",") if x.strip())
        else:
            overrides["gamma_db"] = (float(raw_gamma),)
    return build_config(getattr(args, "config", None), overrides)


def make_parser() -> _Parser:
    parser = _Parser(prog="covmap",
                     description="BS locations to coverage-probability manifolds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and validate a BS location CSV")
    p.add_argument("csv")
    p.add_argument("--out", required=True, help="output point-set CSV")
    p.add_argument("--radio", help="keep only rows whose radio column equals this")

    p = sub.add_parser("tile", help="partition a point set into occupancy tiles")
    p.add_argument("points", help="point-set CSV from ingest")
    p.add_argument("--out", required=True, help="dataset directory")
    _add_config_flags(p)

    p = sub.add_parser("synth", help="generate synthetic tiles")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--density", type=float, required=True, help="BS per square meter")
    p.add_argument("--process", choices=("ppp", "clustered"), default="ppp",
                   help="uniform Poisson field or deployment-like clusters")
    p.add_argument("--out", required=True, help="dataset directory")
    _add_config_flags(p)

    p = sub.add_parser("simulate", help="compute ground-truth manifolds in place")
    p.add_argument("dataset", help="dataset directory containing manifest.json")
    _add_config_flags(p)

    p = sub.add_parser("baseline", help="write constant-manifold baseline predictions")
    p.add_argument("dataset")
    p.add_argument("--predictor", choices=("ppp", "bfsg"), required=True)
    p.add_argument("--out", help="prediction directory (default <dataset>/predictions/<name>)")
    _add_config_flags(p)

    p = sub.add_parser("evaluate", help="L1 error of predictions against truth")
    p.add_argument("dataset")
    p.add_argument("--pred", required=True,
                   help="prediction directory or bare predictor name")
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.add_argument("--out", help="write the JSON report here")
    _add_config_flags(p)

    p = sub.add_parser("render", help="render manifolds as grayscale PNG")
    p.add_argument("tile", help="tile file")
    p.add_argument("--gamma-db", type=float, dest="gamma_db", required=True)
    p.add_argument("--source", default="truth",
                   help="'truth' or a prediction tile file to render instead")
    p.add_argument("--triptych", help="prediction tile file; renders truth|pred|diff")
    p.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "ingest":
            return cmd_ingest(args)
        cfg = _config_from_args(args)
        if args.command == "tile":
            return cmd_tile(args, cfg)
        if args.command == "synth":
            return cmd_synth(args, cfg)
        if args.command == "simulate":
            return cmd_simulate(args, cfg)
        if args.command == "baseline":
            return cmd_baseline(args, cfg)
        if args.command == "evaluate":
            return cmd_evaluate(args, cfg)
        if args.command == "render":
            return cmd_render(args, cfg)
        parser.error(f"unknown command {args.command!r}")
    except (InputDomainError, FormatError, FileNotFoundError) as e:
        print(f"covmap: error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
