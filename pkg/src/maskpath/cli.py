"""Command-line interface.

Each pipeline stage is exposed as its own subcommand so stages can be run
and inspected independently; ``pipeline`` chains them. Exit codes: 0
success, 1 bad arguments or config, 2 I/O failure, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import (
    SalientPointSet,
    convex_hull,
    points_to_text,
    polygon_from_text,
    polygon_to_text,
    select_salient,
    vacuum_field,
)
from .config import PipelineConfig, read_config
from .errors import FileFormatError
from .marker import rasterize_path
from .mask_core import BinaryMask, connected_components, tile
from .metrics import (
    MatchPolicy,
    compute_metrics,
    format_metrics_table,
    metrics_csv,
)
from .pathgen import plan_path, read_waypoints, write_waypoints
from .pgm import read_pgm, write_pgm
from .pipeline import evaluate_dirs, read_counts_file, run_pipeline
from .transform import IDENTITY_CALIBRATION, read_calibration

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we use 1
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _parse_selection(raw: str) -> frozenset[int]:
    try:
        values = frozenset(int(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise ValueError(f"selection must be comma-separated integers, got {raw!r}") from None
    if not values:
        raise ValueError("selection must not be empty")
    return values


def _load_calibration(path_arg):
    return read_calibration(path_arg) if path_arg else IDENTITY_CALIBRATION


def _build_config(args) -> PipelineConfig:
    cfg = read_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    for flag, key in (
        ("tile_size", "tile_size"),
        ("connectivity", "connectivity"),
        ("min_size", "min_region_size"),
        ("min_step", "min_step_mm"),
        ("max_points", "max_points"),
        ("calibration", "calibration"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "selection", None) is not None:
        overrides["selection_set"] = _parse_selection(args.selection)
    if getattr(args, "interpolate", False):
        overrides["interpolate"] = True
    if getattr(args, "pixel_center", False):
        overrides["pixel_center"] = True
    return replace(cfg, **overrides) if overrides else cfg


def _cmd_binarize(args) -> int:
    mask = read_pgm(args.input)
    write_pgm(args.output, mask, format=args.format)
    print(f"{args.output}: {mask.width}x{mask.height}, {mask.foreground_count()} foreground px")
    return EXIT_OK


def _cmd_tile(args) -> int:
    if args.input:
        mask = read_pgm(args.input)
        width, height = mask.width, mask.height
    else:
        if args.width is None or args.height is None:
            raise ValueError("either --input or both --width and --height are required")
        width, height = args.width, args.height
        mask = None
    grid = tile(width, height, args.tile_size)
    for index, t in enumerate(grid.tiles):
        print(f"{index} {t.origin_x} {t.origin_y} {t.width} {t.height}")
    if mask is not None and args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(args.input).stem
        for index, t in enumerate(grid.tiles):
            sub = mask.crop(t.origin_x, t.origin_y, t.width, t.height)
            write_pgm(out / f"{stem}_tile{index:03d}_x{t.origin_x}_y{t.origin_y}.pgm", sub)
    return EXIT_OK


def _cmd_regions(args) -> int:
    mask = read_pgm(args.input)
    regions = connected_components(mask, args.connectivity, args.min_size)
    lines = ["region_id,area,min_x,min_y,max_x,max_y"]
    lines += [f"{r.region_id},{r.area},{','.join(str(v) for v in r.bbox)}" for r in regions]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_extract(args) -> int:
    mask = read_pgm(args.input)
    selection = _parse_selection(args.selection)
    field = vacuum_field(mask)
    selected = select_salient(field, selection)
    by_coord = {(x, y): v for x, y, v in selected.points}
    out = Path(args.out_dir)
    (out / "salient").mkdir(parents=True, exist_ok=True)
    (out / "hulls").mkdir(parents=True, exist_ok=True)
    regions = connected_components(mask, args.connectivity, args.min_size)
    for region in regions:
        pts = tuple((x, y, by_coord[(x, y)]) for x, y, _ in selected.points if (x, y) in region.pixels)
        name = f"defect_{region.region_id:04d}"
        subset = SalientPointSet(pts, selection)
        (out / "salient" / f"{name}.txt").write_text(points_to_text(subset), encoding="ascii")
        if pts:
            hull = convex_hull(subset)
            (out / "hulls" / f"{name}.txt").write_text(polygon_to_text(hull), encoding="ascii")
            print(f"{name}: {len(pts)} salient points, {len(hull.vertices)} hull vertices")
        else:
            print(f"{name}: 0 salient points, hull skipped")
    if not regions:
        print("no defect regions found")
    return EXIT_OK


def _cmd_plan(args) -> int:
    poly = polygon_from_text(Path(args.polygon).read_text(encoding="ascii"))
    cal = _load_calibration(args.calibration)
    path = plan_path(
        poly,
        cal,
        min_step=args.min_step,
        interpolate=args.interpolate,
        defect_id=args.defect_id,
        pixel_center=args.pixel_center,
    )
    write_waypoints(args.output, [path])
    print(f"{args.output}: {len(path.waypoints)} waypoints"
          f"{' (degenerate)' if path.degenerate else ''}")
    return EXIT_OK


def _cmd_mark_sim(args) -> int:
    paths = read_waypoints(args.waypoints)
    cal = _load_calibration(args.calibration)
    canvas = np.zeros((args.height, args.width), dtype=np.uint8)
    clipped = 0
    mask = BinaryMask(canvas)
    for path in paths:
        mask, c = rasterize_path(path, cal, args.width, args.height, args.pixel_center, canvas=canvas)
        clipped += c
    write_pgm(args.output, mask)
    print(f"{args.output}: {len(paths)} paths, {mask.foreground_count()} stroke px,"
          f" {clipped} clipped waypoints")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    policy = MatchPolicy(mode=args.mode, iou_min=args.iou_min)
    if args.counts_file:
        counts = read_counts_file(args.counts_file)
    else:
        if not (args.pred_dir and args.truth_dir):
            raise ValueError("provide --pred-dir and --truth-dir, or --counts-file")
        counts, _ = evaluate_dirs(args.pred_dir, args.truth_dir, policy)
    report = compute_metrics(counts, standard_f1=args.standard_f1)
    sys.stdout.write(format_metrics_table(counts, report))
    if args.output:
        Path(args.output).write_text(metrics_csv(counts, report), encoding="ascii")
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    config = _build_config(args)
    cal = _load_calibration(config.calibration)
    summary = run_pipeline(args.masks, args.out_dir, config, cal, jobs=args.jobs)
    print(
        f"{args.out_dir}: {len(summary['files'])} files,"
        f" {summary['total_defects']} defects, {summary['errors']} errors"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="maskpath", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("binarize", help="normalize a PGM into a clean 0/255 mask")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--format", choices=("P5", "P2"), default="P5")
    p.set_defaults(func=_cmd_binarize)

    p = sub.add_parser("tile", help="partition an image into square tiles")
    p.add_argument("--input", help="mask to split into tile PGMs")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--tile-size", type=int, default=400)
    p.add_argument("--out-dir", help="write per-tile PGMs here (requires --input)")
    p.set_defaults(func=_cmd_tile)

    p = sub.add_parser("regions", help="list connected defect regions")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="write CSV here instead of stdout")
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.add_argument("--min-size", type=int, default=1)
    p.set_defaults(func=_cmd_regions)

    p = sub.add_parser("extract", help="salient boundary points and convex hull per region")
    p.add_argument("input")
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("--selection", default="4,5", help="admitted vacuum values, e.g. 4,5")
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    p.add_argument("--min-size", type=int, default=1)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("plan", help="turn a polygon file into a waypoint path")
    p.add_argument("polygon")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--calibration", help="calibration file (identity scale if omitted)")
    p.add_argument("--min-step", type=float, default=0.03)
    p.add_argument("--interpolate", action="store_true")
    p.add_argument("--defect-id", type=int, default=1)
    p.add_argument("--pixel-center", action="store_true")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("mark-sim", help="rasterize waypoints back onto a pixel canvas")
    p.add_argument("waypoints")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--calibration")
    p.add_argument("--pixel-center", action="store_true")
    p.set_defaults(func=_cmd_mark_sim)

    p = sub.add_parser("evaluate", help="confusion counts and metrics")
    p.add_argument("--pred-dir")
    p.add_argument("--truth-dir")
    p.add_argument("--counts-file", help="key=value tp/fp/fn/tn file instead of matching")
    p.add_argument("--mode", choices=("any-overlap", "iou-threshold"), default="any-overlap")
    p.add_argument("--iou-min", type=float, default=0.5)
    p.add_argument("--standard-f1", action="store_true",
                   help="harmonic mean of precision and sensitivity")
    p.add_argument("-o", "--output", help="write metrics CSV here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pipeline", help="run all stages over mask files")
    p.add_argument("masks", nargs="+")
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("--config", help="key=value config file; flags below override it")
    p.add_argument("--calibration")
    p.add_argument("--tile-size", dest="tile_size", type=int)
    p.add_argument("--connectivity", type=int, choices=(4, 8))
    p.add_argument("--min-size", dest="min_size", type=int)
    p.add_argument("--selection")
    p.add_argument("--min-step", dest="min_step", type=float)
    p.add_argument("--max-points", dest="max_points", type=int)
    p.add_argument("--interpolate", action="store_true")
    p.add_argument("--pixel-center", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # invariant violations and anything unexpected
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
