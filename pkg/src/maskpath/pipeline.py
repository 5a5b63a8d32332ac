"""End-to-end processing: masks in, marking artifacts out.

Each mask file is tiled, each tile is scanned for defect regions, and each
region is reduced to salient boundary points, a convex hull, and a closed
waypoint path in physical coordinates. All coordinates in the emitted
artifacts are source-image pixels (tile-local results are lifted by their
tile origin) or millimeters (waypoints). Tiles are processed independently;
defects spanning a tile seam come out as separate instances per tile.

Every output file is written atomically (temp file + rename), and repeated
runs over identical inputs produce byte-identical trees.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boundary import (
    ConvexPolygon,
    SalientPointSet,
    convex_hull,
    points_to_text,
    polygon_to_text,
    select_salient,
    vacuum_field,
)
from .config import PipelineConfig
from .errors import FileFormatError
from .marker import FidelityReport, fidelity, rasterize_path, write_fidelity_csv
from .mask_core import BinaryMask, DefectRegion, connected_components, tile
from .metrics import ConfusionCounts, MatchPolicy, load_annotation, match_instances
from .pathgen import MarkingPath, plan_path, validate_path, write_waypoints
from .pgm import read_pgm, write_pgm
from .transform import IDENTITY_CALIBRATION, PhysicalCalibration

__all__ = [
    "ProcessedDefect",
    "ProcessedMask",
    "process_mask",
    "run_pipeline",
    "evaluate_dirs",
    "read_counts_file",
]


@dataclass(frozen=True)
class ProcessedDefect:
    defect_id: int
    region: DefectRegion  # source-image coordinates
    salient: SalientPointSet
    hull: ConvexPolygon
    path: MarkingPath
    fidelity: FidelityReport
    fallback_boundary: bool  # selection was empty, fell back to V >= 1 pixels


@dataclass(frozen=True)
class ProcessedMask:
    width: int
    height: int
    tile_count: int
    defects: tuple[ProcessedDefect, ...]
    marked: BinaryMask
    clipped_waypoints: int


def process_mask(
    mask: BinaryMask, config: PipelineConfig, cal: PhysicalCalibration
) -> ProcessedMask:
    """Run the full mask -> paths pipeline in memory."""
    grid = tile(mask.width, mask.height, config.tile_size)
    staged: list[tuple[DefectRegion, SalientPointSet, bool]] = []
    for t in grid.tiles:
        sub = mask.crop(t.origin_x, t.origin_y, t.width, t.height)
        if sub.foreground_count() == 0:
            continue
        field = vacuum_field(sub)
        selected = select_salient(field, config.selection_set)
        by_coord = {(x, y): v for x, y, v in selected.points}
        for region in connected_components(sub, config.connectivity, config.min_region_size):
            local = [
                (x, y, by_coord[(x, y)]) for x, y, _ in selected.points if (x, y) in region.pixels
            ]
            fallback = not local
            if fallback:
                # tiny or spiky region missed by the selection band: fall back
                # to every boundary pixel so the defect still gets marked
                local = [
                    (x, y, int(field.values[y, x]))
                    for (y, x) in sorted((y, x) for x, y in region.pixels)
                    if field.values[y, x] >= 1
                ]
            points = tuple(
                (x + t.origin_x, y + t.origin_y, v) for x, y, v in local
            )
            selection = frozenset(range(1, 9)) if fallback else frozenset(config.selection_set)
            staged.append(
                (
                    region.translated(t.origin_x, t.origin_y),
                    SalientPointSet(points, selection),
                    fallback,
                )
            )

    canvas = np.zeros((mask.height, mask.width), dtype=np.uint8)
    clipped_total = 0
    defects: list[ProcessedDefect] = []
    for defect_id, (region, salient, fallback) in enumerate(staged, start=1):
        region = DefectRegion(defect_id, region.pixels, region.bbox)
        hull = convex_hull(salient)
        path = plan_path(
            hull,
            cal,
            min_step=config.min_step_mm,
            interpolate=config.interpolate,
            defect_id=defect_id,
            pixel_center=config.pixel_center,
        )
        _, clipped = rasterize_path(
            path, cal, mask.width, mask.height, config.pixel_center, canvas=canvas
        )
        clipped_total += clipped
        defects.append(
            ProcessedDefect(
                defect_id=defect_id,
                region=region,
                salient=salient,
                hull=hull,
                path=path,
                fidelity=fidelity(hull, region),
                fallback_boundary=fallback,
            )
        )
    return ProcessedMask(
        width=mask.width,
        height=mask.height,
        tile_count=len(grid.tiles),
        defects=tuple(defects),
        marked=BinaryMask(canvas),
        clipped_waypoints=clipped_total,
    )


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def _write_mask_outputs(out_dir: Path, result: ProcessedMask, config: PipelineConfig) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    for sub in ("salient", "hulls", "waypoints"):
        (out_dir / sub).mkdir(exist_ok=True)

    region_lines = ["defect_id,area,min_x,min_y,max_x,max_y"]
    defect_entries = []
    for d in result.defects:
        name = f"defect_{d.defect_id:04d}"
        region_lines.append(
            f"{d.defect_id},{d.region.area},{','.join(str(v) for v in d.region.bbox)}"
        )
        _atomic_write_text(out_dir / "salient" / f"{name}.txt", points_to_text(d.salient))
        _atomic_write_text(out_dir / "hulls" / f"{name}.txt", polygon_to_text(d.hull))
        buf = io.StringIO()
        write_waypoints(buf, [d.path])
        _atomic_write_text(out_dir / "waypoints" / f"{name}.csv", buf.getvalue())
        validation = validate_path(d.path, config.max_points)
        warnings = list(validation.warnings)
        if config.interpolate and len(d.path.waypoints) > config.max_points:
            warnings.append(
                f"interpolation produced {len(d.path.waypoints)} waypoints,"
                f" above max_points {config.max_points}"
            )
        defect_entries.append(
            {
                "defect_id": d.defect_id,
                "area_px": d.region.area,
                "bbox": list(d.region.bbox),
                "salient_points": len(d.salient),
                "fallback_boundary": d.fallback_boundary,
                "hull_vertices": len(d.hull.vertices),
                "degenerate": d.hull.degeneracy,
                "waypoints": len(d.path.waypoints),
                "containment_ratio": round(d.fidelity.containment_ratio, 6),
                "excess_ratio": round(d.fidelity.excess_ratio, 6),
                "violations": list(validation.violations),
                "warnings": warnings,
            }
        )
    _atomic_write_text(out_dir / "regions.csv", "\n".join(region_lines) + "\n")

    buf = io.StringIO()
    write_fidelity_csv(buf, [d.fidelity for d in result.defects])
    _atomic_write_text(out_dir / "fidelity.csv", buf.getvalue())

    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix="marked", suffix=".tmp")
    os.close(fd)
    write_pgm(tmp, result.marked)
    os.replace(tmp, out_dir / "marked.pgm")

    return {
        "width": result.width,
        "height": result.height,
        "tiles": result.tile_count,
        "defect_count": len(result.defects),
        "clipped_waypoints": result.clipped_waypoints,
        "defects": defect_entries,
    }


def _process_one(args: tuple[str, str, PipelineConfig, PhysicalCalibration]) -> dict:
    mask_path, out_root, config, cal = args
    path = Path(mask_path)
    entry: dict = {"file": path.name}
    try:
        mask = read_pgm(path)
        result = process_mask(mask, config, cal)
        entry.update(_write_mask_outputs(Path(out_root) / path.stem, result, config))
    except (OSError, FileFormatError, ValueError) as exc:
        entry["error"] = f"{type(exc).__name__}: {exc}"
    return entry


def run_pipeline(
    mask_files,
    out_root,
    config: PipelineConfig = PipelineConfig(),
    cal: PhysicalCalibration = IDENTITY_CALIBRATION,
    jobs: int = 1,
) -> dict:
    """Process each mask file and write the artifact tree plus summary.json.

    Per-file failures are recorded in the summary and do not stop the run.
    Returns the summary dict (also written to ``<out_root>/summary.json``).
    """
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    work = [(str(p), str(out_root), config, cal) for p in mask_files]
    if jobs == 1 or len(work) <= 1:
        entries = [_process_one(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_process_one, work))
    summary = {
        "calibration": {
            "x0_mm": cal.x0,
            "y0_mm": cal.y0,
            "omega1_mm_per_px": cal.omega1,
            "omega2_mm_per_px": cal.omega2,
        },
        "config": {
            "tile_size": config.tile_size,
            "connectivity": config.connectivity,
            "selection_set": sorted(config.selection_set),
            "min_region_size": config.min_region_size,
            "min_step_mm": config.min_step_mm,
            "max_points": config.max_points,
            "pixel_center": config.pixel_center,
            "interpolate": config.interpolate,
        },
        "files": entries,
        "total_defects": sum(e.get("defect_count", 0) for e in entries),
        "errors": sum(1 for e in entries if "error" in e),
    }
    _atomic_write_text(out_root / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def read_counts_file(path) -> ConfusionCounts:
    """Parse a ``key=value`` file carrying tp/fp/fn/tn counts."""
    values: dict[str, int] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise FileFormatError(f"counts line {lineno}: expected key=value")
        key, _, raw = stripped.partition("=")
        key = key.strip().lower()
        if key not in ("tp", "fp", "fn", "tn"):
            raise FileFormatError(f"counts line {lineno}: unknown key {key!r}")
        try:
            values[key] = int(raw.strip())
        except ValueError:
            raise FileFormatError(f"counts line {lineno}: non-integer value") from None
    missing = [k for k in ("tp", "fp", "fn", "tn") if k not in values]
    if missing:
        raise FileFormatError(f"counts file missing keys: {', '.join(missing)}")
    return ConfusionCounts(**values)


def evaluate_dirs(
    pred_dir, truth_dir, policy: MatchPolicy = MatchPolicy()
) -> tuple[ConfusionCounts, list[tuple[str, ConfusionCounts]]]:
    """Match per-image annotation files between two directories.

    Files pair up by name; an absent prediction file means "no detections"
    and an absent truth file means "negative image". Returns the aggregate
    counts and the per-image breakdown in sorted name order.
    """
    pred_dir, truth_dir = Path(pred_dir), Path(truth_dir)
    names = sorted(
        {p.name for p in pred_dir.glob("*.json")} | {p.name for p in truth_dir.glob("*.json")}
    )
    total = ConfusionCounts()
    per_image: list[tuple[str, ConfusionCounts]] = []
    for name in names:
        pred_path = pred_dir / name
        truth_path = truth_dir / name
        predicted = load_annotation(pred_path)[3] if pred_path.exists() else []
        truth = load_annotation(truth_path)[3] if truth_path.exists() else []
        counts = match_instances(predicted, truth, bool(truth), policy)
        per_image.append((name, counts))
        total = total + counts
    return total, per_image
