"""Software stand-in for the chalk-marking arm.

Waypoint paths are projected back into pixel space and drawn with 1-pixel
strokes, and the resulting polygon is scored against the defect region it
was meant to enclose. This closes the plan/mark loop without hardware: a
high containment ratio means the marked outline really covers the defect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .boundary import ConvexPolygon
from .mask_core import BinaryMask, DefectRegion
from .pathgen import MarkingPath
from .transform import PhysicalCalibration, from_physical

__all__ = [
    "FidelityReport",
    "bresenham_line",
    "rasterize_path",
    "fidelity",
    "write_fidelity_csv",
]

DEGENERATE_BAND_PX = 0.5  # tolerance band when the hull is a point or segment

FIDELITY_CSV_HEADER = "defect_id,containment_ratio,excess_ratio,hull_area_px,defect_area_px"


@dataclass(frozen=True)
class FidelityReport:
    """How well a hull encloses its defect region, in pixel terms.

    ``hull_area_px`` counts the integer pixels inside or on the hull, so
    ``excess_ratio`` (hull pixels beyond the defect, relative to defect
    size) is never negative.
    """

    defect_id: int
    hull_area_px: int
    defect_area_px: int
    defect_pixels_inside_hull: int
    containment_ratio: float
    excess_ratio: float


def bresenham_line(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Integer line from (x0, y0) to (x1, y1), endpoints included."""
    points = []
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        points.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
    return points


def _to_pixel(p, cal: PhysicalCalibration, pixel_center: bool) -> tuple[int, int]:
    a, b = from_physical(p, cal, pixel_center)
    # round half up, deterministically
    return math.floor(a + 0.5), math.floor(b + 0.5)


def rasterize_path(
    path: MarkingPath,
    cal: PhysicalCalibration,
    canvas_width: int,
    canvas_height: int,
    pixel_center: bool = False,
    canvas: np.ndarray | None = None,
) -> tuple[BinaryMask, int]:
    """Draw a waypoint path onto a pixel canvas.

    Consecutive waypoints are inverse-projected and connected with
    1-pixel discrete lines. Returns the stroked mask and the number of
    waypoints that landed outside the canvas (their line pixels are
    clipped, not an error). Pass ``canvas`` to accumulate several paths
    onto one grid.
    """
    if canvas_width < 1 or canvas_height < 1:
        raise ValueError("canvas dimensions must be positive")
    if canvas is None:
        canvas = np.zeros((canvas_height, canvas_width), dtype=np.uint8)
    elif canvas.shape != (canvas_height, canvas_width):
        raise ValueError("canvas shape does not match the given dimensions")

    pixels = [_to_pixel(wp, cal, pixel_center) for wp in path.waypoints]
    clipped = sum(
        1 for x, y in pixels if not (0 <= x < canvas_width and 0 <= y < canvas_height)
    )
    if len(pixels) == 1:
        segments = [(pixels[0], pixels[0])]
    else:
        segments = list(zip(pixels[:-1], pixels[1:]))
    for (ax, ay), (bx, by) in segments:
        for x, y in bresenham_line(ax, ay, bx, by):
            if 0 <= x < canvas_width and 0 <= y < canvas_height:
                canvas[y, x] = 1
    return BinaryMask(canvas), clipped


def _hull_pixel_bounds(poly: ConvexPolygon, pad: float) -> tuple[int, int, int, int]:
    xs = [v[0] for v in poly.vertices]
    ys = [v[1] for v in poly.vertices]
    return (
        math.floor(min(xs) - pad),
        math.floor(min(ys) - pad),
        math.ceil(max(xs) + pad),
        math.ceil(max(ys) + pad),
    )


def fidelity(hull: ConvexPolygon, region: DefectRegion) -> FidelityReport:
    """Score a hull against its source region.

    Pixels on the hull boundary count as inside (marking on the line is
    acceptable). Degenerate hulls use a +-0.5 px distance band.
    """
    tol = DEGENERATE_BAND_PX if hull.is_degenerate else 0.0
    min_x, min_y, max_x, max_y = _hull_pixel_bounds(hull, tol)
    hull_area_px = 0
    for y in range(min_y, max_y + 1):
        for x in range(min_x, max_x + 1):
            if hull.contains(x, y, tol):
                hull_area_px += 1
    inside = sum(1 for (x, y) in region.pixels if hull.contains(x, y, tol))
    area = region.area
    return FidelityReport(
        defect_id=region.region_id,
        hull_area_px=hull_area_px,
        defect_area_px=area,
        defect_pixels_inside_hull=inside,
        containment_ratio=inside / area,
        excess_ratio=(hull_area_px - inside) / area,
    )


def write_fidelity_csv(target, reports: Iterable[FidelityReport]) -> None:
    lines = [FIDELITY_CSV_HEADER]
    for r in reports:
        lines.append(
            f"{r.defect_id},{r.containment_ratio:.6f},{r.excess_ratio:.6f},"
            f"{r.hull_area_px},{r.defect_area_px}"
        )
    text = "\n".join(lines) + "\n"
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="ascii")
    else:
        target.write(text)
