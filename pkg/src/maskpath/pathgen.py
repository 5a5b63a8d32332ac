"""Waypoint path planning for the marking device.

A convex polygon in pixel space becomes a closed loop of millimeter
waypoints. The device handles steps down to a configurable minimum
(0.03 mm by default), and device-side buffers cap how many coordinates a
path may carry, so planning both quantizes edges and keeps counts bounded.
Polygon vertices are "forced" waypoints: they are always emitted even when
an edge is shorter than the minimum step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .boundary import ConvexPolygon
from .errors import FileFormatError
from .transform import PhysicalCalibration, PhysicalPoint, to_physical

__all__ = [
    "MarkingPath",
    "PathValidation",
    "plan_path",
    "validate_path",
    "write_waypoints",
    "read_waypoints",
    "WAYPOINT_HEADER",
]

DEFAULT_MIN_STEP_MM = 0.03
DEFAULT_MAX_POINTS = 2000

WAYPOINT_HEADER = "# maskpath-waypoints v1"


@dataclass(frozen=True)
class MarkingPath:
    """Ordered waypoint loop for one defect.

    ``forced`` marks the waypoints that are polygon vertices (or the
    closing repeat); those are exempt from the minimum-step spacing rule.
    """

    defect_id: int
    waypoints: tuple[PhysicalPoint, ...]
    closed: bool
    degenerate: bool = False
    min_step: float = DEFAULT_MIN_STEP_MM
    forced: tuple[bool, ...] = ()

    def __post_init__(self):
        if self.defect_id < 1:
            raise ValueError("defect_id must be a positive integer")
        if not self.waypoints:
            raise ValueError("a marking path needs at least one waypoint")
        if self.forced and len(self.forced) != len(self.waypoints):
            raise ValueError("forced flags must align with waypoints")


@dataclass(frozen=True)
class PathValidation:
    violations: tuple[str, ...]
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def _step(a: PhysicalPoint, b: PhysicalPoint) -> float:
    return math.hypot(b.x - a.x, b.y - a.y)


def _rotate_to_start(vertices: list[PhysicalPoint]) -> list[PhysicalPoint]:
    # canonical start: lexicographically smallest (y, x) vertex
    start = min(range(len(vertices)), key=lambda i: (vertices[i].y, vertices[i].x))
    return vertices[start:] + vertices[:start]


def _subdivide(a: PhysicalPoint, b: PhysicalPoint, min_step: float) -> list[PhysicalPoint]:
    """Interior points of edge a->b, equally spaced with spacing >= min_step."""
    length = _step(a, b)
    segments = max(1, math.floor(length / min_step))
    return [
        PhysicalPoint(a.x + (b.x - a.x) * i / segments, a.y + (b.y - a.y) * i / segments)
        for i in range(1, segments)
    ]


def plan_path(
    poly: ConvexPolygon,
    cal: PhysicalCalibration,
    min_step: float = DEFAULT_MIN_STEP_MM,
    interpolate: bool = False,
    defect_id: int = 1,
    pixel_center: bool = False,
) -> MarkingPath:
    """Turn a pixel-space convex polygon into a millimeter waypoint loop.

    Vertices are projected, the loop is rotated to start at its
    lexicographically smallest (y, x) vertex, traversal keeps the input's
    counterclockwise order, and the first vertex is repeated at the end to
    close the loop. With ``interpolate`` each edge (closing edge included)
    is subdivided into equal segments no shorter than ``min_step``.
    Degenerate polygons produce open point or segment paths.
    """
    if min_step <= 0:
        raise ValueError("min_step must be positive")
    verts = [to_physical(v, cal, pixel_center) for v in poly.vertices]

    if poly.degeneracy == "point":
        return MarkingPath(defect_id, (verts[0],), closed=False, degenerate=True,
                           min_step=min_step, forced=(True,))
    if poly.degeneracy == "segment":
        a, b = verts
        if (b.y, b.x) < (a.y, a.x):
            a, b = b, a
        waypoints = [a]
        forced = [True]
        if interpolate:
            interior = _subdivide(a, b, min_step)
            waypoints.extend(interior)
            forced.extend([False] * len(interior))
        waypoints.append(b)
        forced.append(True)
        return MarkingPath(defect_id, tuple(waypoints), closed=False, degenerate=True,
                           min_step=min_step, forced=tuple(forced))

    verts = _rotate_to_start(verts)
    waypoints: list[PhysicalPoint] = []
    forced: list[bool] = []
    for i, v in enumerate(verts):
        waypoints.append(v)
        forced.append(True)
        if interpolate:
            nxt = verts[(i + 1) % len(verts)]
            interior = _subdivide(v, nxt, min_step)
            waypoints.extend(interior)
            forced.extend([False] * len(interior))
    waypoints.append(waypoints[0])  # close the loop
    forced.append(True)

    # safety net: drop non-forced points that crowd their predecessor, and
    # exact duplicates, keeping the earlier point
    merged: list[PhysicalPoint] = [waypoints[0]]
    merged_forced: list[bool] = [forced[0]]
    for wp, fc in zip(waypoints[1:], forced[1:]):
        gap = _step(merged[-1], wp)
        if gap == 0.0 or (gap < min_step and not (fc and merged_forced[-1])):
            if fc and not merged_forced[-1]:
                merged[-1] = wp  # a vertex displaces a crowding interpolant
                merged_forced[-1] = True
            continue
        merged.append(wp)
        merged_forced.append(fc)

    return MarkingPath(defect_id, tuple(merged), closed=True, degenerate=False,
                       min_step=min_step, forced=tuple(merged_forced))


def validate_path(path: MarkingPath, max_points: int = DEFAULT_MAX_POINTS) -> PathValidation:
    """Check device constraints: point budget, step spacing, closure."""
    violations: list[str] = []
    warnings: list[str] = []
    count = len(path.waypoints)
    if count > max_points:
        violations.append(f"waypoint count {count} exceeds max_points {max_points}")
    forced = path.forced if path.forced else (True,) * count
    for i in range(count - 1):
        gap = _step(path.waypoints[i], path.waypoints[i + 1])
        if gap < path.min_step and not (forced[i] and forced[i + 1]):
            violations.append(
                f"step {i}->{i + 1} is {gap:.6f} mm, below min_step {path.min_step} mm"
            )
    if path.degenerate:
        if count > 2 and path.waypoints[0] == path.waypoints[-1]:
            warnings.append("degenerate path unexpectedly closed")
    elif not path.closed or path.waypoints[0] != path.waypoints[-1]:
        violations.append("path is not closed (last waypoint must repeat the first)")
    return PathValidation(tuple(violations), tuple(warnings))


def write_waypoints(target, paths: Iterable[MarkingPath]) -> None:
    """Write paths in the v1 waypoint format: header, then CSV rows
    ``defect_id,seq,x_mm,y_mm`` with coordinates at 0.1 micrometer
    resolution."""
    lines = [WAYPOINT_HEADER]
    for path in paths:
        for seq, wp in enumerate(path.waypoints, start=1):
            lines.append(f"{path.defect_id},{seq},{wp.x:.4f},{wp.y:.4f}")
    text = "\n".join(lines) + "\n"
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="ascii")
    else:
        target.write(text)


def read_waypoints(source) -> list[MarkingPath]:
    """Parse a v1 waypoint file back into paths, grouped by defect id.

    Spacing metadata is not persisted, so parsed paths carry min_step 0 and
    all-forced flags; closure is inferred from the first/last waypoints.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="ascii")
    else:
        text = source.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != WAYPOINT_HEADER:
        raise FileFormatError(f"missing waypoint header {WAYPOINT_HEADER!r}")
    grouped: dict[int, list[PhysicalPoint]] = {}
    order: list[int] = []
    for lineno, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split(",")
        if len(parts) != 4:
            raise FileFormatError(f"waypoint line {lineno}: expected 4 CSV fields")
        try:
            defect_id = int(parts[0])
            seq = int(parts[1])
            x, y = float(parts[2]), float(parts[3])
        except ValueError:
            raise FileFormatError(f"waypoint line {lineno}: malformed field") from None
        bucket = grouped.setdefault(defect_id, [])
        if defect_id not in order:
            order.append(defect_id)
        if seq != len(bucket) + 1:
            raise FileFormatError(
                f"waypoint line {lineno}: sequence {seq} out of order for defect {defect_id}"
            )
        bucket.append(PhysicalPoint(x, y))
    paths = []
    for defect_id in order:
        pts = grouped[defect_id]
        closed = len(pts) > 2 and pts[0] == pts[-1]
        paths.append(
            MarkingPath(
                defect_id,
                tuple(pts),
                closed=closed,
                degenerate=len(pts) <= 2 or not closed,
                min_step=0.0,
                forced=(True,) * len(pts),
            )
        )
    return paths
