"""Boundary descriptor and polygonization for defect masks.

The *vacuum* of a foreground pixel is the number of background pixels among
its 8 neighbors (pixels beyond the image edge count as background). It is a
per-pixel boundary descriptor: 0 means interior, 8 means isolated. Values
around the midpoint flag geometrically salient boundary pixels: corners and
convexity carriers sit at 4..5, while 6..7 indicate spiky protrusions and
1..3 flat runs. Selecting a vacuum band and taking the convex hull of the
survivors reduces a boundary of hundreds of pixels to a handful of polygon
vertices.

Orientation convention: a vertex loop is counterclockwise when its shoelace
signed area is positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Iterable, Sequence

import numpy as np

from .mask_core import BinaryMask

__all__ = [
    "NOT_FOREGROUND",
    "VacuumField",
    "SalientPointSet",
    "ConvexPolygon",
    "vacuum_field",
    "select_salient",
    "convex_hull",
    "points_to_text",
    "polygon_to_text",
    "polygon_from_text",
]

NOT_FOREGROUND = -1  # sentinel stored at background cells of a VacuumField

DEFAULT_SELECTION = frozenset({4, 5})


@dataclass(eq=False)
class VacuumField:
    """Per-pixel vacuum values; background cells hold NOT_FOREGROUND."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int16)
        if values.ndim != 2 or values.size == 0:
            raise ValueError("vacuum field must be a non-empty 2-D grid")
        defined = values != NOT_FOREGROUND
        if defined.any() and not ((values[defined] >= 0) & (values[defined] <= 8)).all():
            raise ValueError("vacuum values must lie in 0..8")
        self.values = values

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class SalientPointSet:
    """Foreground pixels whose vacuum fell in the selection set.

    ``points`` is row-major ordered (x, y, vacuum) triples, so serialized
    output is stable across runs.
    """

    points: tuple[tuple[int, int, int], ...]
    selection_set: frozenset[int] = field(default_factory=lambda: DEFAULT_SELECTION)

    def coordinates(self) -> list[tuple[int, int]]:
        return [(x, y) for x, y, _ in self.points]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ConvexPolygon:
    """Counterclockwise convex vertex loop, implicitly closed.

    Inputs of fewer than 3 extreme points degrade to a ``"point"`` or
    ``"segment"`` instead of erroring, so tiny defects still get marked.
    """

    vertices: tuple[tuple[float, float], ...]
    degeneracy: str | None = None  # None, "point" or "segment"

    @property
    def is_degenerate(self) -> bool:
        return self.degeneracy is not None

    def signed_area(self) -> float:
        verts = self.vertices
        n = len(verts)
        total = 0.0
        for i in range(n):
            x1, y1 = verts[i]
            x2, y2 = verts[(i + 1) % n]
            total += x1 * y2 - x2 * y1
        return total / 2.0

    def contains(self, x: float, y: float, tol: float = 0.0) -> bool:
        """Inside-or-on test; ``tol`` widens the boundary by a distance band.

        Degenerate polygons test distance to the point or segment, so a
        positive ``tol`` is required for them to contain anything but
        themselves.
        """
        if self.degeneracy == "point":
            px, py = self.vertices[0]
            return (x - px) ** 2 + (y - py) ** 2 <= tol * tol
        if self.degeneracy == "segment":
            return _dist_point_segment(x, y, self.vertices[0], self.vertices[1]) <= tol
        verts = self.vertices
        n = len(verts)
        for i in range(n):
            ax, ay = verts[i]
            bx, by = verts[(i + 1) % n]
            edge_len = ((bx - ax) ** 2 + (by - ay) ** 2) ** 0.5
            if (bx - ax) * (y - ay) - (by - ay) * (x - ax) < -tol * edge_len - 1e-12:
                return False
        return True


def vacuum_field(mask: BinaryMask) -> VacuumField:
    """Count background 8-neighbors of every foreground pixel.

    Neighbors outside the image count as background, so a defect touching
    the edge still closes its boundary.
    """
    padded = np.pad(mask.cells, 1, constant_values=0)
    bg = (padded == 0).astype(np.int16)
    counts = (
        bg[:-2, :-2] + bg[:-2, 1:-1] + bg[:-2, 2:]
        + bg[1:-1, :-2] + bg[1:-1, 2:]
        + bg[2:, :-2] + bg[2:, 1:-1] + bg[2:, 2:]
    )
    values = np.where(mask.cells == 1, counts, np.int16(NOT_FOREGROUND))
    return VacuumField(values)


def select_salient(
    field: VacuumField, selection_set: Iterable[int] = DEFAULT_SELECTION
) -> SalientPointSet:
    """Keep the foreground pixels whose vacuum is in ``selection_set``.

    Points come back in row-major order. An empty result is normal, e.g. a
    lone pixel (vacuum 8) survives only wider selections.
    """
    selection = frozenset(int(v) for v in selection_set)
    if not selection <= set(range(9)):
        raise ValueError("selection_set must be a subset of {0..8}")
    if selection:
        wanted = np.isin(field.values, sorted(selection))
        ys, xs = np.nonzero(wanted)  # np.nonzero scans row-major
        points = tuple(
            (int(x), int(y), int(field.values[y, x])) for x, y in zip(xs, ys)
        )
    else:
        points = ()
    return SalientPointSet(points, selection)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _dist2(a, b) -> float:
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2


def _dist_point_segment(x, y, a, b) -> float:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0:
        return ((x - ax) ** 2 + (y - ay) ** 2) ** 0.5
    t = ((x - ax) * dx + (y - ay) * dy) / seg_len2
    t = max(0.0, min(1.0, t))
    px, py = ax + t * dx, ay + t * dy
    return ((x - px) ** 2 + (y - py) ** 2) ** 0.5


def convex_hull(points) -> ConvexPolygon:
    """Graham scan: counterclockwise convex hull of a point set.

    Collinear boundary points are dropped, so every consecutive vertex
    triple of the result makes a strict left turn. Fewer than 3 distinct
    extreme points yield a degenerate point or segment. Empty input raises
    ValueError.
    """
    if isinstance(points, SalientPointSet):
        coords = points.coordinates()
    else:
        coords = [(p[0], p[1]) for p in points]
    unique = sorted(set(coords), key=lambda p: (p[1], p[0]))
    if not unique:
        raise ValueError("convex_hull needs at least one point")
    if len(unique) == 1:
        return ConvexPolygon((unique[0],), degeneracy="point")
    pivot = unique[0]  # lowest y, then lowest x
    rest = unique[1:]

    def compare(a, b) -> int:
        c = _cross(pivot, a, b)
        if c > 0:
            return -1
        if c < 0:
            return 1
        # collinear with the pivot: nearer point first
        da, db = _dist2(pivot, a), _dist2(pivot, b)
        return (da > db) - (da < db)

    rest.sort(key=cmp_to_key(compare))

    stack: list[tuple[float, float]] = [pivot]
    for p in rest:
        while len(stack) >= 2 and _cross(stack[-2], stack[-1], p) <= 0:
            stack.pop()
        stack.append(p)
    if len(stack) == 2:
        return ConvexPolygon(tuple(stack), degeneracy="segment")
    return ConvexPolygon(tuple(stack))


def points_to_text(points: SalientPointSet) -> str:
    """One ``x y v`` triple per line, row-major order."""
    return "".join(f"{x} {y} {v}\n" for x, y, v in points.points)


def polygon_to_text(poly: ConvexPolygon) -> str:
    """One ``x y`` pair per line, counterclockwise."""

    def fmt(v: float) -> str:
        return str(int(v)) if float(v).is_integer() else repr(float(v))

    return "".join(f"{fmt(x)} {fmt(y)}\n" for x, y in poly.vertices)


def polygon_from_text(text: str) -> ConvexPolygon:
    """Parse the ``x y`` line format; degeneracy is implied by vertex count."""
    from .errors import FileFormatError

    vertices: list[tuple[float, float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise FileFormatError(f"polygon line {lineno}: expected 'x y', got {line!r}")
        try:
            vertices.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise FileFormatError(f"polygon line {lineno}: non-numeric coordinate") from None
    if not vertices:
        raise FileFormatError("polygon file has no vertices")
    if len(vertices) == 1:
        return ConvexPolygon(tuple(vertices), degeneracy="point")
    if len(vertices) == 2:
        return ConvexPolygon(tuple(vertices), degeneracy="segment")
    return ConvexPolygon(tuple(vertices))
