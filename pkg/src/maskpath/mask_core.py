"""Binary mask primitives: binarization, image tiling, defect instance separation.

Convention used throughout the package: a pixel coordinate is an ``(x, y)``
pair with ``x`` the column and ``y`` the row; grids are row-major numpy
arrays indexed ``cells[y, x]``. Foreground (defect) pixels hold 1,
background holds 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
from scipy import ndimage

__all__ = [
    "BinaryMask",
    "Tile",
    "TileGrid",
    "DefectRegion",
    "binarize",
    "tile",
    "connected_components",
]


@dataclass(eq=False)
class BinaryMask:
    """Rectangular 0/1 grid; 1 marks defect pixels."""

    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.ndim != 2 or cells.size == 0:
            raise ValueError("mask must be a non-empty 2-D grid")
        if not np.isin(cells, (0, 1)).all():
            raise ValueError("mask cells must be 0 or 1")
        self.cells = cells.astype(np.uint8)

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    def foreground_count(self) -> int:
        return int(self.cells.sum())

    def crop(self, origin_x: int, origin_y: int, width: int, height: int) -> "BinaryMask":
        return BinaryMask(self.cells[origin_y : origin_y + height, origin_x : origin_x + width])


class Tile(NamedTuple):
    origin_x: int
    origin_y: int
    width: int
    height: int


@dataclass(frozen=True)
class TileGrid:
    """Row-major partition of an image into rectangles.

    Interior tiles are ``tile_width`` x ``tile_height``; tiles on the right
    and bottom edges are clipped to the image boundary.
    """

    tile_width: int
    tile_height: int
    tiles: tuple[Tile, ...]

    @property
    def columns(self) -> int:
        return sum(1 for t in self.tiles if t.origin_y == 0)

    @property
    def rows(self) -> int:
        return sum(1 for t in self.tiles if t.origin_x == 0)


@dataclass(frozen=True)
class DefectRegion:
    """One connected foreground component.

    ``pixels`` holds (x, y) coordinates; ``bbox`` is the tight
    (min_x, min_y, max_x, max_y) bound, inclusive.
    """

    region_id: int
    pixels: frozenset[tuple[int, int]]
    bbox: tuple[int, int, int, int]

    @classmethod
    def from_pixels(cls, region_id: int, pixels: Iterable[tuple[int, int]]) -> "DefectRegion":
        pts = frozenset((int(x), int(y)) for x, y in pixels)
        if not pts:
            raise ValueError("a defect region needs at least one pixel")
        if region_id < 1:
            raise ValueError("region_id must be a positive integer")
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return cls(region_id, pts, (min(xs), min(ys), max(xs), max(ys)))

    @property
    def area(self) -> int:
        return len(self.pixels)

    def translated(self, dx: int, dy: int) -> "DefectRegion":
        return DefectRegion.from_pixels(self.region_id, ((x + dx, y + dy) for x, y in self.pixels))


def binarize(raw) -> BinaryMask:
    """Turn a rectangular grid of truth flags into a 0/1 mask.

    TRUE-ish cells become 1, FALSE-ish cells become 0; dimensions are
    preserved. Empty or ragged input raises ValueError.
    """
    if isinstance(raw, np.ndarray):
        arr = raw
    else:
        rows = [list(r) for r in raw]
        if not rows or not rows[0]:
            raise ValueError("input grid is empty")
        if len({len(r) for r in rows}) != 1:
            raise ValueError("input grid is ragged")
        arr = np.array(rows)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("input grid must be a non-empty 2-D grid")
    return BinaryMask(np.where(arr.astype(bool), 1, 0))


def tile(image_width: int, image_height: int, tile_size: int) -> TileGrid:
    """Partition an image into a row-major grid of square tiles.

    Tiles that would overrun the right or bottom edge are clipped, so the
    union of tiles always equals the image exactly.
    """
    if image_width < 1 or image_height < 1:
        raise ValueError("image dimensions must be positive")
    if tile_size < 1:
        raise ValueError("tile_size must be positive")
    tiles = []
    for oy in range(0, image_height, tile_size):
        for ox in range(0, image_width, tile_size):
            tiles.append(
                Tile(ox, oy, min(tile_size, image_width - ox), min(tile_size, image_height - oy))
            )
    return TileGrid(tile_size, tile_size, tuple(tiles))


_STRUCTURE_8 = np.ones((3, 3), dtype=int)
_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)


def connected_components(
    mask: BinaryMask, connectivity: int = 8, min_size: int = 1
) -> list[DefectRegion]:
    """Split the mask foreground into maximal connected regions.

    Region ids are assigned in first-encounter order of a row-major scan,
    starting at 1. Regions smaller than ``min_size`` pixels are dropped as
    speckle (ids stay consecutive).
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    structure = _STRUCTURE_8 if connectivity == 8 else _STRUCTURE_4
    labeled, count = ndimage.label(mask.cells, structure=structure)
    if count == 0:
        return []
    # first-encounter ordering is re-derived explicitly rather than assumed
    # from the labeling pass
    flat = labeled.ravel()
    ids, first_index = np.unique(flat, return_index=True)
    ordering = sorted((int(fi), int(i)) for fi, i in zip(first_index, ids) if i != 0)
    slices = ndimage.find_objects(labeled)

    regions: list[DefectRegion] = []
    next_id = 1
    for _, label_id in ordering:
        sl = slices[label_id - 1]
        ys, xs = np.nonzero(labeled[sl] == label_id)
        if xs.size < min_size:
            continue
        ox, oy = sl[1].start, sl[0].start
        pixels = frozenset((int(x) + ox, int(y) + oy) for x, y in zip(xs, ys))
        regions.append(DefectRegion.from_pixels(next_id, pixels))
        next_id += 1
    return regions
