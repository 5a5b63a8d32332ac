"""Pixel-to-millimeter projection.

The camera image and the physical leather sheet are related by a pure
axis-aligned scaling: each pixel spans ``omega1`` mm horizontally and
``omega2`` mm vertically, offset by a reference origin. Pixel (a, b) maps
to (x0 + omega1*a, y0 + omega2*b). By default a pixel's top-left corner is
projected; ``pixel_center=True`` shifts by half a pixel first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import FileFormatError

__all__ = [
    "PhysicalPoint",
    "PhysicalCalibration",
    "calibrate",
    "to_physical",
    "from_physical",
    "read_calibration",
    "write_calibration",
    "IDENTITY_CALIBRATION",
]


@dataclass(frozen=True)
class PhysicalPoint:
    """A point on the leather, in millimeters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("physical coordinates must be finite")


@dataclass(frozen=True)
class PhysicalCalibration:
    """Reference origin (mm) plus mm-per-pixel projection ratios."""

    x0: float
    y0: float
    omega1: float
    omega2: float

    def __post_init__(self):
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise ValueError("projection ratios must be positive")
        for v in (self.x0, self.y0, self.omega1, self.omega2):
            if not math.isfinite(v):
                raise ValueError("calibration values must be finite")


IDENTITY_CALIBRATION = PhysicalCalibration(0.0, 0.0, 1.0, 1.0)


def calibrate(
    image_width: int,
    image_height: int,
    leather_width: float,
    leather_height: float,
    origin: PhysicalPoint = PhysicalPoint(0.0, 0.0),
) -> PhysicalCalibration:
    """Derive projection ratios from image resolution and sheet size."""
    if image_width <= 0 or image_height <= 0:
        raise ValueError("image dimensions must be positive")
    if leather_width <= 0 or leather_height <= 0:
        raise ValueError("leather dimensions must be positive")
    return PhysicalCalibration(
        origin.x, origin.y, leather_width / image_width, leather_height / image_height
    )


def to_physical(p, cal: PhysicalCalibration, pixel_center: bool = False) -> PhysicalPoint:
    """Project a pixel coordinate pair (a, b) into millimeters."""
    a, b = float(p[0]), float(p[1])
    if pixel_center:
        a += 0.5
        b += 0.5
    return PhysicalPoint(cal.x0 + cal.omega1 * a, cal.y0 + cal.omega2 * b)


def from_physical(
    p: PhysicalPoint, cal: PhysicalCalibration, pixel_center: bool = False
) -> tuple[float, float]:
    """Invert the projection; returns fractional pixel coordinates."""
    a = (p.x - cal.x0) / cal.omega1
    b = (p.y - cal.y0) / cal.omega2
    if pixel_center:
        a -= 0.5
        b -= 0.5
    return a, b


_CAL_KEYS = ("x0_mm", "y0_mm", "omega1_mm_per_px", "omega2_mm_per_px")


def write_calibration(path, cal: PhysicalCalibration) -> None:
    text = (
        f"x0_mm={cal.x0!r}\n"
        f"y0_mm={cal.y0!r}\n"
        f"omega1_mm_per_px={cal.omega1!r}\n"
        f"omega2_mm_per_px={cal.omega2!r}\n"
    )
    Path(path).write_text(text, encoding="ascii")


def read_calibration(path) -> PhysicalCalibration:
    values: dict[str, float] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise FileFormatError(f"calibration line {lineno}: expected key=value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _CAL_KEYS:
            raise FileFormatError(f"calibration line {lineno}: unknown key {key!r}")
        try:
            values[key] = float(raw.strip())
        except ValueError:
            raise FileFormatError(f"calibration line {lineno}: non-numeric value") from None
    missing = [k for k in _CAL_KEYS if k not in values]
    if missing:
        raise FileFormatError(f"calibration file missing keys: {', '.join(missing)}")
    try:
        return PhysicalCalibration(
            values["x0_mm"], values["y0_mm"], values["omega1_mm_per_px"], values["omega2_mm_per_px"]
        )
    except ValueError as exc:
        raise FileFormatError(str(exc)) from None
