"""Pipeline configuration: defaults, validation, key=value file round-trip."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .pathgen import DEFAULT_MAX_POINTS, DEFAULT_MIN_STEP_MM

__all__ = ["PipelineConfig", "parse_config", "serialize_config", "read_config", "write_config"]


@dataclass(frozen=True)
class PipelineConfig:
    tile_size: int = 400
    connectivity: int = 8
    selection_set: frozenset[int] = frozenset({4, 5})
    min_region_size: int = 1
    min_step_mm: float = DEFAULT_MIN_STEP_MM
    max_points: int = DEFAULT_MAX_POINTS
    match_mode: str = "any-overlap"
    iou_min: float = 0.5
    calibration: str | None = None
    pixel_center: bool = False
    interpolate: bool = False

    def __post_init__(self):
        if self.tile_size < 1:
            raise ValueError("tile_size must be positive")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")
        if not self.selection_set or not set(self.selection_set) <= set(range(9)):
            raise ValueError("selection_set must be a non-empty subset of {0..8}")
        if self.min_region_size < 1:
            raise ValueError("min_region_size must be >= 1")
        if self.min_step_mm <= 0:
            raise ValueError("min_step_mm must be positive")
        if self.max_points < 1:
            raise ValueError("max_points must be positive")
        if self.match_mode not in ("any-overlap", "iou-threshold"):
            raise ValueError("match_mode must be 'any-overlap' or 'iou-threshold'")
        if not 0.0 < self.iou_min <= 1.0:
            raise ValueError("iou_min must lie in (0, 1]")


def _parse_bool(raw: str, key: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"config key {key}: expected a boolean, got {raw!r}")


def parse_config(text: str) -> PipelineConfig:
    """Parse line-oriented ``key=value`` text; unknown keys are rejected."""
    known = {f.name for f in fields(PipelineConfig)}
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected key=value")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in known:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        try:
            if key in ("tile_size", "connectivity", "min_region_size", "max_points"):
                values[key] = int(raw)
            elif key in ("min_step_mm", "iou_min"):
                values[key] = float(raw)
            elif key == "selection_set":
                values[key] = frozenset(int(v) for v in raw.split(",") if v.strip())
            elif key in ("pixel_center", "interpolate"):
                values[key] = _parse_bool(raw, key)
            elif key == "calibration":
                values[key] = raw or None
            else:
                values[key] = raw
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: {exc}") from None
    return PipelineConfig(**values)


def serialize_config(cfg: PipelineConfig) -> str:
    selection = ",".join(str(v) for v in sorted(cfg.selection_set))
    return (
        f"tile_size={cfg.tile_size}\n"
        f"connectivity={cfg.connectivity}\n"
        f"selection_set={selection}\n"
        f"min_region_size={cfg.min_region_size}\n"
        f"min_step_mm={cfg.min_step_mm!r}\n"
        f"max_points={cfg.max_points}\n"
        f"match_mode={cfg.match_mode}\n"
        f"iou_min={cfg.iou_min!r}\n"
        f"calibration={cfg.calibration or ''}\n"
        f"pixel_center={'true' if cfg.pixel_center else 'false'}\n"
        f"interpolate={'true' if cfg.interpolate else 'false'}\n"
    )


def read_config(path) -> PipelineConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def write_config(path, cfg: PipelineConfig) -> None:
    Path(path).write_text(serialize_config(cfg), encoding="utf-8")
