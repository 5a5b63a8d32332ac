"""Instance matching and segmentation metrics.

Predicted and ground-truth defect regions are matched greedily, one to
one, in descending overlap order; matched pairs are true positives,
unmatched truth regions false negatives, unmatched predictions false
positives. True negatives are counted per image: a fully negative image
with no predictions contributes one. A negative image that drew false
alarms contributes only the false positives.

Derived metrics:

    sensitivity = TP / (TP + FN)        specificity = TN / (TN + FP)
    precision   = TP / (TP + FP)        accuracy    = (TP + TN) / total
    error_rate  = (FP + FN) / total

The F1 score is, by this tool's convention, the harmonic mean of precision
and *specificity* (0 whenever specificity is 0); ``standard_f1=True``
selects the usual precision/sensitivity form instead. A zero denominator
makes a metric undefined (None), not an error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import FileFormatError
from .mask_core import DefectRegion

__all__ = [
    "ConfusionCounts",
    "MetricsReport",
    "MatchPolicy",
    "match_instances",
    "compute_metrics",
    "load_annotation",
    "format_metrics_table",
    "metrics_csv",
]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


_METRIC_NAMES = ("sensitivity", "specificity", "precision", "f1", "error_rate", "accuracy")


@dataclass(frozen=True)
class MetricsReport:
    """Fractions in [0, 1]; None marks an undefined (0/0) metric."""

    sensitivity: float | None
    specificity: float | None
    precision: float | None
    f1: float | None
    error_rate: float | None
    accuracy: float | None

    def as_dict(self) -> dict[str, float | None]:
        return {name: getattr(self, name) for name in _METRIC_NAMES}


@dataclass(frozen=True)
class MatchPolicy:
    """When does a prediction count as hitting a truth region.

    ``any-overlap`` accepts a single shared pixel; ``iou-threshold``
    requires intersection-over-union of at least ``iou_min``.
    """

    mode: str = "any-overlap"
    iou_min: float = 0.5

    def __post_init__(self):
        if self.mode not in ("any-overlap", "iou-threshold"):
            raise ValueError("mode must be 'any-overlap' or 'iou-threshold'")
        if not 0.0 < self.iou_min <= 1.0:
            raise ValueError("iou_min must lie in (0, 1]")


def match_instances(
    predicted: Sequence[DefectRegion],
    truth: Sequence[DefectRegion],
    image_has_defect: bool | None = None,
    policy: MatchPolicy = MatchPolicy(),
) -> ConfusionCounts:
    """Greedy one-to-one instance matching for a single image.

    Ties in overlap are broken by region ids, which travel with the
    regions, so shuffling the input lists never changes the counts.
    """
    if image_has_defect is None:
        image_has_defect = bool(truth)

    candidates = []
    for p in predicted:
        for t in truth:
            inter = len(p.pixels & t.pixels)
            if inter == 0:
                continue
            if policy.mode == "iou-threshold":
                iou = inter / len(p.pixels | t.pixels)
                if iou < policy.iou_min:
                    continue
                score = iou
            else:
                score = float(inter)
            candidates.append((score, p.region_id, t.region_id, p, t))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

    used_pred: set[int] = set()
    used_truth: set[int] = set()
    tp = 0
    for _, _, _, p, t in candidates:
        if id(p) in used_pred or id(t) in used_truth:
            continue
        used_pred.add(id(p))
        used_truth.add(id(t))
        tp += 1

    fn = len(truth) - tp
    fp = len(predicted) - tp
    tn = 1 if (not image_has_defect and not truth and not predicted) else 0
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def compute_metrics(c: ConfusionCounts, standard_f1: bool = False) -> MetricsReport:
    """Derive the six metrics from confusion counts."""
    sensitivity = _ratio(c.tp, c.tp + c.fn)
    specificity = _ratio(c.tn, c.tn + c.fp)
    precision = _ratio(c.tp, c.tp + c.fp)
    first = sensitivity if standard_f1 else specificity
    if first is not None and first == 0.0:
        f1: float | None = 0.0
    elif precision is None or first is None:
        f1 = None
    elif precision + first == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * first / (precision + first)
    error_rate = _ratio(c.fp + c.fn, c.total)
    accuracy = _ratio(c.tp + c.tn, c.total)
    return MetricsReport(sensitivity, specificity, precision, f1, error_rate, accuracy)


def _point_on_segment(x, y, ax, ay, bx, by, eps=1e-9) -> bool:
    cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
    if abs(cross) > eps * max(1.0, abs(bx - ax) + abs(by - ay)):
        return False
    return min(ax, bx) - eps <= x <= max(ax, bx) + eps and min(ay, by) - eps <= y <= max(ay, by) + eps


def _point_in_polygon(x: float, y: float, pts: Sequence[tuple[float, float]]) -> bool:
    """Even-odd rule with inclusive boundary; works for non-convex shapes."""
    n = len(pts)
    for i in range(n):
        ax, ay = pts[i]
        bx, by = pts[(i + 1) % n]
        if _point_on_segment(x, y, ax, ay, bx, by):
            return True
    inside = False
    for i in range(n):
        ax, ay = pts[i]
        bx, by = pts[(i + 1) % n]
        if (ay > y) != (by > y):
            x_cross = ax + (y - ay) * (bx - ax) / (by - ay)
            if x < x_cross:
                inside = not inside
    return inside


def _polygon_pixels(
    pts: Sequence[tuple[float, float]], width: int, height: int
) -> frozenset[tuple[int, int]]:
    import math

    min_x = max(0, math.floor(min(p[0] for p in pts)))
    max_x = min(width - 1, math.ceil(max(p[0] for p in pts)))
    min_y = max(0, math.floor(min(p[1] for p in pts)))
    max_y = min(height - 1, math.ceil(max(p[1] for p in pts)))
    return frozenset(
        (x, y)
        for y in range(min_y, max_y + 1)
        for x in range(min_x, max_x + 1)
        if _point_in_polygon(x, y, pts)
    )


def load_annotation(path) -> tuple[str, int, int, list[DefectRegion]]:
    """Read a polygon-annotation JSON file and rasterize its shapes.

    Expected shape: ``{"image": name, "width": px, "height": px,
    "shapes": [{"label": str, "points": [[x, y], ...]}, ...]}``. Regions
    are numbered in shape order; shapes that rasterize to nothing (fully
    outside the canvas, or thinner than a pixel) are skipped.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from None
    try:
        image = str(doc["image"])
        width = int(doc["width"])
        height = int(doc["height"])
        shapes = doc["shapes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: missing or malformed field ({exc})") from None
    if width < 1 or height < 1:
        raise FileFormatError(f"{path}: image dimensions must be positive")
    regions: list[DefectRegion] = []
    next_id = 1
    for idx, shape in enumerate(shapes):
        try:
            pts = [(float(p[0]), float(p[1])) for p in shape["points"]]
        except (KeyError, TypeError, ValueError, IndexError):
            raise FileFormatError(f"{path}: shape {idx} has malformed points") from None
        if len(pts) < 3:
            raise FileFormatError(f"{path}: shape {idx} needs at least 3 points")
        pixels = _polygon_pixels(pts, width, height)
        if not pixels:
            continue
        regions.append(DefectRegion(next_id, pixels, _bbox(pixels)))
        next_id += 1
    return image, width, height, regions


def _bbox(pixels: frozenset[tuple[int, int]]) -> tuple[int, int, int, int]:
    xs = [p[0] for p in pixels]
    ys = [p[1] for p in pixels]
    return (min(xs), min(ys), max(xs), max(ys))


def _fmt_pct(value: float | None) -> str:
    return "n/a" if value is None else f"{value * 100:.2f}"


def format_metrics_table(counts: ConfusionCounts, report: MetricsReport) -> str:
    """Human-readable confusion table plus the six metrics (percent)."""
    lines = [
        "confusion counts",
        f"  TP {counts.tp}   FN {counts.fn}",
        f"  FP {counts.fp}   TN {counts.tn}",
        "metrics (%)",
    ]
    for name, value in report.as_dict().items():
        lines.append(f"  {name:<12} {_fmt_pct(value)}")
    return "\n".join(lines) + "\n"


def metrics_csv(counts: ConfusionCounts, report: MetricsReport) -> str:
    """CSV rows: counts, then metric fractions (n/a when undefined)."""
    lines = ["metric,value"]
    for name in ("tp", "fp", "fn", "tn"):
        lines.append(f"{name},{getattr(counts, name)}")
    for name, value in report.as_dict().items():
        lines.append(f"{name},{'n/a' if value is None else f'{value:.6f}'}")
    return "\n".join(lines) + "\n"
