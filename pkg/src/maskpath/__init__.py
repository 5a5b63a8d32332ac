"""maskpath: defect masks in, physical marking paths out.

The pipeline: binarize and tile a mask, separate defect instances, score
each foreground pixel by how many of its 8 neighbors are background (the
"vacuum"), keep the geometrically salient band, wrap the survivors in a
counterclockwise convex hull, project to millimeters, and emit a closed,
quantized waypoint path per defect. A marking simulator and an instance
level evaluation harness close the loop.
"""

from .boundary import (
    NOT_FOREGROUND,
    ConvexPolygon,
    SalientPointSet,
    VacuumField,
    convex_hull,
    select_salient,
    vacuum_field,
)
from .config import PipelineConfig, parse_config, serialize_config
from .errors import FileFormatError
from .marker import FidelityReport, bresenham_line, fidelity, rasterize_path
from .mask_core import (
    BinaryMask,
    DefectRegion,
    Tile,
    TileGrid,
    binarize,
    connected_components,
    tile,
)
from .metrics import (
    ConfusionCounts,
    MatchPolicy,
    MetricsReport,
    compute_metrics,
    load_annotation,
    match_instances,
)
from .pathgen import (
    MarkingPath,
    PathValidation,
    plan_path,
    read_waypoints,
    validate_path,
    write_waypoints,
)
from .pgm import read_pgm, write_pgm
from .pipeline import evaluate_dirs, process_mask, run_pipeline
from .transform import (
    IDENTITY_CALIBRATION,
    PhysicalCalibration,
    PhysicalPoint,
    calibrate,
    from_physical,
    read_calibration,
    to_physical,
    write_calibration,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryMask",
    "ConfusionCounts",
    "ConvexPolygon",
    "DefectRegion",
    "FidelityReport",
    "FileFormatError",
    "IDENTITY_CALIBRATION",
    "MarkingPath",
    "MatchPolicy",
    "MetricsReport",
    "NOT_FOREGROUND",
    "PathValidation",
    "PhysicalCalibration",
    "PhysicalPoint",
    "PipelineConfig",
    "SalientPointSet",
    "Tile",
    "TileGrid",
    "VacuumField",
    "binarize",
    "bresenham_line",
    "calibrate",
    "compute_metrics",
    "connected_components",
    "convex_hull",
    "evaluate_dirs",
    "fidelity",
    "from_physical",
    "load_annotation",
    "match_instances",
    "parse_config",
    "plan_path",
    "process_mask",
    "rasterize_path",
    "read_calibration",
    "read_pgm",
    "read_waypoints",
    "run_pipeline",
    "select_salient",
    "serialize_config",
    "tile",
    "to_physical",
    "vacuum_field",
    "validate_path",
    "write_calibration",
    "write_pgm",
    "write_waypoints",
]
