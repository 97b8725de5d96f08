"""Core domain types and grid geometry shared by the whole pipeline.

All grid products use row-major H x W layout: row indexes y, col indexes x,
and cell (0, 0) sits at the (y_min, x_min) corner. Cell extents are
half-open [low, high) so every in-ROI point maps to exactly one cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np


class ContractError(ValueError):
    """An operation was called with inputs that violate its contract."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ContractError(msg)


@dataclass(frozen=True)
class Point2:
    """A finite 2D point in meters (ego/BEV frame)."""

    x: float
    y: float

    def __post_init__(self):
        _require(math.isfinite(self.x) and math.isfinite(self.y),
                 "Point2 coordinates must be finite")


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ContractError(f"expected (n, 2) point array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("points must be finite")
    return arr


@dataclass(frozen=True)
class Trajectory:
    """An ordered 2D polyline with an opaque id; at least 2 points."""

    id: str
    points: np.ndarray  # (n, 2) float64

    def __post_init__(self):
        arr = _as_points(self.points)
        _require(len(arr) >= 2, "trajectory shorter than 2 points")
        object.__setattr__(self, "points", arr)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def arc_length(self) -> float:
        """Total polyline length (sum of segment norms)."""
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    def reversed(self) -> "Trajectory":
        return Trajectory(self.id, self.points[::-1].copy())


@dataclass(frozen=True)
class TrajectorySet:
    """A frame's trajectories plus scene metadata."""

    trajectories: Tuple[Trajectory, ...]
    frame_id: str = "unknown"
    centerline_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        _require(bool(self.frame_id), "frame_id must be nonempty")
        _require(self.centerline_count >= 0, "centerline_count must be >= 0")

    def __len__(self) -> int:
        return len(self.trajectories)


@dataclass(frozen=True)
class GridSpec:
    """BEV region of interest and cell size for all rasterized products."""

    x_min: float = -50.0
    x_max: float = 50.0
    y_min: float = -25.0
    y_max: float = 25.0
    cell_dx: float = 0.5
    cell_dy: float = 0.5

    def __post_init__(self):
        _require(self.x_min < self.x_max, "require x_min < x_max")
        _require(self.y_min < self.y_max, "require y_min < y_max")
        _require(self.cell_dx > 0 and self.cell_dy > 0, "cell sizes must be > 0")

    @property
    def height(self) -> int:
        # tiny slack guards against float overshoot when the span is an
        # exact multiple of the cell size
        return int(math.ceil((self.y_max - self.y_min) / self.cell_dy - 1e-9))

    @property
    def width(self) -> int:
        return int(math.ceil((self.x_max - self.x_min) / self.cell_dx - 1e-9))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """(ys, xs) world coordinates of cell centers, per row / per col."""
        ys = self.y_min + (np.arange(self.height) + 0.5) * self.cell_dy
        xs = self.x_min + (np.arange(self.width) + 0.5) * self.cell_dx
        return ys, xs

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min, "x_max": self.x_max,
            "y_min": self.y_min, "y_max": self.y_max,
            "cell_dx": self.cell_dx, "cell_dy": self.cell_dy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(d["x_min"], d["x_max"], d["y_min"], d["y_max"],
                   d["cell_dx"], d["cell_dy"])


def world_to_cell(p: Point2, spec: GridSpec) -> Optional[Tuple[int, int]]:
    """Map a world point to its (row, col) cell, or None if outside the ROI.

    The ROI is half-open: [x_min, x_max) x [y_min, y_max).
    """
    if not (spec.x_min <= p.x < spec.x_max and spec.y_min <= p.y < spec.y_max):
        return None
    row = int(math.floor((p.y - spec.y_min) / spec.cell_dy))
    col = int(math.floor((p.x - spec.x_min) / spec.cell_dx))
    # Guard against float round-up at the far edge.
    row = min(row, spec.height - 1)
    col = min(col, spec.width - 1)
    return (row, col)


def segment_angle(a: Point2, b: Point2) -> float:
    """Direction angle of the segment a->b in (-pi, pi]; 0 for a == b."""
    return math.atan2(b.y - a.y, b.x - a.x)


def fold_axial(angle: float) -> float:
    """Fold an angle mod pi into (-pi/2, pi/2] (orientation without heading)."""
    folded = math.remainder(angle, math.pi)
    if folded <= -math.pi / 2:
        folded += math.pi
    return folded


@dataclass(frozen=True)
class Heatmap:
    """Rasterized trajectory prior: per-cell density, direction and raw count."""

    spec: GridSpec
    density: np.ndarray    # (H, W) float64 in [0, 1]
    direction: np.ndarray  # (H, W) float64 in (-pi/2, pi/2]
    count: np.ndarray      # (H, W) int64, trajectories per cell
    n_max: int

    def __post_init__(self):
        shape = self.spec.shape
        for name in ("density", "direction", "count"):
            arr = getattr(self, name)
            _require(arr.shape == shape, f"{name} shape {arr.shape} != {shape}")
        _require(self.n_max >= 1, "n_max must be positive")


@dataclass(frozen=True)
class FeatureMap:
    """Generic H x W x C real-valued tensor on a grid."""

    spec: GridSpec
    data: np.ndarray  # (H, W, C) float64

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        _require(arr.ndim == 3, "feature data must be (H, W, C)")
        _require(arr.shape[:2] == self.spec.shape,
                 f"feature shape {arr.shape[:2]} != grid shape {self.spec.shape}")
        _require(bool(np.all(np.isfinite(arr))), "feature data must be finite")
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class CenterlineMap:
    """Ground-truth lane centerlines as polylines on a grid."""

    polylines: Tuple[Trajectory, ...]
    spec: GridSpec

    def __post_init__(self):
        object.__setattr__(self, "polylines", tuple(self.polylines))

    def __len__(self) -> int:
        return len(self.polylines)
