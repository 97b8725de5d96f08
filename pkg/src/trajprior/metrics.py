"""Prior-quality metrics: mask IoU, attribute error, and Chamfer-style distance."""
from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from .core import CenterlineMap, ContractError, GridSpec, Trajectory, TrajectorySet
from .raster import rasterize_polylines

DEFAULT_LINE_WIDTH = 0.75  # meters
DEFAULT_SAMPLE_STEP = 0.5  # meters, polyline -> point-set sampling


def iou(mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """|A∩B| / |A∪B|; 1.0 when both masks are empty."""
    a = np.asarray(mask_a, dtype=bool)
    b = np.asarray(mask_b, dtype=bool)
    if a.shape != b.shape:
        raise ContractError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum()) / union


def prior_iou(pred: Union[TrajectorySet, Sequence[Trajectory]],
              gt: CenterlineMap, spec: GridSpec,
              width_m: float = DEFAULT_LINE_WIDTH) -> float:
    """IoU of the rasterized prior polylines against rasterized centerlines."""
    polylines = pred.trajectories if isinstance(pred, TrajectorySet) else tuple(pred)
    mask_pred = rasterize_polylines(polylines, spec, width_m)
    mask_gt = rasterize_polylines(gt.polylines, spec, width_m)
    return iou(mask_pred, mask_gt)


def ae_type(pred: Sequence, gt: Sequence) -> float:
    """Proportion of mismatched elements between two equal-length label arrays."""
    if len(pred) != len(gt):
        raise ContractError(f"label arrays differ in length: {len(pred)} vs {len(gt)}")
    if len(pred) == 0:
        return 0.0
    mismatches = sum(1 for p, g in zip(pred, gt) if p != g)
    return mismatches / len(pred)


def ae_dist(pred: np.ndarray, gt: np.ndarray) -> float:
    """Symmetric Chamfer mean between two nonempty 2D point sets.

    0.5 * (mean over pred of min dist to gt + mean over gt of min dist to pred).
    """
    p = np.asarray(pred, dtype=np.float64).reshape(-1, 2)
    g = np.asarray(gt, dtype=np.float64).reshape(-1, 2)
    if len(p) == 0 or len(g) == 0:
        raise ContractError("point sets must be nonempty")
    diff = p[:, None, :] - g[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    return 0.5 * (float(d.min(axis=1).mean()) + float(d.min(axis=0).mean()))


def sample_polyline_points(polylines: Sequence[Trajectory],
                           step: float = DEFAULT_SAMPLE_STEP) -> np.ndarray:
    """Points along each polyline at a fixed arc-length step (endpoints included)."""
    if step <= 0:
        raise ContractError("step must be > 0")
    chunks = []
    for poly in polylines:
        pts = poly.points
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        total = s[-1]
        if total == 0.0:
            chunks.append(pts[:1])
            continue
        n = max(2, int(np.floor(total / step)) + 1)
        targets = np.linspace(0.0, total, n)
        x = np.interp(targets, s, pts[:, 0])
        y = np.interp(targets, s, pts[:, 1])
        chunks.append(np.column_stack([x, y]))
    if not chunks:
        raise ContractError("no polylines to sample")
    return np.concatenate(chunks, axis=0)
