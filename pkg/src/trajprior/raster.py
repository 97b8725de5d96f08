"""Rasterization: trajectory density/direction heatmaps and centerline masks."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from ._kernels import traverse_cells
from .core import (CenterlineMap, ContractError, FeatureMap, GridSpec, Heatmap,
                   Trajectory, TrajectorySet, fold_axial)


def worker_count() -> int:
    """Parallelism cap from TRAJPRIOR_THREADS (0 or unset = auto)."""
    raw = os.environ.get("TRAJPRIOR_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


def _trajectory_contribution(t: Trajectory, spec: GridSpec):
    """Cells visited by one trajectory and the per-cell direction-vector sums.

    Counts are deduplicated per trajectory (a trajectory increments a cell
    at most once); every segment visit contributes its unit direction vector.
    Zero-length segments are skipped.
    """
    visited: Dict[Tuple[int, int], None] = {}
    vec: Dict[Tuple[int, int], List[float]] = {}
    pts = t.points
    for i in range(len(pts) - 1):
        x0, y0 = pts[i]
        x1, y1 = pts[i + 1]
        if x0 == x1 and y0 == y1:
            continue
        norm = math.hypot(x1 - x0, y1 - y0)
        ux = (x1 - x0) / norm
        uy = (y1 - y0) / norm
        cells = traverse_cells(x0, y0, x1, y1, spec.x_min, spec.y_min,
                               spec.cell_dx, spec.cell_dy,
                               spec.height, spec.width)
        for row, col in cells:
            key = (int(row), int(col))
            visited[key] = None
            acc = vec.get(key)
            if acc is None:
                vec[key] = [ux, uy]
            else:
                acc[0] += ux
                acc[1] += uy
    return list(visited.keys()), vec


def rasterize_trajectories(ts: TrajectorySet, spec: GridSpec) -> Heatmap:
    """Density/direction heatmap of a trajectory set (visit-frequency encoding).

    Per cell: N = number of distinct trajectories touching it, theta = circular
    mean of the touching segments' directions folded into (-pi/2, pi/2], and
    density = N / N_max with N_max the max cell count of this heatmap. The
    result is independent of trajectory order: contributions are merged in a
    canonical order (sorted by id then coordinates).
    """
    h, w = spec.shape
    count = np.zeros((h, w), dtype=np.int64)
    sum_x = np.zeros((h, w), dtype=np.float64)
    sum_y = np.zeros((h, w), dtype=np.float64)

    trajs = list(ts.trajectories)
    workers = min(worker_count(), max(1, len(trajs)))
    if workers > 1 and len(trajs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            contributions = list(pool.map(
                lambda t: _trajectory_contribution(t, spec), trajs))
    else:
        contributions = [_trajectory_contribution(t, spec) for t in trajs]

    # fixed reduction order so float sums don't depend on input order
    order = sorted(range(len(trajs)),
                   key=lambda i: (trajs[i].id, trajs[i].points.tobytes()))
    for i in order:
        visited, vec = contributions[i]
        for (row, col) in visited:
            count[row, col] += 1
        for (row, col), (vx, vy) in vec.items():
            sum_x[row, col] += vx
            sum_y[row, col] += vy

    n_max = int(count.max()) if count.size and count.max() > 0 else 1
    density = count.astype(np.float64) / float(n_max)
    direction = np.zeros((h, w), dtype=np.float64)
    hit = count > 0
    for row, col in zip(*np.nonzero(hit)):
        direction[row, col] = fold_axial(
            math.atan2(sum_y[row, col], sum_x[row, col]))
    return Heatmap(spec, density, direction, count, n_max)


def _stamp_segment(mask: np.ndarray, a, b, spec: GridSpec, radius: float) -> None:
    """Set cells whose center is within radius of segment a-b (bbox-limited)."""
    ys, xs = spec.cell_centers()
    x_lo = min(a[0], b[0]) - radius
    x_hi = max(a[0], b[0]) + radius
    y_lo = min(a[1], b[1]) - radius
    y_hi = max(a[1], b[1]) + radius
    c0 = max(0, int(math.floor((x_lo - spec.x_min) / spec.cell_dx - 0.5)))
    c1 = min(spec.width, int(math.ceil((x_hi - spec.x_min) / spec.cell_dx + 0.5)))
    r0 = max(0, int(math.floor((y_lo - spec.y_min) / spec.cell_dy - 0.5)))
    r1 = min(spec.height, int(math.ceil((y_hi - spec.y_min) / spec.cell_dy + 0.5)))
    if c0 >= c1 or r0 >= r1:
        return
    cx = xs[c0:c1][None, :]
    cy = ys[r0:r1][:, None]
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        d2 = (cx - ax) ** 2 + (cy - ay) ** 2
    else:
        tt = np.clip(((cx - ax) * dx + (cy - ay) * dy) / seg2, 0.0, 1.0)
        d2 = (cx - (ax + tt * dx)) ** 2 + (cy - (ay + tt * dy)) ** 2
    mask[r0:r1, c0:c1] |= d2 <= radius * radius


def rasterize_polylines(polylines: Sequence[Trajectory], spec: GridSpec,
                        width_m: float = 0.75) -> np.ndarray:
    """Binary mask: cell is 1 iff its center lies within width_m/2 of a polyline."""
    if width_m <= 0:
        raise ContractError("width_m must be > 0")
    mask = np.zeros(spec.shape, dtype=bool)
    radius = width_m / 2.0
    for poly in polylines:
        pts = poly.points
        for i in range(len(pts) - 1):
            _stamp_segment(mask, pts[i], pts[i + 1], spec, radius)
    return mask


def rasterize_centerlines(cmap: CenterlineMap, spec: GridSpec,
                          width_m: float = 0.75) -> np.ndarray:
    return rasterize_polylines(cmap.polylines, spec, width_m)


def heatmap_to_feature(h: Heatmap) -> FeatureMap:
    """2-channel feature map: density, and direction scaled by 2/pi into (-1, 1]."""
    data = np.stack([h.density, h.direction * (2.0 / math.pi)], axis=2)
    return FeatureMap(h.spec, data)
