"""Representative-trajectory extraction: resampling, distances, K-means, FPS."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ._kernels import frechet_dp
from .core import ContractError, Trajectory, TrajectorySet

DEFAULT_RESAMPLE = 20


@dataclass(frozen=True)
class ResampledTrajectory:
    """Fixed-width arc-length-uniform embedding of a trajectory."""

    points: np.ndarray  # (R, 2) float64

    def __post_init__(self):
        arr = np.asarray(self.points, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 2:
            raise ContractError(f"resampled points must be (R>=2, 2), got {arr.shape}")
        object.__setattr__(self, "points", arr)

    @property
    def flat(self) -> np.ndarray:
        return self.points.ravel()


@dataclass
class ClusterResult:
    centers: List[ResampledTrajectory]
    assignment: np.ndarray  # (m,) int64
    inertia: float
    iterations: int
    inertia_trace: List[float] = field(default_factory=list)


@dataclass
class SampleResult:
    indices: List[int]
    min_dists: List[float]  # one per selection after the first


def resample(t: Trajectory, r: int = DEFAULT_RESAMPLE) -> ResampledTrajectory:
    """R points at arc-length fractions k/(R-1) by linear interpolation.

    A zero-length polyline collapses to R copies of its first point.
    """
    if r < 2:
        raise ContractError("resample count must be >= 2")
    pts = t.points
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total == 0.0:
        return ResampledTrajectory(np.repeat(pts[:1], r, axis=0))
    targets = np.linspace(0.0, total, r)
    x = np.interp(targets, s, pts[:, 0])
    y = np.interp(targets, s, pts[:, 1])
    out = np.column_stack([x, y])
    # np.interp is exact at the ends, but pin them anyway
    out[0] = pts[0]
    out[-1] = pts[-1]
    return ResampledTrajectory(out)


def euclid_flat_dist(a: ResampledTrajectory, b: ResampledTrajectory) -> float:
    if a.points.shape != b.points.shape:
        raise ContractError("resample widths differ")
    return float(np.linalg.norm(a.flat - b.flat))


def frechet_dist(a: Union[Trajectory, np.ndarray],
                 b: Union[Trajectory, np.ndarray]) -> float:
    """Discrete Frechet distance between two polylines."""
    pa = a.points if isinstance(a, Trajectory) else np.asarray(a, dtype=np.float64)
    pb = b.points if isinstance(b, Trajectory) else np.asarray(b, dtype=np.float64)
    if len(pa) < 1 or len(pb) < 1:
        raise ContractError("trajectories need at least one point")
    return frechet_dp(pa, pb)


def _embed(ts: TrajectorySet, r: int) -> np.ndarray:
    return np.stack([resample(t, r).flat for t in ts.trajectories])


def kmeans(ts: TrajectorySet, k: int, r: int = DEFAULT_RESAMPLE,
           max_iter: int = 100, tol: float = 1e-4, seed: int = 0) -> ClusterResult:
    """Lloyd iterations on arc-length-resampled, flattened trajectories.

    Initial centers are K distinct member trajectories picked by a seeded
    shuffle. Assignment ties break toward the lowest center index; stopping
    is max per-center displacement < tol or max_iter. A cluster that loses
    all members is reseeded with the point farthest from its own center.
    """
    m = len(ts)
    if k <= 0 or k > m:
        raise ContractError(f"k must be in [1, {m}], got {k}")
    if tol <= 0 or max_iter < 1:
        raise ContractError("tol must be > 0 and max_iter >= 1")
    x = _embed(ts, r)
    rng = np.random.default_rng(seed)
    centers = x[rng.permutation(m)[:k]].copy()

    assignment = np.zeros(m, dtype=np.int64)
    trace: List[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assignment = d2.argmin(axis=1)
        inertia = float(d2[np.arange(m), assignment].sum())
        trace.append(inertia)
        # empty-cluster repair: reseed with the worst-fit point, but never
        # steal the last member of another cluster
        costs = d2[np.arange(m), assignment].copy()
        sizes = np.bincount(assignment, minlength=k)
        for j in range(k):
            if sizes[j] == 0:
                eligible = sizes[assignment] > 1
                worst = int(np.where(eligible, costs, -1.0).argmax())
                sizes[assignment[worst]] -= 1
                sizes[j] += 1
                centers[j] = x[worst]
                assignment[worst] = j
                costs[worst] = 0.0
        new_centers = centers.copy()
        for j in range(k):
            members = assignment == j
            new_centers[j] = x[members].mean(axis=0)
        shift = float(np.linalg.norm(new_centers - centers, axis=1).max())
        centers = new_centers
        if shift < tol:
            break

    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    assignment = d2.argmin(axis=1)
    inertia = float(d2[np.arange(m), assignment].sum())
    trace.append(inertia)
    result_centers = [ResampledTrajectory(c.reshape(-1, 2)) for c in centers]
    return ClusterResult(result_centers, assignment, inertia, iterations, trace)


def fps(ts: TrajectorySet, count: int, seed: int = 0,
        start_index: Optional[int] = None) -> SampleResult:
    """Greedy farthest-point sampling under the discrete Frechet distance.

    Each step picks the unselected trajectory whose minimum Frechet distance
    to the selected subset is largest (ties toward the lowest index). The
    first pick is seeded-uniform unless start_index is given.
    """
    m = len(ts)
    if count <= 0 or count > m:
        raise ContractError(f"count must be in [1, {m}], got {count}")
    if start_index is None:
        start = int(np.random.default_rng(seed).integers(m))
    else:
        if not (0 <= start_index < m):
            raise ContractError(f"start_index out of range [0, {m})")
        start = start_index

    trajs = ts.trajectories
    selected = [start]
    min_dists: List[float] = []
    min_d = np.array([frechet_dist(trajs[start], t) for t in trajs])
    min_d[start] = -np.inf
    for _ in range(count - 1):
        pick = int(min_d.argmax())
        min_dists.append(float(min_d[pick]))
        selected.append(pick)
        dists = np.array([frechet_dist(trajs[pick], t) for t in trajs])
        min_d = np.minimum(min_d, dists)
        min_d[pick] = -np.inf
    return SampleResult(selected, min_dists)
