"""Pure-Python reference implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable
(or when TRAJPRIOR_PURE=1). The compiled module in _fast.pyx must agree
with these bit for bit; tests/test_kernels.py enforces that.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def frechet_dp(a: np.ndarray, b: np.ndarray) -> float:
    """Discrete Frechet distance between point sequences a (n,2) and b (m,2).

    Standard O(n*m) dynamic program over the coupling table, rolling one row.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = len(a), len(b)
    # full pointwise distance matrix
    diff = a[:, None, :] - b[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    prev = np.empty(nb)
    cur = np.empty(nb)
    prev[0] = d[0, 0]
    for j in range(1, nb):
        prev[j] = max(d[0, j], prev[j - 1])
    for i in range(1, na):
        cur[0] = max(d[i, 0], prev[0])
        for j in range(1, nb):
            cur[j] = max(d[i, j], min(prev[j], prev[j - 1], cur[j - 1]))
        prev, cur = cur, prev
    return float(prev[nb - 1])


def traverse_cells(x0: float, y0: float, x1: float, y1: float,
                   x_min: float, y_min: float, dx: float, dy: float,
                   height: int, width: int) -> np.ndarray:
    """Cells touched by the continuous segment (x0,y0)->(x1,y1), clipped to the ROI.

    A cell is touched iff it contains some point of the segment under the
    half-open cell convention. Computed by splitting the segment at every
    grid-line crossing and mapping each piece's midpoint (plus the two
    endpoints) to its cell. Returns an (K, 2) int64 array of (row, col),
    in traversal order, deduplicated.
    """
    # grid coordinates: u = col axis, v = row axis
    u0 = (x0 - x_min) / dx
    v0 = (y0 - y_min) / dy
    u1 = (x1 - x_min) / dx
    v1 = (y1 - y_min) / dy
    ts = [0.0, 1.0]
    for p0, p1 in ((u0, u1), (v0, v1)):
        lo, hi = (p0, p1) if p0 < p1 else (p1, p0)
        k = math.floor(lo) + 1
        span = p1 - p0
        while k < hi:
            if k > lo:
                ts.append((k - p0) / span)
            k += 1
    ts.sort()
    seen = {}
    for t in _sample_params(ts):
        u = u0 + t * (u1 - u0)
        v = v0 + t * (v1 - v0)
        row = math.floor(v)
        col = math.floor(u)
        if 0 <= row < height and 0 <= col < width:
            seen[(row, col)] = None
    out = np.array(list(seen.keys()), dtype=np.int64)
    return out.reshape(-1, 2)


def _sample_params(ts):
    # endpoints themselves, plus the midpoint of every sub-interval
    yield ts[0]
    for i in range(len(ts) - 1):
        if ts[i + 1] > ts[i]:
            yield 0.5 * (ts[i] + ts[i + 1])
    yield ts[-1]
