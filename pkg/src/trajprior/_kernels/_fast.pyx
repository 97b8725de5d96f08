# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; must match _ref.py bit for bit."""

from libc.math cimport sqrt, floor, fmax, fmin

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def frechet_dp(a, b):
    """Discrete Frechet distance between point sequences a (n,2) and b (m,2)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] aa = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bb = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t na = aa.shape[0]
    cdef Py_ssize_t nb = bb.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] prev = np.empty(nb, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cur = np.empty(nb, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tmp
    cdef Py_ssize_t i, j
    cdef double ddx, ddy, d

    ddx = aa[0, 0] - bb[0, 0]
    ddy = aa[0, 1] - bb[0, 1]
    prev[0] = sqrt(ddx * ddx + ddy * ddy)
    for j in range(1, nb):
        ddx = aa[0, 0] - bb[j, 0]
        ddy = aa[0, 1] - bb[j, 1]
        d = sqrt(ddx * ddx + ddy * ddy)
        prev[j] = fmax(d, prev[j - 1])
    for i in range(1, na):
        ddx = aa[i, 0] - bb[0, 0]
        ddy = aa[i, 1] - bb[0, 1]
        d = sqrt(ddx * ddx + ddy * ddy)
        cur[0] = fmax(d, prev[0])
        for j in range(1, nb):
            ddx = aa[i, 0] - bb[j, 0]
            ddy = aa[i, 1] - bb[j, 1]
            d = sqrt(ddx * ddx + ddy * ddy)
            cur[j] = fmax(d, fmin(prev[j], fmin(prev[j - 1], cur[j - 1])))
        tmp = prev
        prev = cur
        cur = tmp
    return float(prev[nb - 1])


def traverse_cells(double x0, double y0, double x1, double y1,
                   double x_min, double y_min, double dx, double dy,
                   Py_ssize_t height, Py_ssize_t width):
    """Cells touched by a segment under the half-open cell convention.

    Same split-at-grid-crossings construction as the reference kernel.
    """
    cdef double u0 = (x0 - x_min) / dx
    cdef double v0 = (y0 - y_min) / dy
    cdef double u1 = (x1 - x_min) / dx
    cdef double v1 = (y1 - y_min) / dy
    cdef list ts = [0.0, 1.0]
    cdef double p0, p1, lo, hi, span, k
    cdef int axis
    for axis in range(2):
        if axis == 0:
            p0 = u0; p1 = u1
        else:
            p0 = v0; p1 = v1
        if p0 < p1:
            lo = p0; hi = p1
        else:
            lo = p1; hi = p0
        span = p1 - p0
        k = floor(lo) + 1.0
        while k < hi:
            if k > lo:
                ts.append((k - p0) / span)
            k += 1.0
    ts.sort()

    cdef Py_ssize_t n = len(ts)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tarr = np.array(ts, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] cells = np.empty((n + 1, 2), dtype=np.int64)
    cdef Py_ssize_t count = 0
    cdef Py_ssize_t i
    cdef double t, u, v
    cdef long row, col
    seen = {}
    for i in range(n + 1):
        if i == 0:
            t = tarr[0]
        elif i == n:
            t = tarr[n - 1]
        else:
            if tarr[i] <= tarr[i - 1]:
                continue
            t = 0.5 * (tarr[i - 1] + tarr[i])
        u = u0 + t * (u1 - u0)
        v = v0 + t * (v1 - v0)
        row = <long>floor(v)
        col = <long>floor(u)
        if 0 <= row < height and 0 <= col < width:
            key = (row, col)
            if key not in seen:
                seen[key] = None
                cells[count, 0] = row
                cells[count, 1] = col
                count += 1
    return np.ascontiguousarray(cells[:count])
