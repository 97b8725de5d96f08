import math

import numpy as np
import pytest

from trajprior.core import CenterlineMap, GridSpec, Trajectory, TrajectorySet
from trajprior.ingest import synth_scene
from trajprior.raster import (heatmap_to_feature, rasterize_centerlines,
                              rasterize_trajectories)


def single_set(points, tid="t0"):
    return TrajectorySet((Trajectory(tid, points),))


class TestRasterizeTrajectories:
    def test_single_horizontal_trajectory(self):
        spec = GridSpec()
        ts = single_set([[-49.9, 0.1], [49.9, 0.1]])
        hm = rasterize_trajectories(ts, spec)
        hit = hm.count > 0
        assert hit.sum() == spec.width  # one full row of cells
        assert np.all(hm.density[hit] == 1.0)
        assert np.all(hm.direction[hit] == 0.0)
        assert hm.n_max == 1

    def test_two_identical_trajectories_normalize(self):
        spec = GridSpec()
        pts = [[-10, 0.1], [10, 0.1]]
        ts = TrajectorySet((Trajectory("a", pts), Trajectory("b", pts)))
        hm = rasterize_trajectories(ts, spec)
        hit = hm.count > 0
        assert hm.n_max == 2
        assert np.all(hm.count[hit] == 2)
        assert np.all(hm.density[hit] == 1.0)

    def test_diagonal_direction(self):
        spec = GridSpec(0, 4, 0, 4, 1.0, 1.0)
        hm = rasterize_trajectories(single_set([[0.0, 0.0], [2.0, 2.0]]), spec)
        hit_cells = set(zip(*np.nonzero(hm.count)))
        assert hit_cells == {(0, 0), (1, 1), (2, 2)}
        for cell in hit_cells:
            assert hm.direction[cell] == pytest.approx(math.pi / 4)

    def test_empty_set_sentinel(self):
        hm = rasterize_trajectories(TrajectorySet(()), GridSpec())
        assert hm.n_max == 1
        assert not hm.count.any()
        assert not hm.density.any()

    def test_outside_roi_contributes_nothing(self):
        hm = rasterize_trajectories(single_set([[100, 100], [120, 130]]), GridSpec())
        assert not hm.count.any()

    def test_order_permutation_bit_exact(self):
        ts, _ = synth_scene(5, 3, 4, 0.4)
        spec = GridSpec()
        fwd = rasterize_trajectories(ts, spec)
        perm = TrajectorySet(tuple(reversed(ts.trajectories)),
                             ts.frame_id, ts.centerline_count)
        back = rasterize_trajectories(perm, spec)
        assert np.array_equal(fwd.count, back.count)
        assert np.array_equal(fwd.density, back.density)
        assert np.array_equal(fwd.direction, back.direction)

    def test_reversal_leaves_direction_channel(self):
        ts, _ = synth_scene(6, 2, 3, 0.3)
        spec = GridSpec()
        fwd = rasterize_trajectories(ts, spec)
        rev = TrajectorySet(tuple(t.reversed() for t in ts.trajectories),
                            ts.frame_id, ts.centerline_count)
        back = rasterize_trajectories(rev, spec)
        assert np.array_equal(fwd.count, back.count)
        assert np.allclose(fwd.direction, back.direction, atol=1e-12)

    def test_ranges(self):
        ts, _ = synth_scene(2, 3, 5, 0.5)
        hm = rasterize_trajectories(ts, GridSpec())
        assert hm.density.min() >= 0.0 and hm.density.max() == 1.0
        assert np.all(hm.direction > -math.pi / 2 - 1e-15)
        assert np.all(hm.direction <= math.pi / 2)

    def test_degenerate_segments_skipped(self):
        pts = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
        hm = rasterize_trajectories(single_set(pts), GridSpec(0, 4, 0, 4, 1, 1))
        assert hm.count.sum() > 0  # the real segment still rasterizes


class TestRasterizeCenterlines:
    def test_empty_map(self):
        mask = rasterize_centerlines(CenterlineMap((), GridSpec()), GridSpec())
        assert not mask.any()

    def test_width_cutoff_single_row(self):
        # horizontal line through cell centers: own row in, neighbors out
        spec = GridSpec(0, 5, 0, 5, 0.5, 0.5)
        y_line = 2.25  # center of row 4
        cmap = CenterlineMap((Trajectory("c", [[0.0, y_line], [5.0, y_line]]),), spec)
        mask = rasterize_centerlines(cmap, spec, width_m=0.75)
        rows = set(np.nonzero(mask)[0])
        assert rows == {4}  # adjacent centers at 0.5 m > 0.375 m

    def test_deterministic(self):
        _, cmap = synth_scene(3, 3, 1, 0.0)
        spec = GridSpec()
        a = rasterize_centerlines(cmap, spec)
        b = rasterize_centerlines(cmap, spec)
        assert np.array_equal(a, b)


class TestHeatmapToFeature:
    def test_zero_heatmap(self):
        hm = rasterize_trajectories(TrajectorySet(()), GridSpec())
        fm = heatmap_to_feature(hm)
        assert fm.channels == 2
        assert not fm.data.any()

    def test_direction_scaling(self):
        spec = GridSpec(0, 2, 0, 2, 1.0, 1.0)
        hm = rasterize_trajectories(single_set([[0.5, 0.1], [0.5, 1.9]]), spec)
        fm = heatmap_to_feature(hm)
        hit = hm.count > 0
        # vertical segment: direction pi/2 -> channel 1 equals 1.0
        assert np.all(fm.data[:, :, 1][hit] == pytest.approx(1.0))

    def test_linear_scaling_values(self):
        spec = GridSpec(0, 1, 0, 1, 1.0, 1.0)
        hm = rasterize_trajectories(TrajectorySet(()), spec)
        object.__setattr__(hm, "density", np.array([[0.5]]))
        object.__setattr__(hm, "direction", np.array([[-math.pi / 4]]))
        fm = heatmap_to_feature(hm)
        assert fm.data[0, 0, 0] == 0.5
        assert fm.data[0, 0, 1] == pytest.approx(-0.5)
