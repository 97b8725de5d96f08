import math

import numpy as np
import pytest

from trajprior.core import ContractError, Trajectory, TrajectorySet
from trajprior.selection import (euclid_flat_dist, fps, frechet_dist, kmeans,
                                 resample)

from conftest import random_set, random_trajectory
from oracles import best_two_partition, fps_by_full_matrix, frechet_by_enumeration


class TestResample:
    def test_uniform_on_segment(self):
        r = resample(Trajectory("t", [[0, 0], [1, 0]]), 3)
        assert np.allclose(r.points, [[0, 0], [0.5, 0], [1, 0]])

    def test_r2_keeps_endpoints(self):
        t = Trajectory("t", [[0, 0], [3, 1], [5, -2]])
        r = resample(t, 2)
        assert np.array_equal(r.points, [t.points[0], t.points[-1]])

    def test_l_shape_midpoint_at_corner(self):
        r = resample(Trajectory("t", [[0, 0], [1, 0], [1, 1]]), 3)
        assert np.allclose(r.points[1], [1, 0])

    def test_zero_length_collapses(self):
        r = resample(Trajectory("t", [[2, 3], [2, 3]]), 5)
        assert np.all(r.points == [2, 3])

    def test_endpoints_and_monotone_arc_length(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            t = random_trajectory(rng, n_points=int(rng.integers(2, 12)))
            r = resample(t, 20)
            assert np.allclose(r.points[0], t.points[0], atol=1e-9)
            assert np.allclose(r.points[-1], t.points[-1], atol=1e-9)


class TestEuclidFlatDist:
    def test_zero_on_equal(self):
        a = resample(Trajectory("t", [[0, 0], [4, 4]]), 5)
        assert euclid_flat_dist(a, a) == 0.0

    def test_constant_shift(self):
        a = resample(Trajectory("t", [[0, 0], [1, 0]]), 2)
        b = resample(Trajectory("t", [[3, 4], [4, 4]]), 2)
        # each of the 2 points shifted by (3,4): sqrt(2 * 25)
        assert euclid_flat_dist(a, b) == pytest.approx(math.sqrt(50.0))

    def test_symmetric(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = resample(random_trajectory(rng), 10)
            b = resample(random_trajectory(rng), 10)
            assert euclid_flat_dist(a, b) == euclid_flat_dist(b, a)

    def test_mismatched_r_rejected(self):
        a = resample(Trajectory("t", [[0, 0], [1, 0]]), 3)
        b = resample(Trajectory("t", [[0, 0], [1, 0]]), 4)
        with pytest.raises(ContractError):
            euclid_flat_dist(a, b)


class TestFrechet:
    def test_identical_zero(self):
        t = Trajectory("t", [[0, 0], [1, 2], [3, 3]])
        assert frechet_dist(t, t) == 0.0

    def test_parallel_offset(self):
        a = Trajectory("a", [[0, 0], [5, 0]])
        b = Trajectory("b", [[0, 1], [5, 1]])
        assert frechet_dist(a, b) == pytest.approx(1.0)

    def test_small_instance_matches_enumeration(self):
        a = np.array([[0, 0], [4, 0]], float)
        b = np.array([[0, 1], [2, 3], [4, 1]], float)
        assert frechet_dist(a, b) == frechet_by_enumeration(a, b)

    def test_random_instances_match_enumeration(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            a = rng.normal(0, 10, (int(rng.integers(1, 7)), 2))
            b = rng.normal(0, 10, (int(rng.integers(1, 7)), 2))
            assert frechet_dist(a, b) == frechet_by_enumeration(a, b)

    def test_metric_properties(self):
        rng = np.random.default_rng(7)
        trajs = [random_trajectory(rng, tid=f"t{i}") for i in range(12)]
        for a in trajs:
            for b in trajs:
                dab = frechet_dist(a, b)
                assert dab == frechet_dist(b, a)
                assert dab >= 0.0
                if np.array_equal(a.points, b.points):
                    assert dab == 0.0
                else:
                    assert dab > 0.0 or np.array_equal(a.points, b.points)
        for _ in range(200):
            i, j, k = rng.integers(0, 12, 3)
            assert (frechet_dist(trajs[i], trajs[k]) <=
                    frechet_dist(trajs[i], trajs[j]) +
                    frechet_dist(trajs[j], trajs[k]) + 1e-9)

    def test_bounds(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            n = int(rng.integers(2, 10))
            a = rng.normal(0, 10, (n, 2))
            b = rng.normal(0, 10, (n, 2))
            d = frechet_dist(a, b)
            identity_bound = float(np.linalg.norm(a - b, axis=1).max())
            assert d <= identity_bound + 1e-12
            # never below the symmetric nearest-neighbor (Chamfer-style) max
            fwd = np.linalg.norm(a[:, None] - b[None, :], axis=2)
            chamfer_max = max(fwd.min(axis=1).max(), fwd.min(axis=0).max())
            assert d >= chamfer_max - 1e-12


class TestKmeans:
    def bundles(self, rng, centers, per, spread=0.05):
        trajs = []
        for ci, (cx, cy) in enumerate(centers):
            for j in range(per):
                base = np.array([[cx - 2, cy], [cx, cy], [cx + 2, cy]])
                trajs.append(Trajectory(f"b{ci}_{j}",
                                        base + rng.normal(0, spread, base.shape)))
        return TrajectorySet(tuple(trajs))

    def test_k_equals_m_zero_inertia(self):
        rng = np.random.default_rng(9)
        ts = random_set(rng, 5)
        res = kmeans(ts, 5, seed=3)
        assert res.inertia == pytest.approx(0.0, abs=1e-18)

    def test_separated_bundles(self):
        rng = np.random.default_rng(10)
        ts = self.bundles(rng, [(0, 0), (100, 100)], per=4, spread=0.0)
        res = kmeans(ts, 2, seed=1)
        labels = res.assignment
        assert len(set(labels[:4])) == 1
        assert len(set(labels[4:])) == 1
        assert labels[0] != labels[4]

    def test_tiny_instance_matches_bruteforce(self):
        rng = np.random.default_rng(11)
        ts = self.bundles(rng, [(0, 0), (30, 10)], per=3, spread=0.3)
        res = kmeans(ts, 2, r=6, seed=0)
        x = np.stack([resample(t, 6).flat for t in ts.trajectories])
        want_labels, want_inertia = best_two_partition(x)
        got = res.assignment
        same = np.array_equal(got == got[0], want_labels == want_labels[0])
        assert same
        assert res.inertia == pytest.approx(want_inertia, rel=1e-9)

    def test_inertia_trace_nonincreasing(self):
        rng = np.random.default_rng(12)
        for seed in range(10):
            ts = random_set(rng, 15, n_points=6)
            res = kmeans(ts, 4, seed=seed)
            trace = res.inertia_trace
            assert all(trace[i + 1] <= trace[i] + 1e-9 for i in range(len(trace) - 1))

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        ts = random_set(rng, 10, n_points=5)
        a = kmeans(ts, 3, seed=42)
        b = kmeans(ts, 3, seed=42)
        assert np.array_equal(a.assignment, b.assignment)
        assert a.inertia == b.inertia
        for ca, cb in zip(a.centers, b.centers):
            assert np.array_equal(ca.points, cb.points)

    def test_bad_k_rejected(self):
        rng = np.random.default_rng(14)
        ts = random_set(rng, 3)
        with pytest.raises(ContractError):
            kmeans(ts, 0)
        with pytest.raises(ContractError):
            kmeans(ts, 4)


class TestFps:
    def triangle_set(self):
        # mutual Frechet distances roughly {d01=1, d02=10, d12=10}
        return TrajectorySet((
            Trajectory("a", [[0, 0], [1, 0]]),
            Trajectory("b", [[0, 1], [1, 1]]),
            Trajectory("c", [[0, 10], [1, 10]]),
        ))

    def test_max_min_pick(self):
        res = fps(self.triangle_set(), 2, start_index=0)
        assert res.indices == [0, 2]
        assert res.min_dists == [pytest.approx(10.0)]

    def test_count_one(self):
        res = fps(self.triangle_set(), 1, start_index=1)
        assert res.indices == [1]
        assert res.min_dists == []

    def test_exhaustion(self):
        rng = np.random.default_rng(15)
        ts = random_set(rng, 6)
        res = fps(ts, 6, seed=0)
        assert sorted(res.indices) == list(range(6))

    def test_matches_full_matrix_oracle(self):
        rng = np.random.default_rng(16)
        for _ in range(10):
            m = int(rng.integers(3, 9))
            ts = random_set(rng, m)
            matrix = [[frechet_dist(a, b) for b in ts.trajectories]
                      for a in ts.trajectories]
            for start in range(m):
                got = fps(ts, m, start_index=start).indices
                want = fps_by_full_matrix(matrix, m, start)
                assert got == want

    def test_order_of_unselected_does_not_matter(self):
        # tie-free distances: permuting non-start trajectories permutes
        # indices consistently
        ts = self.triangle_set()
        res = fps(ts, 3, start_index=0)
        perm = TrajectorySet((ts.trajectories[0], ts.trajectories[2],
                              ts.trajectories[1]))
        res_p = fps(perm, 3, start_index=0)
        ids = [ts.trajectories[i].id for i in res.indices]
        ids_p = [perm.trajectories[i].id for i in res_p.indices]
        assert ids == ids_p

    def test_count_too_large_rejected(self):
        with pytest.raises(ContractError):
            fps(self.triangle_set(), 4, seed=0)
