import numpy as np

from trajprior.core import FeatureMap, GridSpec
from trajprior.fusion import random_params
from trajprior.ingest import synth_scene
from trajprior.raster import rasterize_trajectories
from trajprior.tensorio import (load_feature_map, load_heatmap, load_params,
                                load_tensors, save_feature_map, save_heatmap,
                                save_params, save_tensors, write_pgm)


def test_tensor_roundtrip(tmp_path):
    path = tmp_path / "t.tp"
    rng = np.random.default_rng(0)
    tensors = {"a": rng.normal(0, 1, (3, 4)), "b": np.arange(6, dtype=np.int64)}
    save_tensors(path, tensors, {"note": 1})
    got, meta = load_tensors(path)
    assert meta == {"note": 1}
    assert np.array_equal(got["a"], tensors["a"])
    assert np.array_equal(got["b"], tensors["b"])


def test_byte_identical_rewrites(tmp_path):
    ts, _ = synth_scene(0, 2, 2, 0.1)
    hm = rasterize_trajectories(ts, GridSpec())
    p1, p2 = tmp_path / "a.tp", tmp_path / "b.tp"
    save_heatmap(p1, hm)
    save_heatmap(p2, hm)
    assert p1.read_bytes() == p2.read_bytes()


def test_heatmap_roundtrip(tmp_path):
    ts, _ = synth_scene(1, 2, 3, 0.2)
    hm = rasterize_trajectories(ts, GridSpec())
    path = tmp_path / "hm.tp"
    save_heatmap(path, hm)
    got = load_heatmap(path)
    assert got.spec == hm.spec
    assert got.n_max == hm.n_max
    assert np.array_equal(got.density, hm.density)
    assert np.array_equal(got.direction, hm.direction)
    assert np.array_equal(got.count, hm.count)


def test_feature_map_roundtrip(tmp_path):
    spec = GridSpec(0, 3, 0, 2, 1, 1)
    fm = FeatureMap(spec, np.random.default_rng(1).normal(0, 1, (2, 3, 4)))
    path = tmp_path / "fm.tp"
    save_feature_map(path, fm)
    got = load_feature_map(path)
    assert got.spec == spec
    assert np.array_equal(got.data, fm.data)


def test_params_roundtrip(tmp_path):
    op, fp = random_params(3, channels=2, hidden=4)
    path = tmp_path / "p.tp"
    save_params(path, op, fp)
    op2, fp2 = load_params(path)
    assert np.array_equal(op.w1, op2.w1) and np.array_equal(op.b2, op2.b2)
    assert np.array_equal(fp.weight, fp2.weight)


def test_pgm_header_and_size(tmp_path):
    path = tmp_path / "img.pgm"
    write_pgm(path, np.linspace(0, 1, 12).reshape(3, 4))
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n4 3\n255\n")
    assert len(raw) == len(b"P5\n4 3\n255\n") + 12
