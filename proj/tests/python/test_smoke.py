import os
from pathlib import Path

import numpy as np
import pytest

import pflow

SCENES = Path(os.environ.get("PFLOW_SCENES_DIR", Path(__file__).resolve().parents[2] / "scenes"))


@pytest.fixture(scope="module")
def pattern():
    return pflow.generate_pattern(seed=1)


@pytest.fixture(scope="module")
def small_rig():
    return pflow.RigModel(600.0, 0.218, 320, 96, 30.0, 180.0)


def test_geometry_round_trip(small_rig):
    assert pflow.disparity_to_depth(120.0, small_rig) == pytest.approx(1.09)
    assert pflow.depth_to_disparity(1.09, small_rig) == pytest.approx(120.0)
    assert pflow.camera_to_pattern_x(200.0, 120.0) == 80.0
    with pytest.raises(ArithmeticError):
        pflow.disparity_to_depth(0.0, small_rig)


def test_pattern(pattern):
    assert pattern.tile.shape == (64, 640)
    assert pattern.tile.dtype == np.float32
    assert pflow.rows_unique(pattern)
    assert pattern.sample(10.0, 3.0) == pytest.approx(pattern.tile[3, 10])


def test_lcn_is_gain_invariant():
    rng = np.random.default_rng(0)
    img = rng.random((40, 50), dtype=np.float32)
    a = pflow.lcn(img)
    b = pflow.lcn(2.0 * img + 0.1)
    assert np.max(np.abs(a - b)) < 1e-2
    assert pflow.downsample(img, 5).shape == (8, 10)


def test_render_flow_and_estimate(pattern):
    rig, scene, noise = pflow.load_scene(SCENES / "moving_plane.txt")
    img0, gt0 = pflow.render_frame(scene, 0, rig, pattern, noise)
    img1, gt1 = pflow.render_frame(scene, 1, rig, pattern, noise)
    assert img0.shape == (rig.height, rig.width)
    assert gt1.d[100, 300] == pytest.approx(61.0, abs=1e-4)

    flow = pflow.compute_pattern_flow(pflow.lcn(img1), pflow.lcn(img0))
    assert flow.u.shape == (60, 80)
    u = flow.u[flow.valid]
    assert abs(np.mean(u) - 1.0) < 0.3

    maps = pflow.run_sequence([img0, img1], rig, pattern)
    assert len(maps) == 2
    assert pflow.avg_l1(maps[1], gt1) < 0.5
    row = pflow.evaluate_sequence(maps, [gt0, gt1])
    assert row["n_frames"] == 1
    assert set(row) >= {"o1", "o2", "o5", "avg"}


def test_metrics_on_crafted_maps():
    d = np.full((4, 6), 50.0, dtype=np.float32)
    valid = np.ones((4, 6), dtype=bool)
    gt = pflow.DisparityMap(d, valid)
    pred = pflow.DisparityMap(d + 3.0, valid)
    assert pflow.bad_pixel_ratio(pred, gt, 1.0) == 100.0
    assert pflow.bad_pixel_ratio(pred, gt, 5.0) == 0.0
    assert pflow.avg_l1(pred, gt) == pytest.approx(3.0)
    with pytest.raises(ArithmeticError):
        pflow.avg_l1(pred, pflow.DisparityMap(d, np.zeros_like(valid)))


def test_unknown_ablation(pattern, small_rig):
    with pytest.raises(ValueError):
        pflow.run_sequence([np.zeros((96, 320), np.float32)], small_rig, pattern, ablation="bogus")
