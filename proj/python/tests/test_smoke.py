import json
import math

import pytest

import poseloop

QUIET_CFG = """
stage = single_object
scene.models = l_bracket
trajectory.waypoints = 2
budget.init_attempts = 4
noise.fk_rot_sigma = 0
noise.fk_trans_sigma = 0
noise.calib_bias = 0,0,0,0,0,0
noise.depth_sigma = 0
noise.depth_dropout = 0
noise.rgb_offset = 0
noise.rgb_sigma = 0
noise.rgb_gain = 1,1,1
segmenter.erode_px = 0
segmenter.dilate_px = 0
segmenter.flip_rate = 0
segmenter.miss_rate = 0
"""


@pytest.fixture(scope="session")
def runner(tmp_path_factory):
    cache = tmp_path_factory.mktemp("assets")
    return poseloop.Runner(QUIET_CFG, str(cache))


def test_version_and_library():
    assert poseloop.__version__
    names = poseloop.model_names()
    assert len(names) == len(set(names)) == 5
    assert "box" in names and "l_bracket" in names


def test_config_parses_and_rejects_bad_keys():
    info = poseloop.config_info(poseloop.default_config())
    assert info["width"] == 160 and info["height"] == 120
    assert info["stage"] == "clutter" and len(info["models"]) == 5

    info = poseloop.config_info(QUIET_CFG)
    assert info["stage"] == "single_object" and info["models"] == ["l_bracket"]
    assert info["waypoints"] == 2

    with pytest.raises(Exception):
        poseloop.config_info("no.such.key = 1\n")


def test_sdf_probe_box():
    pts = [[0.0, 0.0, 0.0], [0.2, 0.0, 0.0], [0.0, 0.0, 0.2]]
    values, gradients = poseloop.probe_sdf("box", pts, voxel=0.005)
    assert values[0] < 0  # center is inside
    assert values[1] > 0.1 and values[2] > 0.1
    gx = gradients[1]
    assert gx[0] > 0.9 and abs(gx[1]) < 0.1 and abs(gx[2]) < 0.1

    with pytest.raises(Exception):
        poseloop.probe_sdf("teapot", pts)


def test_metrics_match_hand_values():
    pts = [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.01], [0.01, 0.01, 0.0]]
    ident = [1, 0, 0, 0, 0, 0, 0]
    shifted = [1, 0, 0, 0, 0.004, 0, 0]
    add = poseloop.add_metric(pts, ident, shifted)
    assert math.isclose(add, 0.004, rel_tol=0, abs_tol=1e-12)
    adds = poseloop.adds_metric(pts, ident, shifted)
    assert adds <= add + 1e-12


def test_initialize_accepts_clean_scene(runner):
    out = runner.initialize(seed=7)
    assert out["accepted"] == 1
    obj = out["objects"][0]
    assert obj["accepted"]
    assert obj["s"] >= 0.5 and obj["e"] <= 0.03
    assert obj["add"] < 0.02


def test_track_collect_report_adapt(runner, tmp_path):
    res = runner.track(seed=3)
    assert not res["aborted"]
    assert res["outcomes"] == 2  # one object, two waypoints
    assert res["accepted"] == res["outcomes"]

    ds = tmp_path / "ds"
    st = runner.collect(scenes=1, interactions=1, out_dir=str(ds), seed=11)
    assert st["scenes"] == 1 and st["sequences"] == 2
    assert st["records"] >= 1

    rep = tmp_path / "rep"
    poseloop.write_report(str(ds), str(rep))
    summary = json.loads((rep / "summary.json").read_text())
    assert summary["records"] == st["records"]
    assert (rep / "records.csv").exists()

    cmp = runner.adapt(str(ds), alpha=0.0, holdout=1, seed=5)
    assert cmp["base"]["success"] == cmp["adapted"]["success"]
    assert cmp["base"]["mean_s"] == cmp["adapted"]["mean_s"]
