import json
import pathlib

import numpy as np
import pytest

import anchorframe as af

SCENES = pathlib.Path(__file__).resolve().parents[2] / "data" / "scenes"


def test_completeness_hand_values():
    # 320x240 frame, tau=0.05 -> full score at 12 px from the nearest border.
    assert af.completeness_score(af.BoundingBox(0, 50, 40, 90), 320, 240) == 0.0
    assert af.completeness_score(af.BoundingBox(100, 100, 140, 140), 320, 240) == 1.0
    assert af.completeness_score(af.BoundingBox(6, 50, 40, 90), 320, 240) == pytest.approx(0.5, abs=1e-12)


def test_iou_and_utility():
    a = af.BoundingBox(0, 0, 10, 10)
    b = af.BoundingBox(5, 0, 15, 10)
    assert af.iou(a, b) == pytest.approx(1 / 3)
    assert af.utility(1.0, 1.0, 1.0) == pytest.approx(1.0)
    assert af.utility(0.4, 0.0, 0.0, lambda_b=0.5, lambda_c=0.3, lambda_p=0.2) == pytest.approx(0.2)
    assert af.BoundingBox.from_center(5, 5, 10, 10) == a


def test_region_weighted_mse_identities():
    rng = np.random.default_rng(3)
    pred = rng.normal(size=(2, 4, 4))
    target = rng.normal(size=(2, 4, 4))
    mask = (rng.random((2, 4, 4)) > 0.5).astype(float)
    plain = np.mean((pred - target) ** 2)
    assert af.region_weighted_mse(pred, target, mask, 0.0) == pytest.approx(plain, rel=1e-12)
    ones = np.ones_like(mask)
    assert af.region_weighted_mse(pred, target, ones, 2.5) == pytest.approx(3.5 * plain, rel=1e-12)


def test_errors_surface_as_exceptions():
    with pytest.raises(af.AnchorframeError):
        af.completeness_score(af.BoundingBox(10, 10, 5, 20), 320, 240)


def test_generate_scene_matches_spec():
    spec = json.loads((SCENES / "00_static_clear.json").read_text())
    spec["num_frames"] = 5
    spec["target"]["attribute_patch"]["visible_interval"] = [0, 4]
    frames, truth_json = af.generate_scene(json.dumps(spec))
    truth = json.loads(truth_json)
    assert len(frames) == 5
    assert frames[0].shape == (240, 320, 3) and frames[0].dtype == np.uint8
    assert all(np.array_equal(frames[0], f) for f in frames[1:])
    assert len(truth["frames"]) == 5


def test_cli_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("ANCHORFRAME_OFFLINE", "1")
    frames = tmp_path / "frames"
    code, out, err = af.run_cli(["synth", "--spec", str(SCENES / "07_linear_occ_mid.json"), "--out", str(frames)])
    assert code == 0, err
    code, out, err = af.run_cli(
        ["select", "--frames", str(frames), "--prompt", "make the car blue", "--out", str(tmp_path / "res")]
    )
    assert code == 0, err
    line = json.loads(out.splitlines()[0])
    code, out, err = af.run_cli(["eval", "--result", str(tmp_path / "res"), "--truth", str(frames / "truth.json")])
    assert code == 0, err
    report = json.loads(out.splitlines()[0])
    assert report["k_star"] == line["k_star"]
    assert report["kf_visibility"] >= 0.95


def test_cli_usage_error():
    code, _, err = af.run_cli(["select"])
    assert code == 2
    assert err
