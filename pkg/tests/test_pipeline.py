import json

import numpy as np
import pytest

from kinebody.errors import InvalidArgumentError, ParseError
from kinebody.pipeline import PipelineConfig, report_json, run_synthetic_pipeline

SMALL = dict(n_poses=2, ik_samples=128, ik_epochs=2)


@pytest.fixture(scope="module")
def report():
    return run_synthetic_pipeline(PipelineConfig(seed=5, **SMALL))


def test_decode_stage_is_exact(report):
    assert report["decode"]["mpjpe_mm"] == 0.0
    assert all(s["decode_mpjpe_mm"] == 0.0 and s["missing_joints"] == [] for s in report["samples"])


def test_translation_stage_recovers_root(report):
    assert report["translation"]["max_error_m"] < 1e-6


def test_face_colors_match_direct_shading(report):
    assert max(report["face"]["photometric_error"]) < 1e-12


def test_hand_branch_input_has_attention_channel(report):
    s = report["samples"][0]
    assert s["hand_input_channels"]["left_hand"] == s["hand_input_channels"]["right_hand"]
    assert s["hand_input_channels"]["left_hand"] % 2 == 1


def test_pa_not_worse_than_root(report):
    assert report["ik"]["mpjpe_pa_mm"] <= report["ik"]["mpjpe_mm"] + 1e-9


def test_same_seed_same_bytes(tmp_path):
    a = report_json(run_synthetic_pipeline(PipelineConfig(seed=9, out_dir=str(tmp_path / "a"), **SMALL)))
    b = report_json(run_synthetic_pipeline(PipelineConfig(seed=9, out_dir=str(tmp_path / "b"), **SMALL)))
    assert a == b
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_different_seed_differs():
    a = report_json(run_synthetic_pipeline(PipelineConfig(seed=1, **SMALL)))
    b = report_json(run_synthetic_pipeline(PipelineConfig(seed=2, **SMALL)))
    assert a != b


def test_report_is_sorted_json(report):
    text = report_json(report)
    assert json.loads(text) == json.loads(json.dumps(report))
    assert list(json.loads(text)) == sorted(json.loads(text))


def test_outputs_written(tmp_path):
    run_synthetic_pipeline(PipelineConfig(seed=3, out_dir=str(tmp_path), n_poses=1, ik_samples=64, ik_epochs=1))
    for name in ("iknet.kba", "body_maps.kba", "pose0_merged.obj", "pose0_keypoints.txt", "pose0_pose.txt"):
        assert (tmp_path / name).is_file()
    assert (tmp_path / "assets").is_dir()


def test_config_file_and_overrides(tmp_path):
    (tmp_path / "p.cfg").write_text("# small\nseed = 4\nmap_size = 32 48\nik_optimizer = momentum\n")
    cfg = PipelineConfig.from_file(tmp_path / "p.cfg", seed=7)
    assert cfg.seed == 7 and cfg.map_size == (32, 48) and cfg.ik_optimizer == "momentum"


def test_config_bad_value_names_line(tmp_path):
    (tmp_path / "p.cfg").write_text("seed = 4\n\nsigma = wide\n")
    with pytest.raises(ParseError, match=r"p.cfg:3"):
        PipelineConfig.from_file(tmp_path / "p.cfg")


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        PipelineConfig(map_size=(4, 64))


def test_stage_label_on_failure():
    with pytest.raises(InvalidArgumentError, match=r"^\[assets\] n_face_vertices"):
        run_synthetic_pipeline(PipelineConfig(n_face_vertices=5, **SMALL))


def test_bad_threshold_rejected_before_running():
    with pytest.raises(InvalidArgumentError, match="threshold"):
        PipelineConfig(hand_threshold=1.5)
