#!/usr/bin/env python3
"""
Command registry and end-to-end command tests
"""
import json

import numpy as np
import pytest

import config
from commands import CommandCategory
from commands.registry import CommandRegistry
from commands.synthesize import build_perturbation
from detection.pipeline import PipelineConfig
from detection.records import read_boxes
from detection.types import KeypointType
from grids.errors import GridValidationError
from grids.tensor import ChannelGrid, read_tensor, write_tensor
from main import main

GT_LINES = [
    '{"x_min":10,"y_min":20,"x_max":50,"y_max":60}',
    '{"x_min":58,"y_min":52,"x_max":90,"y_max":90}',
]
STRIDE_1 = {"strides": (1,)}


@pytest.fixture(scope="module")
def registry():
    reg = CommandRegistry()
    reg.load_all()
    return reg


def write_gt(path, lines=GT_LINES):
    path.write_text("".join(line + "\n" for line in lines))
    return path


def tree_bytes(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


# =====================================================
# REGISTRY
# =====================================================

def test_command_loading(registry):
    print(f"✅ Loaded {len(registry.commands)} commands")
    assert sorted(registry.commands) == ["decode", "encode", "eval", "roundtrip", "synth"]
    for name, command in registry.commands.items():
        metadata = command.get_metadata()
        assert metadata["name"] == name
        assert metadata["description"]
        assert metadata["category"] in {c.value for c in CommandCategory}
        assert isinstance(metadata["args"], dict)


def test_unknown_command(registry):
    result = registry.call("teleport", {})
    assert result["error"] == "unknown_command"
    assert result["success"] is False


def test_invalid_arguments(registry):
    assert registry.call("eval", ["a", "b"])["error"] == "invalid_arguments"
    assert registry.call("eval", {"gt": "x.jsonl"})["error"] == "bad_command_arguments"


def test_stats_count_successful_calls(registry, tmp_path):
    before = registry.get_stats()["total_calls"]
    gt = write_gt(tmp_path / "gt.jsonl")
    registry.call("eval", {"predictions": str(gt), "gt": str(gt), "options": STRIDE_1})
    stats = registry.get_stats()
    assert stats["total_calls"] == before + 1
    assert registry.last_command == "eval"


# =====================================================
# ENCODE / DECODE
# =====================================================

def test_encode_empty_ground_truth(registry, tmp_path):
    gt = tmp_path / "gt.jsonl"
    gt.write_text("")
    result = registry.call(
        "encode",
        {"gt": str(gt), "out": str(tmp_path / "t"), "height": 16, "width": 12, "options": STRIDE_1},
    )
    assert result["success"] is True
    assert result["instances"] == 0
    channels = {"heatmap": 5, "single_offsets": 10, "group_offsets": 40}
    for name, c in channels.items():
        grid = read_tensor(tmp_path / "t" / "s1" / f"{name}.kgten")
        assert grid.channels == c
        assert grid.shape.as_tuple() == (16, 12)
        assert not grid.data.any()


def test_encode_reports_bad_line(registry, tmp_path):
    gt = write_gt(tmp_path / "gt.jsonl", [GT_LINES[0], '{"x_min": 3,'])
    result = registry.call(
        "encode",
        {"gt": str(gt), "out": str(tmp_path / "t"), "height": 16, "width": 16, "options": STRIDE_1},
    )
    assert result["error"] == "parse_error"
    assert ":2:" in result["details"]


def test_encode_needs_image_id_for_several_images(registry, tmp_path):
    lines = [GT_LINES[0][:-1] + ',"image_id":0}', GT_LINES[1][:-1] + ',"image_id":1}']
    gt = write_gt(tmp_path / "gt.jsonl", lines)
    args = {"gt": str(gt), "out": str(tmp_path / "t"), "height": 96, "width": 96, "options": STRIDE_1}
    assert registry.call("encode", args)["error"] == "validation_error"
    assert registry.call("encode", {**args, "image_id": 1})["instances"] == 1


def test_encode_then_decode_recovers_boxes(registry, tmp_path):
    gt = write_gt(tmp_path / "gt.jsonl")
    registry.call("encode", {"gt": str(gt), "out": str(tmp_path / "t"), "height": 96, "width": 96, "options": STRIDE_1})

    result = registry.call(
        "decode",
        {
            "targets": str(tmp_path / "t"),
            "out": str(tmp_path / "boxes.jsonl"),
            "groups": str(tmp_path / "groups.json"),
            "overlay": str(tmp_path / "boxes.ppm"),
            "options": STRIDE_1,
        },
    )
    assert result["success"] is True
    assert result["boxes"] == 2

    boxes = sorted(b.coords() for b in read_boxes(tmp_path / "boxes.jsonl")[0])
    assert boxes == [(10.0, 20.0, 50.0, 60.0), (58.0, 52.0, 90.0, 90.0)]
    groups = json.loads((tmp_path / "groups.json").read_text())
    assert [len(g["slots"]) for g in groups["scales"][0]["groups"]] == [5, 5]
    assert (tmp_path / "boxes.ppm").read_bytes().startswith(b"P6")


def test_decode_missing_group_offsets(registry, tmp_path):
    gt = write_gt(tmp_path / "gt.jsonl")
    registry.call("encode", {"gt": str(gt), "out": str(tmp_path / "t"), "height": 96, "width": 96, "options": STRIDE_1})
    (tmp_path / "t" / "s1" / "group_offsets.kgten").unlink()

    result = registry.call("decode", {"targets": str(tmp_path / "t"), "out": str(tmp_path / "b.jsonl"), "options": STRIDE_1})
    assert result["error"] == "missing_input"
    assert "group_offsets.kgten" in result["details"]


def test_decode_below_threshold_writes_empty_file(registry, tmp_path):
    heat = np.zeros((5, 8, 8), dtype=np.float32)
    heat[KeypointType.TL, 3, 3] = 0.001
    scale = tmp_path / "t" / "s1"
    write_tensor(ChannelGrid(heat), scale / "heatmap.kgten")
    write_tensor(ChannelGrid(np.zeros((10, 8, 8))), scale / "single_offsets.kgten")
    write_tensor(ChannelGrid(np.zeros((40, 8, 8))), scale / "group_offsets.kgten")

    result = registry.call("decode", {"targets": str(tmp_path / "t"), "out": str(tmp_path / "b.jsonl"), "options": STRIDE_1})
    assert result["boxes"] == 0
    assert (tmp_path / "b.jsonl").read_text() == ""


def test_decode_rejects_wrong_channel_count(registry, tmp_path):
    scale = tmp_path / "t" / "s1"
    write_tensor(ChannelGrid(np.zeros((4, 8, 8))), scale / "heatmap.kgten")
    write_tensor(ChannelGrid(np.zeros((10, 8, 8))), scale / "single_offsets.kgten")
    write_tensor(ChannelGrid(np.zeros((40, 8, 8))), scale / "group_offsets.kgten")
    result = registry.call("decode", {"targets": str(tmp_path / "t"), "out": str(tmp_path / "b.jsonl"), "options": STRIDE_1})
    assert result["error"] == "validation_error"
    assert "s1" in result["details"]


# =====================================================
# EVAL
# =====================================================

def test_eval_identical_files(registry, tmp_path):
    gt = write_gt(tmp_path / "gt.jsonl")
    result = registry.call("eval", {"predictions": str(gt), "gt": str(gt), "out": str(tmp_path / "r.json")})
    assert result["ap"] == {"0.5": 1.0, "0.7": 1.0}
    assert result["images"] == 1
    assert json.loads((tmp_path / "r.json").read_text())["ap"]["0.7"] == 1.0


def test_eval_custom_thresholds(registry, tmp_path):
    gt = write_gt(tmp_path / "gt.jsonl")
    result = registry.call("eval", {"predictions": str(gt), "gt": str(gt), "options": {"eval_thresholds": (0.9,)}})
    assert result["thresholds"] == [0.9]


# =====================================================
# SYNTH / ROUNDTRIP
# =====================================================

def test_synth_and_decode_are_reproducible(registry, tmp_path):
    options = {"strides": (4,), "seed": 3}
    for run in ("a", "b"):
        out = tmp_path / run
        result = registry.call("synth", {"out": str(out), "scenes": 2, "drop_count": 1, "options": options})
        assert result["success"] is True
        registry.call(
            "decode",
            {"targets": str(out / "scene_000"), "out": str(out / "boxes.jsonl"), "options": options},
        )
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    combined = (tmp_path / "a" / "gt.jsonl").read_text().splitlines()
    assert {json.loads(line)["image_id"] for line in combined} == {0, 1}


def test_synth_writes_masks(registry, tmp_path):
    result = registry.call(
        "synth",
        {"out": str(tmp_path), "scenes": 1, "with_masks": True, "options": {"strides": (8,), "seed": 1}},
    )
    assert result["success"] is True
    first = json.loads((tmp_path / "scene_000" / "gt.jsonl").read_text().splitlines()[0])
    assert first["mask_path"] == "masks/mask_000.kgten"
    assert read_tensor(tmp_path / "scene_000" / first["mask_path"]).shape.as_tuple() == (512, 512)


def test_roundtrip_without_scenes(registry, tmp_path):
    result = registry.call("roundtrip", {"scenes": 0, "out": str(tmp_path / "r.json")})
    assert result["success"] is True
    assert result["instances"] == 0
    assert result["ap"]["0.5"] == 1.0
    assert result["pipeline"]["strides"] == [1]
    assert (tmp_path / "r.json").exists()


def test_build_perturbation():
    p = build_perturbation(4, drop_types="tl, BR", drop_probability="0.5", drop_instances="0,2")
    assert p.drop_types == frozenset({KeypointType.TL, KeypointType.BR})
    assert p.drop_probability == (0.5,) * 5
    assert p.drop_instances == frozenset({0, 2})
    assert p.seed == 4
    with pytest.raises(GridValidationError):
        build_perturbation(0, drop_probability="0.1,0.2")
    with pytest.raises(GridValidationError):
        build_perturbation(0, drop_instances="1,x")
    with pytest.raises(GridValidationError):
        build_perturbation(0, drop_types="TOP")


# =====================================================
# ENTRY POINT
# =====================================================

def test_main_list(capsys):
    assert main(["--list"]) == 0
    assert "AVAILABLE COMMANDS" in capsys.readouterr().err


def test_main_reports_errors(tmp_path, capsys):
    code = main(["decode", "--targets", str(tmp_path / "none"), "--out", str(tmp_path / "b.jsonl")])
    assert code == 1
    assert "missing_input" in capsys.readouterr().err


def test_main_prints_json_result(tmp_path, capsys):
    gt = write_gt(tmp_path / "gt.jsonl")
    code = main(["eval", "--predictions", str(gt), "--gt", str(gt), "--iou-thresholds", "0.5"])
    assert code == 0
    result = json.loads(capsys.readouterr().out)
    assert result["ap"] == {"0.5": 1.0}


# =====================================================
# DETERMINISM / OPTIONS
# =====================================================

def test_encode_eval_roundtrip_are_byte_identical(registry, tmp_path):
    gt = write_gt(tmp_path / "gt.jsonl")
    for run in ("a", "b"):
        out = tmp_path / run
        registry.call("encode", {"gt": str(gt), "out": str(out / "t"), "height": 96, "width": 96})
        registry.call("eval", {"predictions": str(gt), "gt": str(gt), "out": str(out / "eval.json")})
        result = registry.call("roundtrip", {"scenes": 2, "out": str(out / "rt.json"), "options": {"seed": 5}})
        assert result["success"] is True
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")
    assert sorted(p.name for p in (tmp_path / "a" / "t").iterdir()) == ["s16", "s32", "s4", "s8"]


@pytest.mark.parametrize("option", ["peak_threshold", "match_radius", "duplicate_radius", "nms_iou", "radius"])
def test_zero_override_is_rejected(option):
    with pytest.raises(GridValidationError):
        PipelineConfig.from_defaults(**{option: 0.0})


def test_none_override_keeps_default():
    assert PipelineConfig.from_defaults(peak_threshold=None).peaks.threshold == config.PEAK_THRESHOLD


def test_zero_threshold_from_command_line(tmp_path, capsys):
    gt = write_gt(tmp_path / "gt.jsonl")
    code = main(["eval", "--predictions", str(gt), "--gt", str(gt), "--nms-iou", "0"])
    assert code == 1
    assert "validation_error" in capsys.readouterr().err


def test_encode_reports_undecodable_line(registry, tmp_path):
    gt = tmp_path / "gt.jsonl"
    gt.write_bytes(GT_LINES[0].encode() + b"\n\xff\xfe\n")
    result = registry.call("encode", {"gt": str(gt), "out": str(tmp_path / "t"), "height": 96, "width": 96})
    assert result["error"] == "parse_error"
    assert ":2:" in result["details"]


def test_decode_finds_synth_strides(registry, tmp_path):
    registry.call("synth", {"out": str(tmp_path), "scenes": 1, "options": {"seed": 2}})
    result = registry.call("decode", {"targets": str(tmp_path / "scene_000"), "out": str(tmp_path / "b.jsonl")})
    assert result["success"] is True
    assert result["strides"] == list(config.ROUNDTRIP_STRIDES)
    assert result["boxes"] > 0
