#!/usr/bin/env python3
"""
JSON Lines record tests
"""
import json

import pytest

from detection.encoder import GtInstance
from detection.records import (
    dumps,
    read_boxes,
    read_ground_truth,
    write_boxes,
    write_ground_truth,
    write_groups,
)
from detection.types import BBox, Detection, KeypointGroup, KeypointType
from grids.errors import MissingInputError, RecordParseError
from grids.tensor import ChannelGrid, GridShape, Point2, write_tensor


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_dumps_is_canonical():
    assert dumps({"b": 1, "a": [1.5, 2]}) == '{"a":[1.5,2],"b":1}'
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


def test_ground_truth_defaults_to_image_zero(tmp_path):
    path = write(tmp_path, "gt.jsonl", '{"x_min":1,"y_min":2,"x_max":5,"y_max":9}\n\n')
    images = read_ground_truth(path)
    assert list(images) == [0]
    assert images[0][0].box.coords() == (1.0, 2.0, 5.0, 9.0)


def test_records_grouped_by_image_id(tmp_path):
    lines = [
        '{"x_min":0,"y_min":0,"x_max":4,"y_max":4,"score":0.3,"image_id":2}',
        '{"x_min":1,"y_min":1,"x_max":6,"y_max":6,"score":0.7,"image_id":5}',
        '{"x_min":2,"y_min":2,"x_max":8,"y_max":8,"image_id":2}',
    ]
    images = read_boxes(write(tmp_path, "p.jsonl", "\n".join(lines)))
    assert sorted(images) == [2, 5]
    assert [b.score for b in images[2]] == [0.3, 1.0]


def test_bad_json_names_line(tmp_path):
    path = write(tmp_path, "gt.jsonl", '{"x_min":0,"y_min":0,"x_max":4,"y_max":4}\n{"x_min":\n')
    with pytest.raises(RecordParseError) as e:
        read_ground_truth(path)
    assert e.value.line_number == 2
    assert ":2:" in str(e.value)


def test_invalid_utf8_names_line(tmp_path):
    path = tmp_path / "gt.jsonl"
    path.write_bytes(b'{"x_min":0,"y_min":0,"x_max":4,"y_max":4}\n\xff\xfe{}\n')
    with pytest.raises(RecordParseError) as e:
        read_ground_truth(path)
    assert e.value.line_number == 2
    assert "UTF-8" in str(e.value)


def test_lines_split_on_newline_only(tmp_path):
    path = tmp_path / "gt.jsonl"
    record = '{"x_min":0,"y_min":0,"x_max":4,"y_max":4,"note":"a\u2028b"}'
    path.write_bytes((record + "\r\n" + record + "\n").encode("utf-8"))
    images = read_ground_truth(path)
    assert len(images[0]) == 2


@pytest.mark.parametrize(
    "line,reason",
    [
        ('{"x_min":0,"y_min":0,"x_max":4}', "y_max"),
        ('{"x_min":"a","y_min":0,"x_max":4,"y_max":4}', "non-numeric"),
        ('{"x_min":5,"y_min":0,"x_max":4,"y_max":4}', "degenerate"),
        ('{"x_min":0,"y_min":0,"x_max":4,"y_max":4,"image_id":1.5}', "image_id"),
        ("[1, 2, 3]", "JSON object"),
    ],
)
def test_bad_records(tmp_path, line, reason):
    path = write(tmp_path, "p.jsonl", line + "\n")
    with pytest.raises(RecordParseError) as e:
        read_boxes(path)
    assert e.value.line_number == 1
    assert reason in str(e.value)


def test_missing_file(tmp_path):
    with pytest.raises(MissingInputError):
        read_boxes(tmp_path / "none.jsonl")


def test_mask_path_is_relative_to_record_file(tmp_path):
    mask = ChannelGrid.zeros(1, GridShape(4, 4))
    write_tensor(mask, tmp_path / "masks" / "m0.kgten")
    path = write(tmp_path, "gt.jsonl", '{"x_min":0,"y_min":0,"x_max":2,"y_max":2,"mask_path":"masks/m0.kgten"}\n')
    (inst,) = read_ground_truth(path)[0]
    assert inst.mask == mask
    assert read_ground_truth(path, load_masks=False)[0][0].mask is None


def test_missing_mask(tmp_path):
    path = write(tmp_path, "gt.jsonl", '{"x_min":0,"y_min":0,"x_max":2,"y_max":2,"mask_path":"gone.kgten"}\n')
    with pytest.raises(MissingInputError):
        read_ground_truth(path)


def test_written_records_read_back(tmp_path):
    instances = [GtInstance(BBox(1, 2, 3, 4)), GtInstance(BBox(5.5, 6, 7, 8.25))]
    write_ground_truth(tmp_path / "gt.jsonl", instances)
    assert [i.box for i in read_ground_truth(tmp_path / "gt.jsonl")[0]] == [i.box for i in instances]

    boxes = [BBox(1, 2, 3, 4, 0.75)]
    write_boxes(tmp_path / "b.jsonl", boxes)
    text = (tmp_path / "b.jsonl").read_text()
    assert text == '{"score":0.75,"x_max":3,"x_min":1,"y_max":4,"y_min":2}\n'
    assert read_boxes(tmp_path / "b.jsonl")[0] == boxes


def test_groups_file(tmp_path):
    group = KeypointGroup(scale_index=0)
    group.add(Detection(kind=KeypointType.C, position=Point2(3.0, 4.0), score=0.5))
    write_groups(tmp_path / "g.json", [[group], []], [1, 2])
    payload = json.loads((tmp_path / "g.json").read_text())
    assert [s["stride"] for s in payload["scales"]] == [1, 2]
    assert payload["scales"][0]["groups"][0]["slots"]["C"] == {"type": "C", "x": 3.0, "y": 4.0, "score": 0.5}
