"""
JSON Lines ground truth and box records, JSON groups
"""
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from detection.encoder import GtInstance
from detection.types import BBox, KeypointGroup
from grids.errors import GridValidationError, MissingInputError, RecordParseError
from grids.files import PathLike, atomic_write_text, read_bytes
from grids.tensor import read_tensor

log = logging.getLogger(__name__)

BOX_FIELDS = ("x_min", "y_min", "x_max", "y_max")


def dumps(obj) -> str:
    """Canonical JSON used for every output file"""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _iter_records(path: PathLike) -> Iterable[Tuple[int, dict]]:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(path)
    for number, raw in enumerate(read_bytes(path).split(b"\n"), start=1):
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise RecordParseError(path, number, f"invalid UTF-8 at byte {e.start}") from None
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise RecordParseError(path, number, f"invalid JSON ({e.msg})") from e
        if not isinstance(record, dict):
            raise RecordParseError(path, number, "expected a JSON object")
        yield number, record


def _image_id(path, number: int, record: dict) -> int:
    value = record.get("image_id", 0)
    if isinstance(value, bool) or not isinstance(value, int):
        raise RecordParseError(path, number, f"image_id must be an integer, got {value!r}")
    return value


def _box_from_record(path, number: int, record: dict, with_score: bool) -> BBox:
    try:
        coords = [float(record[f]) for f in BOX_FIELDS]
        score = float(record.get("score", 1.0)) if with_score else 1.0
    except KeyError as e:
        raise RecordParseError(path, number, f"missing field {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise RecordParseError(path, number, f"non-numeric box field ({e})") from None
    if not all(math.isfinite(v) for v in coords + [score]):
        raise RecordParseError(path, number, "non-finite box field")
    try:
        return BBox(*coords, score=score)
    except GridValidationError as e:
        raise RecordParseError(path, number, str(e)) from None


def read_ground_truth(path: PathLike, load_masks: bool = True) -> Dict[int, List[GtInstance]]:
    """Instances per image_id (0 when the records carry none)"""
    path = Path(path)
    images: Dict[int, List[GtInstance]] = {}
    for number, record in _iter_records(path):
        box = _box_from_record(path, number, record, with_score=False)
        mask = None
        mask_path = record.get("mask_path")
        if load_masks and mask_path:
            resolved = (path.parent / mask_path) if not Path(mask_path).is_absolute() else Path(mask_path)
            if not resolved.exists():
                raise MissingInputError(resolved, "mask")
            mask = read_tensor(resolved)
        images.setdefault(_image_id(path, number, record), []).append(GtInstance(box=box, mask=mask))
    log.debug(f"read {sum(len(v) for v in images.values())} instances from {path}")
    return images


def read_boxes(path: PathLike) -> Dict[int, List[BBox]]:
    """Scored boxes per image_id"""
    path = Path(path)
    images: Dict[int, List[BBox]] = {}
    for number, record in _iter_records(path):
        box = _box_from_record(path, number, record, with_score=True)
        images.setdefault(_image_id(path, number, record), []).append(box)
    return images


def ground_truth_lines(
    instances: Sequence[GtInstance],
    mask_paths: Optional[Sequence[Optional[str]]] = None,
    image_id: Optional[int] = None,
) -> List[str]:
    lines = []
    for i, inst in enumerate(instances):
        record = {f: getattr(inst.box, f) for f in BOX_FIELDS}
        if mask_paths is not None and mask_paths[i]:
            record["mask_path"] = mask_paths[i]
        if image_id is not None:
            record["image_id"] = image_id
        lines.append(dumps(record))
    return lines


def box_lines(boxes: Sequence[BBox], image_id: Optional[int] = None) -> List[str]:
    lines = []
    for box in boxes:
        record = box.to_dict()
        if image_id is not None:
            record["image_id"] = image_id
        lines.append(dumps(record))
    return lines


def write_lines(path: PathLike, lines: Sequence[str]) -> None:
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def write_ground_truth(path: PathLike, instances: Sequence[GtInstance], mask_paths=None) -> None:
    write_lines(path, ground_truth_lines(instances, mask_paths))


def write_boxes(path: PathLike, boxes: Sequence[BBox]) -> None:
    write_lines(path, box_lines(boxes))


def write_groups(path: PathLike, per_scale_groups: Sequence[Sequence[KeypointGroup]], strides: Sequence[int]) -> None:
    payload = {
        "scales": [
            {"stride": stride, "groups": [g.to_dict() for g in groups]}
            for stride, groups in zip(strides, per_scale_groups)
        ]
    }
    atomic_write_text(path, dumps(payload) + "\n")


def write_json(path: PathLike, payload: dict) -> None:
    atomic_write_text(path, dumps(payload) + "\n")
