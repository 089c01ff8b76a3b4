import logging
from pathlib import Path
from typing import Optional

import config
from commands import Command, CommandCategory
from detection.pipeline import scale_dir, write_targets
from detection.records import ground_truth_lines, write_lines
from detection.types import HEATMAP_CHANNELS, KeypointType
from grids.errors import GridValidationError
from grids.tensor import GridShape, write_tensor
from synth.perturb import Perturbation
from synth.roundtrip import scene_targets
from synth.scenes import SceneSpec, generate_scene
from synth.streams import derive_seed

log = logging.getLogger(__name__)

SCENE_ARGS = {
    "scenes": "int|null",
    "height": "int|null",
    "width": "int|null",
}

PERTURBATION_ARGS = {
    "drop_types": "str|null",  # comma-separated type names, e.g. TL,TR
    "drop_count": "int|null",
    "drop_probability": "str|null",  # one value for all types or five
    "drop_instances": "str|null",  # comma-separated instance indices
    "noise_sigma": "float|null",
    "flip_rate": "float|null",
}


def _split(value: str):
    return [v.strip() for v in value.split(",") if v.strip()]


def build_perturbation(
    seed: int,
    drop_types: Optional[str] = None,
    drop_count: Optional[int] = None,
    drop_probability: Optional[str] = None,
    drop_instances: Optional[str] = None,
    noise_sigma: Optional[float] = None,
    flip_rate: Optional[float] = None,
) -> Perturbation:
    probs = (0.0,) * HEATMAP_CHANNELS
    if drop_probability:
        values = [float(v) for v in _split(drop_probability)]
        if len(values) == 1:
            values = values * HEATMAP_CHANNELS
        if len(values) != HEATMAP_CHANNELS:
            raise GridValidationError(f"drop probability takes 1 or {HEATMAP_CHANNELS} values, got {len(values)}")
        probs = tuple(values)
    try:
        instances = frozenset(int(v) for v in _split(drop_instances)) if drop_instances else None
    except ValueError:
        raise GridValidationError(f"bad instance list {drop_instances!r}") from None
    return Perturbation(
        drop_types=frozenset(KeypointType.parse(v) for v in _split(drop_types or "")),
        drop_probability=probs,
        drop_count=int(drop_count or 0),
        drop_instances=instances,
        offset_noise_sigma=float(noise_sigma or 0.0),
        heatmap_flip_rate=float(flip_rate or 0.0),
        seed=seed,
    )


def build_scene_spec(seed: int, radius: float, height=None, width=None, with_masks: bool = False) -> SceneSpec:
    return SceneSpec.from_defaults(
        seed=seed,
        radius=radius,
        shape=GridShape(int(height or config.SCENE_HEIGHT), int(width or config.SCENE_WIDTH)),
        with_masks=bool(with_masks),
    )


# =====================================================
# SYNTH COMMAND
# =====================================================

class Synthesize(Command):
    name = "synth"
    description = """Generate seeded synthetic scenes with (optionally perturbed) targets.

For scene i writes OUT/scene_<i>/gt.jsonl, optional box masks, and targets
under OUT/scene_<i>/s<stride>/, plus OUT/gt.jsonl with image_id = i.
Strides default to the round-trip strides.

Returns: scenes, instances, directories"""

    args = {**SCENE_ARGS, "out": "path", "with_masks": "bool", **PERTURBATION_ARGS}

    category = CommandCategory.SYNTHESIS
    result_summary_template = "✅ wrote {scenes} scenes with {instances} instances"

    def run(self, out: str, scenes: int = None, height: int = None, width: int = None, with_masks: bool = False, options=None, **perturbation_args) -> dict:
        seed = self.seed(options)
        cfg = self.pipeline_config(options, strides=config.ROUNDTRIP_STRIDES)
        template = build_scene_spec(seed, cfg.disc.radius, height, width, with_masks)
        perturbation = build_perturbation(seed, **perturbation_args)
        count = config.ROUNDTRIP_SCENES if scenes is None else int(scenes)
        if count < 0:
            raise GridValidationError(f"scene count must be >= 0, got {count}")

        root = Path(out)
        combined, directories, total = [], [], 0
        for index in range(count):
            spec = template.with_seed(derive_seed(template.seed, index))
            instances = generate_scene(spec)
            scene_root = root / f"scene_{index:03d}"

            mask_paths = None
            if spec.with_masks:
                mask_paths = [f"masks/mask_{j:03d}.kgten" for j in range(len(instances))]
                for inst, rel in zip(instances, mask_paths):
                    write_tensor(inst.mask, scene_root / rel)

            write_lines(scene_root / "gt.jsonl", ground_truth_lines(instances, mask_paths))
            nested = [f"{scene_root.name}/{p}" for p in mask_paths] if mask_paths else None
            combined.extend(ground_truth_lines(instances, nested, image_id=index))

            per_scale = scene_targets(
                instances, spec, perturbation.with_seed(derive_seed(perturbation.seed, index)), cfg
            )
            for stride, targets in zip(cfg.scales.strides, per_scale):
                write_targets(scale_dir(scene_root, stride), targets)

            directories.append(str(scene_root))
            total += len(instances)

        write_lines(root / "gt.jsonl", combined)
        log.info(f"synthesized {count} scenes, {total} instances")
        return {
            "success": True,
            "scenes": count,
            "instances": total,
            "strides": list(cfg.scales.strides),
            "perturbation": perturbation.to_dict(),
            "directories": directories,
        }
