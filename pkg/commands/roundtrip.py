import logging
import sys

import config
from commands import Command, CommandCategory
from commands.synthesize import PERTURBATION_ARGS, SCENE_ARGS, build_perturbation, build_scene_spec
from detection.records import write_json
from grids.errors import GridValidationError
from synth.roundtrip import format_ap_table, run_roundtrip

log = logging.getLogger(__name__)


# =====================================================
# ROUNDTRIP COMMAND
# =====================================================

class Roundtrip(Command):
    name = "roundtrip"
    description = """Run the encode -> perturb -> decode -> evaluate experiment on seeded scenes.

Prints an AP table to stderr. Strides default to the round-trip strides.
Scenes run on a thread pool; results do not depend on the worker count.

Returns: the EvalReport fields plus recall, max_box_error and the number of
instances whose surviving keypoints form no minimal valid set"""

    args = {
        **SCENE_ARGS,
        **PERTURBATION_ARGS,
        "out": "path|null",
        "workers": "int|null",
        "per_image": "bool",
        "progress": "bool",
    }

    category = CommandCategory.EXPERIMENT
    result_summary_template = "✅ {scenes} scenes, {instances} instances"

    def run(
        self,
        scenes: int = None,
        height: int = None,
        width: int = None,
        out: str = None,
        workers: int = None,
        per_image: bool = False,
        progress: bool = False,
        options=None,
        **perturbation_args,
    ) -> dict:
        seed = self.seed(options)
        cfg = self.pipeline_config(options, strides=config.ROUNDTRIP_STRIDES)
        template = build_scene_spec(seed, cfg.disc.radius, height, width)
        perturbation = build_perturbation(seed, **perturbation_args)
        count = config.ROUNDTRIP_SCENES if scenes is None else int(scenes)
        n_workers = config.WORKERS if workers is None else int(workers)
        if n_workers < 1:
            raise GridValidationError(f"workers must be >= 1, got {n_workers}")

        result = run_roundtrip(
            template,
            perturbation,
            cfg,
            scenes=count,
            workers=n_workers,
            per_image=bool(per_image),
            progress=bool(progress),
        )
        print(format_ap_table(result), file=sys.stderr)

        payload = result.to_dict()
        payload["pipeline"] = cfg.to_dict()
        payload["perturbation"] = perturbation.to_dict()
        if out:
            write_json(out, payload)
        return {"success": True, **payload}
