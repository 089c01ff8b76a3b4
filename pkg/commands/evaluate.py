from commands import Command, CommandCategory
from detection.records import read_boxes, read_ground_truth, write_json
from evaluation.metrics import evaluate_dataset


# =====================================================
# EVAL COMMAND
# =====================================================

class Evaluate(Command):
    name = "eval"
    description = """Score predicted boxes against ground truth.

Box-level AP (all-point interpolation) and mean matched IoU at each IoU
threshold, pooled over every image_id unless per_image is set.

Input: predictions, gt (JSON Lines), out (optional report JSON), per_image

Returns: the EvalReport fields"""

    args = {
        "predictions": "path",
        "gt": "path",
        "out": "path|null",
        "per_image": "bool",
    }

    category = CommandCategory.EVALUATION
    result_summary_template = "✅ evaluated {images} image(s)"

    def run(self, predictions: str, gt: str, out: str = None, per_image: bool = False, options=None) -> dict:
        cfg = self.pipeline_config(options)
        preds = read_boxes(predictions)
        truth = read_ground_truth(gt, load_masks=False)

        image_ids = sorted(set(preds) | set(truth))
        images = [
            (preds.get(i, []), [inst.box for inst in truth.get(i, [])])
            for i in image_ids
        ]
        report = evaluate_dataset(images, cfg.eval_thresholds, per_image=bool(per_image))
        payload = report.to_dict()
        if out:
            write_json(out, payload)

        return {"success": True, "images": len(image_ids), **payload}
