from enum import Enum
from typing import Any, Dict, List, Optional

import config
from detection.pipeline import PipelineConfig


class CommandCategory(Enum):
    """Command categories for the summary listing"""
    ENCODE = "encode"  # Ground truth -> targets
    DECODE = "decode"  # Targets -> boxes
    EVALUATION = "evaluation"  # Boxes vs ground truth
    SYNTHESIS = "synthesis"  # Synthetic scenes on disk
    EXPERIMENT = "experiment"  # End-to-end batches


class Command:
    """Base command class; args metadata drives the CLI parser"""

    name: str = None
    description: str = ""
    # arg name -> "path" | "int" | "float" | "str" | "bool", "|null" when optional
    args: Dict[str, str] = {}

    category: CommandCategory = CommandCategory.DECODE

    # Result interpretation
    success_keys: List[str] = ["success"]
    failure_keys: List[str] = ["error"]

    # Result summary template (uses {key} placeholders)
    result_summary_template: Optional[str] = None

    def run(self, options: Optional[Dict[str, Any]] = None, **kwargs) -> Dict[str, Any]:
        """Execute the command - must be implemented by subclass"""
        raise NotImplementedError()

    # Shared flags arrive in options, holding only the flags that were given
    @staticmethod
    def pipeline_config(options: Optional[Dict[str, Any]], **fallbacks) -> PipelineConfig:
        given = {k: v for k, v in (options or {}).items() if k != "seed" and v is not None}
        for key, value in fallbacks.items():
            given.setdefault(key, value)
        return PipelineConfig.from_defaults(**given)

    @staticmethod
    def seed(options: Optional[Dict[str, Any]]) -> int:
        value = (options or {}).get("seed")
        return config.SEED if value is None else int(value)

    def is_successful(self, result: Dict[str, Any]) -> bool:
        for key in self.failure_keys:
            if key in result:
                return False

        for key in self.success_keys:
            if key in result and result[key]:
                return True

        return False

    def get_result_summary(self, result: Dict[str, Any]) -> str:
        """Human-readable one-liner for the diagnostic stream"""
        if self.result_summary_template and self.is_successful(result):
            try:
                return self.result_summary_template.format(**result)
            except (KeyError, ValueError):
                pass

        if self.is_successful(result):
            return f"{self.name} finished"
        error = result.get("error", "unknown error")
        return f"{self.name} failed: {error}"

    def get_metadata(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "category": self.category.value,
            "args": dict(self.args),
        }
