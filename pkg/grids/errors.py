"""
Error hierarchy shared by every module
"""
from typing import Optional


class KeypointGraphError(Exception):
    """Base class for all library errors"""

    kind = "keypoint_graph_error"


class GridValidationError(KeypointGraphError, ValueError):
    """Invalid shapes, channel counts, non-finite values or degenerate geometry"""

    kind = "validation_error"


class GridIndexError(KeypointGraphError, IndexError):
    kind = "index_error"


class TensorFormatError(KeypointGraphError):
    """Malformed KGTEN magic or header, or trailing bytes"""

    kind = "format_error"


class TensorTruncationError(KeypointGraphError):
    kind = "truncation_error"


class TensorIOError(KeypointGraphError):
    """I/O failure, always carrying the offending path"""

    kind = "io_error"

    def __init__(self, path, message: str):
        self.path = str(path)
        super().__init__(f"{self.path}: {message}")


class RecordParseError(KeypointGraphError):
    """Bad JSON Lines record; names the 1-based line number"""

    kind = "parse_error"

    def __init__(self, path, line_number: int, message: str):
        self.path = str(path)
        self.line_number = line_number
        super().__init__(f"{self.path}:{line_number}: {message}")


class MissingInputError(KeypointGraphError):
    kind = "missing_input"

    def __init__(self, path, what: Optional[str] = None):
        self.path = str(path)
        label = f"{what} " if what else ""
        super().__init__(f"missing {label}input: {self.path}")


class GenerationError(KeypointGraphError):
    """Scene generation could not satisfy a constraint"""

    kind = "generation_error"

    def __init__(self, constraint: str, message: str):
        self.constraint = constraint
        super().__init__(f"{constraint}: {message}")
