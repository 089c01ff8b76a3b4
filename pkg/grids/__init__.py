from grids.errors import (
    GenerationError,
    GridIndexError,
    GridValidationError,
    KeypointGraphError,
    MissingInputError,
    RecordParseError,
    TensorFormatError,
    TensorIOError,
    TensorTruncationError,
)
from grids.sampling import bilinear_sample, bilinear_sample_pair, splat_bilinear
from grids.tensor import ChannelGrid, GridShape, Point2, parse_tensor, read_tensor, write_tensor

__all__ = [
    "ChannelGrid",
    "GenerationError",
    "GridIndexError",
    "GridShape",
    "GridValidationError",
    "KeypointGraphError",
    "MissingInputError",
    "Point2",
    "RecordParseError",
    "TensorFormatError",
    "TensorIOError",
    "TensorTruncationError",
    "bilinear_sample",
    "bilinear_sample_pair",
    "parse_tensor",
    "read_tensor",
    "splat_bilinear",
    "write_tensor",
]
