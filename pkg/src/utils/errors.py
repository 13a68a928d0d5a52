"""Exception hierarchy for grounded ranking."""
from typing import Any, Dict, Optional, Sequence


class GroundedRankingError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(GroundedRankingError, ValueError):
    """Operands of a tensor operation do not conform."""

    def __init__(self, op: str, *shapes: Sequence[int], detail: str = ""):
        self.op = op
        self.shapes = [tuple(s) for s in shapes]
        shown = " vs ".join(str(s) for s in self.shapes)
        message = f"{op}: incompatible shapes {shown}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class ConfigError(GroundedRankingError, ValueError):
    """Invalid experiment or generator configuration."""


class DatasetError(GroundedRankingError, ValueError):
    """Invalid corpus contents or files."""


class FeatureFormatError(DatasetError):
    """Feature file has a wrong magic, version or payload length."""


class DanglingImageError(DatasetError):
    """A caption references an image id absent from the image table."""

    def __init__(self, image_id: str, caption_id: str = ""):
        self.image_id = image_id
        self.caption_id = caption_id
        where = f" (caption {caption_id})" if caption_id else ""
        super().__init__(f"Unknown image id: {image_id}{where}")


class DimensionMismatchError(DatasetError):
    """Feature width or count does not match what was expected."""


class DuplicateImageError(DatasetError):
    """The same image id occurs twice in a feature table."""


class DuplicateCaptionError(DatasetError):
    """The same caption (or translation source) id occurs twice."""


class UnknownCaptionError(DatasetError):
    """A translation names a caption id that does not exist."""


class CheckpointError(GroundedRankingError, ValueError):
    """Checkpoint file is malformed."""


class NumericalError(GroundedRankingError, RuntimeError):
    """Loss or gradients became non-finite."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.details = details or {}
        if self.details:
            message = f"{message} {self.details}"
        super().__init__(message)


class PseudoPairError(GroundedRankingError, ValueError):
    """Pseudopairs cannot be generated or are empty after filtering."""


class TapeError(GroundedRankingError, ValueError):
    """Backward pass requested on an empty tape or a foreign loss."""
