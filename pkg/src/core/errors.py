"""
Typed errors for me-kit.

Domain errors derive from Exception rather than ValueError so that raising
them inside pydantic validators surfaces the typed error unchanged.
"""
from typing import Optional


class MEKitError(Exception):
    """Root of every error raised by me-kit"""


class InputValidationError(MEKitError):
    """Malformed or inconsistent input; the CLI maps these to exit code 2"""


class ComputationError(MEKitError):
    """A computation could not produce a valid value; CLI exit code 1"""


class MissingFile(InputValidationError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"File not found: {self.path}")


class MalformedRow(InputValidationError):
    def __init__(self, line: int, reason: str, path: Optional[str] = None):
        self.line = line
        self.reason = reason
        self.path = path
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{line}: {reason}")


class NonContiguousFrames(InputValidationError):
    def __init__(self, line: int, expected: int, found: int):
        self.line = line
        self.expected = expected
        self.found = found
        super().__init__(f"line {line}: expected frame {expected}, found {found}")


class RowSumOutOfTolerance(InputValidationError):
    def __init__(self, row: int, total: float, line: Optional[int] = None):
        self.row = row
        self.total = total
        self.line = line
        where = f"line {line}" if line is not None else f"row {row}"
        super().__init__(f"{where}: emotion probabilities sum to {total!r}, expected 1 within 1e-6")


class ProbabilityOutOfRange(InputValidationError):
    def __init__(self, field: str, row: int, value: float, line: Optional[int] = None):
        self.field = field
        self.row = row
        self.value = value
        self.line = line
        where = f"line {line}" if line is not None else f"row {row}"
        super().__init__(f"{where}: {field}={value!r} outside [0, 1]")


class UnknownLabel(InputValidationError):
    def __init__(self, label: str, known):
        self.label = label
        super().__init__(f"Unknown label {label!r}; expected one of {list(known)}")


class DuplicateVideoId(InputValidationError):
    def __init__(self, video_id: str):
        self.video_id = video_id
        super().__init__(f"Duplicate video_id {video_id!r}")


class DuplicateEvent(InputValidationError):
    pass


class InvalidInterval(InputValidationError):
    pass


class InvalidManifest(InputValidationError):
    pass


class InvalidPenaltyConfig(InputValidationError):
    pass


class InfeasibleSpec(InputValidationError):
    pass


class NonSquareMatrix(InputValidationError):
    def __init__(self, shape):
        self.shape = tuple(shape)
        super().__init__(f"Confusion matrix must be square, got shape {self.shape}")


class NonFiniteInput(InputValidationError):
    pass


class AllZeroAfterPenalty(ComputationError):
    pass


class DivergedLoss(ComputationError):
    def __init__(self, epoch: int, value: float):
        self.epoch = epoch
        self.value = value
        super().__init__(f"Loss became non-finite at epoch {epoch}: {value!r}")


class InsufficientNegativeSpace(UserWarning):
    """Fewer non-ME segment positions exist than the sampling ratio asks for"""


class InvalidLabels(InputValidationError):
    pass


class InvalidDecoderConfig(InputValidationError):
    pass


class EmptyTrack(InputValidationError):
    pass


class InvalidDocument(InputValidationError):
    """A JSON document parsed but does not describe a valid value"""

    def __init__(self, path, detail: str):
        self.path = str(path)
        self.detail = detail
        super().__init__(f"{self.path}: {detail}")


class FeatureShapeMismatch(InputValidationError):
    pass


class TrackTooShort(InputValidationError):
    pass
