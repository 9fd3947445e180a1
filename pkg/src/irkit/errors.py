"""Error hierarchy shared by all irkit modules.

Every error carries a stable ``code`` string so the CLI can map failures
to exit codes and machine-readable messages without string matching.
"""


class IrkitError(Exception):
    code = "IRKIT_ERROR"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class MalformedFileError(IrkitError):
    code = "MALFORMED_FILE"


class DanglingRefError(IrkitError):
    code = "DANGLING_REF"


class DuplicateIdError(IrkitError):
    code = "DUPLICATE_ID"


class ValidationError(IrkitError):
    code = "VALIDATION_ERROR"


class IoFailureError(IrkitError):
    code = "IO_FAILURE"


class UnknownScreenError(IrkitError):
    code = "UNKNOWN_SCREEN"


class UnknownComponentError(IrkitError):
    code = "UNKNOWN_COMPONENT"


class NoLaunchError(IrkitError):
    code = "NO_LAUNCH"


class UnreachableError(IrkitError):
    code = "UNREACHABLE"


class UnsupportedFormatError(IrkitError):
    code = "UNSUPPORTED_FORMAT"


class EmptyAppError(IrkitError):
    code = "EMPTY_APP"


class DimensionMismatchError(IrkitError):
    code = "DIMENSION_MISMATCH"


class MissingKeyError(IrkitError):
    code = "MISSING_KEY"


class WeightMismatchError(IrkitError):
    code = "WEIGHT_MISMATCH"


class CommentNotInThreadError(IrkitError):
    code = "COMMENT_NOT_IN_THREAD"


class SingleClassDatasetError(IrkitError):
    code = "SINGLE_CLASS_DATASET"


class SameProjectError(IrkitError):
    code = "SAME_PROJECT"


class EmptySplitError(IrkitError):
    code = "EMPTY_SPLIT"


class TooFewItemsError(IrkitError):
    code = "TOO_FEW_ITEMS"


class InvalidConfigError(IrkitError):
    code = "INVALID_CONFIG"


class UnknownIssueError(IrkitError):
    code = "UNKNOWN_ISSUE"
