"""Error types shared across the engine; each carries a stable machine code."""

from __future__ import annotations

from typing import Any


class CourseGateError(Exception):
    """Base error with a machine-readable code and optional structured details."""

    code = "INTERNAL"

    def __init__(self, message: str, *, details: Any = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.details is not None:
            payload["details"] = self.details
        return payload


class MalformedModuleError(CourseGateError):
    code = "MALFORMED_MODULE"


class ValidationFailedError(CourseGateError):
    code = "VALIDATION_FAILED"


class DuplicateIdError(CourseGateError):
    code = "DUPLICATE_ID"


class UnknownModuleError(CourseGateError):
    code = "UNKNOWN_MODULE"


class StarsOutOfRangeError(CourseGateError):
    code = "STARS_OUT_OF_RANGE"


class MalformedArchiveError(CourseGateError):
    code = "MALFORMED_ARCHIVE"


class UnsupportedVersionError(CourseGateError):
    code = "UNSUPPORTED_VERSION"


class CycleDetectedError(CourseGateError):
    code = "CYCLE_DETECTED"


class MalformedTrackError(CourseGateError):
    code = "MALFORMED_TRACK"


class UnsatisfiableError(CourseGateError):
    code = "UNSATISFIABLE"


class UnresolvedPrereqError(CourseGateError):
    code = "UNRESOLVED_PREREQ"


class InvalidWorkflowError(CourseGateError):
    code = "INVALID_WORKFLOW"


class MalformedWorkflowError(CourseGateError):
    code = "MALFORMED_WORKFLOW"


class UnknownWorkflowError(CourseGateError):
    code = "UNKNOWN_WORKFLOW"


class UnknownNodeError(CourseGateError):
    code = "UNKNOWN_NODE"


class BrokenDependencyError(CourseGateError):
    code = "BROKEN_DEPENDENCY"


class EmptyPoolError(CourseGateError):
    code = "EMPTY_POOL"


class MalformedPoolError(CourseGateError):
    code = "MALFORMED_POOL"


class AdapterMissingError(CourseGateError):
    code = "ADAPTER_MISSING"


class BadParameterError(CourseGateError):
    code = "BAD_PARAMETER"


class MissingInputError(CourseGateError):
    code = "MISSING_INPUT"


class UnknownRunError(CourseGateError):
    code = "UNKNOWN_RUN"


class BadRequestError(CourseGateError):
    code = "BAD_REQUEST"


class PortInUseError(CourseGateError):
    code = "PORT_IN_USE"


class DataDirUnwritableError(CourseGateError):
    code = "DATA_DIR_UNWRITABLE"
