# agency_count/core/errors.py
from __future__ import annotations

from typing import Any, Dict, Optional

from pydantic import BaseModel, Field


class ErrorResponse(BaseModel):
    """
    Standard error envelope printed by the CLI for every handled failure.
    """

    error_code: str = Field(
        ...,
        description="Stable, machine-readable error code",
        examples=["CONTRACT_VIOLATION"],
    )

    message: str = Field(
        ...,
        description="Human-readable error message",
    )

    details: Optional[Dict[str, Any]] = Field(
        default=None,
        description="Optional structured error details",
    )


class AgencyCountError(Exception):
    """Base class for every error raised by agency_count."""

    error_code: str = "INTERNAL_ERROR"

    def __init__(self, message: str, *, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_response(self) -> ErrorResponse:
        return ErrorResponse(
            error_code=self.error_code,
            message=self.message,
            details=self.details,
        )


class ContractViolationError(AgencyCountError, ValueError):
    error_code = "CONTRACT_VIOLATION"


class SceneOverflowError(AgencyCountError, ValueError):
    error_code = "SCENE_OVERFLOW"


class ManifestError(AgencyCountError, ValueError):
    """
    Raised when a manifest cannot be loaded.

    ``details["records"]`` lists one ``{"record_id", "message"}`` entry per
    offending record so every problem is reported in a single pass.
    """

    error_code = "INVALID_MANIFEST"

    @property
    def record_errors(self) -> list[dict[str, str]]:
        return list((self.details or {}).get("records", []))


class NonFiniteError(AgencyCountError, RuntimeError):
    error_code = "NON_FINITE"


class CheckpointError(AgencyCountError, RuntimeError):
    error_code = "CHECKPOINT_ERROR"


class TrainingStepError(AgencyCountError, RuntimeError):
    error_code = "TRAINING_STEP_FAILED"
