"""
Custom exceptions for pipeobs.

This module defines the exception hierarchy for the library and the CLI,
providing specific error types for each failure scenario. Every error carries
a ``details`` dictionary with structured context for logging.
"""

from __future__ import annotations

from typing import Any


class PipeObserverError(Exception):
    """Base exception for pipeobs.

    All custom exceptions in the package inherit from this class.
    """

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.details: dict[str, Any] = details or {}


class ConfigurationError(PipeObserverError):
    """Configuration related errors.

    Raised when scenario or settings files cannot be read or parsed, or when
    they contain unknown or missing keys.
    """

    pass


class ValidationError(PipeObserverError):
    """Scenario validation errors.

    The message names the violated invariant.
    """

    pass


class DomainError(PipeObserverError):
    """Nonpositive density passed to a pressure law or transform."""

    pass


class OutOfBandError(PipeObserverError):
    """Inversion of the normalized potential left the admissible band."""

    pass


class SmallDataError(PipeObserverError):
    """Small-data precondition failed."""

    pass


class JunctionError(PipeObserverError):
    """Node resolution failures."""

    pass


class ConvergenceError(JunctionError):
    """Newton iteration did not reach the residual tolerance."""

    pass


class SingularJacobianError(JunctionError):
    pass


class NoSubsonicRootError(JunctionError):
    pass


class BoundaryWindowError(JunctionError):
    """Boundary value outside the configured window (strict mode)."""

    pass


class SolverError(PipeObserverError):
    """Time stepping failures.

    ``details`` always carries the simulation time and the step counter.
    """

    pass


class DiagnosticsError(PipeObserverError):
    """Energy, tracker and fitting errors."""

    pass


class AlreadySynchronizedError(DiagnosticsError):
    """The error series is identically zero."""

    pass


class PicardError(PipeObserverError):
    """Budget violations and characteristic tracing failures."""

    pass
