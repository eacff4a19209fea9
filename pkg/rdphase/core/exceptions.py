# rdphase/core/exceptions.py

"""
Exception hierarchy shared by every rdphase subsystem.

Each error knows the exit code the command-line interface maps it to and can
render itself as a single machine-parsable line via ``reason()``.
"""

from typing import Optional

import numpy as np


class RDPhaseError(Exception):
    """Base class for all errors raised by rdphase."""

    code = "error"
    exit_code = 1

    def reason(self) -> str:
        """Returns a one-line `<code>: <message>` description of the error."""
        message = " ".join(str(self).split())
        return f"{self.code}: {message}"


class UsageError(RDPhaseError, ValueError):
    """An operation was called with arguments it does not accept."""

    code = "usage"
    exit_code = 2


class DomainError(RDPhaseError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    code = "domain"
    exit_code = 2


class ConfigurationError(RDPhaseError, ValueError):
    """A configuration file, override or derived setting is invalid."""

    code = "config"
    exit_code = 2


class PreconditionError(RDPhaseError, AssertionError):
    """A documented precondition of an operation does not hold."""

    code = "precondition"
    exit_code = 2


class BlowUpError(RDPhaseError, ArithmeticError):
    """
    The time stepper produced a non-finite value.

    Attributes:
        step: Index of the step whose output was non-finite.
        time: Simulation time reached by that step, when known.
    """

    code = "blowup"
    exit_code = 3

    def __init__(self, step: int, time: Optional[float] = None):
        self.step = step
        self.time = time
        where = f"step {step}" if time is None else f"step {step} (t={time:.6g})"
        super().__init__(f"non-finite field value at {where}")


class StageTimeoutError(RDPhaseError, RuntimeError):
    """
    An embedded chain stage reached its timeout before any stopping boundary.

    Attributes:
        elapsed: Stage time simulated before giving up.
        partial: The field at the moment of the timeout.
    """

    code = "stage-timeout"
    exit_code = 3

    def __init__(self, elapsed: float, partial: Optional[np.ndarray] = None):
        self.elapsed = elapsed
        self.partial = partial
        super().__init__(f"no stopping boundary reached after t={elapsed:.6g}")


class OutputError(RDPhaseError, OSError):
    """Results could not be written to the output directory."""

    code = "io"
    exit_code = 3


class AcceptanceCheckError(RDPhaseError, AssertionError):
    """One or more acceptance checks failed in `--check` mode."""

    code = "check"
    exit_code = 4
