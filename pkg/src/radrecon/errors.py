"""Exception hierarchy shared by all modules.

Validation problems (bad parameters, geometry that violates a precondition)
derive from :class:`ValidationError`; failures that happen while computing
(lost precision, singular systems, ill-conditioned fits) derive from
:class:`NumericalError`. The command line maps the two families onto
distinct exit codes.
"""

from __future__ import annotations

__all__ = [
    "RadReconError",
    "ValidationError",
    "SingularityError",
    "IntervalDataError",
    "NumericalError",
    "NearSingularError",
    "PrecisionExhaustedError",
    "ConditioningError",
    "SingularSystemError",
    "GridSizeError",
    "PipelineStageError",
    "ApertureWarning",
    "RangeWarning",
    "BornValidityWarning",
]


class RadReconError(Exception):
    """Base class for every error raised by this package."""

    module: str = "radrecon"

    def __init__(self, message: str, *, module: str | None = None, stage: str | None = None):
        super().__init__(message)
        if module is not None:
            self.module = module
        self.stage = stage

    def tagged(self) -> str:
        where = self.module if self.stage is None else f"{self.module}:{self.stage}"
        return f"[{where}] {self}"


class ValidationError(RadReconError, ValueError):
    """A precondition on the inputs does not hold."""


class SingularityError(ValidationError):
    """Evaluation point coincides with a source singularity."""

    module = "fields"


class IntervalDataError(ValidationError):
    """Samples cover only part of a ray; recovery from an interval is not supported."""

    module = "rayrecover"


class NumericalError(RadReconError, ArithmeticError):
    """The computation could not deliver a trustworthy number."""


class NearSingularError(NumericalError):
    """The two-point system is too close to singular (``sin(kappa*tau)`` too small)."""

    module = "rayrecover"


class PrecisionExhaustedError(NumericalError):
    """The cancellation in the recovery tower exceeds the working precision."""

    module = "rayrecover"


class ConditioningError(NumericalError):
    """A least-squares fit is rank deficient or its residual is too large."""


class SingularSystemError(NumericalError):
    """The discretised Lippmann-Schwinger system is singular or nearly so."""

    module = "scattering"


class GridSizeError(ValidationError):
    """The potential grid exceeds the dense-solver budget."""

    module = "scattering"


class PipelineStageError(NumericalError):
    """Wraps a failure inside one stage of the potential-recovery pipeline."""

    module = "scattering"


class ApertureWarning(UserWarning):
    """The truncated plane aperture may be too small for the requested tolerance."""


class RangeWarning(UserWarning):
    """A reconstruction was requested outside the validated radius range."""


class BornValidityWarning(UserWarning):
    """The potential is too strong for the first Born approximation."""
