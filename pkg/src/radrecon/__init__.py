"""Recover outgoing wave fields from their imaginary parts.

The package is organised bottom-up:

``fields``
    Green functions, sources, multipoles and scene description.
``awseries``
    Expansions ``e^{iκs}/s Σ f_j s^{1-j}`` along rays and the samplers that feed them.
``rayrecover``
    The coefficient tower that turns ``Im ψ`` on a ray into ``f_1..f_N``.
``planeops``
    Plane grids, reconstruction from ``Im ψ`` on a plane and half-space continuation.
``scattering``
    Lippmann-Schwinger solves, far fields, reciprocity and Born-level inversion.
``cli``
    Batch front end (``python -m radrecon``).
"""

from .errors import (
    ApertureWarning,
    BornValidityWarning,
    NumericalError,
    RadReconError,
    RangeWarning,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "RadReconError",
    "ValidationError",
    "NumericalError",
    "ApertureWarning",
    "RangeWarning",
    "BornValidityWarning",
]
