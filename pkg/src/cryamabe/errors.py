"""Exception hierarchy for the CR Yamabe laboratory.

Every failure mode that a caller might want to catch separately gets its
own class.  All inherit from CRYamabeError so `except CRYamabeError`
catches anything raised deliberately by this package.
"""

from __future__ import annotations


class CRYamabeError(Exception):
    """Base class for all package-level errors."""


class CalibrationError(CRYamabeError):
    """A calibration constant could not be pinned down to tolerance."""


class DomainError(CRYamabeError):
    """Input outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation requested at (or numerically too close to) a pole."""


class NonCRDeformationError(CRYamabeError):
    """Candidate deformation violates the |f| < 1 ellipticity bound."""


class GluingOverlapError(CRYamabeError):
    """Gluing regions of a multi-ball deformation are not disjoint."""


class DegenerateLeviError(CRYamabeError):
    """Levi form degenerates (|f| -> 1) somewhere on the probe set."""


class QuadratureError(CRYamabeError):
    """Quadrature produced NaN/inf or failed a self-consistency check."""


class SolverConvergenceError(CRYamabeError):
    """An inner linear solve failed to reach its residual target."""


class ContractionDivergenceError(CRYamabeError):
    """The corrector iteration diverged instead of contracting."""


class SingularGramError(CRYamabeError):
    """Tangent-space Gram matrix numerically singular."""


class ConfigError(CRYamabeError):
    """Invalid run configuration."""
