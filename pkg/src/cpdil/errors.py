"""Exception hierarchy shared by every module."""

from __future__ import annotations


class CpdilError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(CpdilError, ValueError):
    pass


class NotHermitian(CpdilError, ValueError):
    pass


class NotCP(CpdilError, ValueError):
    pass


class NotCommuting(CpdilError):
    """Raised when two maps fail to commute to tolerance."""

    def __init__(self, message: str, defect: float | None = None):
        super().__init__(message)
        self.defect = defect


class WitnessResidual(CpdilError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class DimTooLarge(CpdilError, ValueError):
    pass


class CoherenceDefect(CpdilError):
    """A coherence diagram fails; ``location`` names the grid indices."""

    def __init__(self, message: str, location=None, defect: float | None = None, report=None):
        super().__init__(message)
        self.location = location
        self.defect = defect
        self.report = report


class SeedsNotCommuting(CpdilError, ValueError):
    pass


class NegativeTime(CpdilError, ValueError):
    pass


class HorizonExceeded(CpdilError, ValueError):
    pass


class NotPD(CpdilError):
    """Kernel positivity gate failed; ``report`` carries the witness."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class OutOfHorizon(CpdilError, ValueError):
    def __init__(self, message: str, depth: int | None = None):
        super().__init__(message)
        self.depth = depth


class BadProjection(CpdilError, ValueError):
    pass


class EpsilonViolated(CpdilError, ValueError):
    pass


class InsufficientTable(CpdilError, ValueError):
    pass


class NotCauchy(CpdilError):
    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class Infeasible(CpdilError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SchemaError(CpdilError, ValueError):
    """Malformed input file or document."""
