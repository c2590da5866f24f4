"""Uniform result record returned by every verification routine."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class Report:
    """Outcome of one verification.

    Parameters
    ----------
    name : str
        Short identifier of the check.
    residual : float
        Worst residual observed.
    tol : float
        Threshold the residual was compared against.
    passed : bool
        ``residual <= tol`` unless the check defines its own verdict.
    details : dict
        Check-specific extras (locations, sub-residuals, counts).
    """

    name: str
    residual: float
    tol: float
    passed: bool
    details: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_residual(cls, name: str, residual: float, tol: float, **details) -> "Report":
        residual = float(residual)
        return cls(name, residual, float(tol), bool(residual <= tol), dict(details))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "residual": self.residual,
            "tol": self.tol,
            "passed": self.passed,
            "details": _plain(self.details),
        }

    def __bool__(self) -> bool:
        return self.passed


def _plain(obj):
    # json-friendly copy: numpy scalars to python, tuples to lists
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Report):
        return obj.to_dict()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj
