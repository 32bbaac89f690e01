"""Least-squares exponent fits for the tail asymptotics.

``van_hove``: ``ln(value)`` against ``ln E``; the free tail ``1 - N_0(1 - E)``
behaves like ``E^(d_s/2)``, so the target slope is ``d_s/2``.
``lifshits``: ``ln|ln value|`` against ``ln E``; the random tail decays like
``exp(-c E^(-d_s/2))`` up to logarithms, so the target slope is ``-d_s/2``.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from ..exceptions import DomainError, ValidationError
from ..operators import ids_free
from ..structure import HierarchicalStructure, WeightSequence

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 4


class Transform(str, Enum):
    VAN_HOVE = "van_hove"
    LIFSHITS = "lifshits"


@dataclass(frozen=True)
class ExponentFit:
    transform: Transform
    slope: float
    intercept: float
    residual: float
    slope_stderr: float
    window: Tuple[float, float]
    points: int
    target: Optional[float] = None

    @property
    def relative_error(self) -> Optional[float]:
        if self.target is None or self.target == 0:
            return None
        return abs(self.slope - self.target) / abs(self.target)


def _ordinate(transform: Transform, log_values: np.ndarray) -> np.ndarray:
    if transform is Transform.VAN_HOVE:
        return log_values
    return np.log(np.abs(log_values))


def _log_values(values: np.ndarray, log_domain: bool) -> np.ndarray:
    if log_domain:
        if np.any(~np.isfinite(values)) or np.any(values >= 0):
            raise DomainError("log-domain values must be finite and negative")
        return values
    if np.any(values <= 0) or np.any(values >= 1):
        raise DomainError("fit values must lie strictly inside (0, 1)")
    return np.log(values)


def exponent_fit(
    points: Iterable[Tuple[float, float]],
    transform: str,
    target: Optional[float] = None,
    log_domain: bool = False,
) -> ExponentFit:
    """Slope of the transformed curve with the RMS residual of the fit.

    With ``log_domain=True`` the second coordinate is already ``ln(value)``.
    """
    transform = Transform(transform)
    points = sorted((float(E), float(v)) for E, v in points)
    if len(points) < MIN_FIT_POINTS:
        raise ValidationError(f"an exponent fit needs at least {MIN_FIT_POINTS} points, got {len(points)}")
    energies = np.array([E for E, _ in points])
    if np.any(energies <= 0):
        raise DomainError("fit energies must be positive")
    log_values = _log_values(np.array([v for _, v in points]), log_domain)

    x = np.log(energies)
    y = _ordinate(transform, log_values)
    fit = linregress(x, y)
    residual = float(np.sqrt(np.mean((y - (fit.intercept + fit.slope * x)) ** 2)))
    return ExponentFit(
        transform=transform,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        residual=residual,
        slope_stderr=float(fit.stderr),
        window=(float(energies[0]), float(energies[-1])),
        points=len(points),
        target=target,
    )


def pointwise_ratio(E: float, value: float, transform: str = "van_hove") -> float:
    """``ordinate / ln E`` at a single point."""
    log_value = _log_values(np.array([float(value)]), False)
    return float(_ordinate(Transform(transform), log_value)[0] / math.log(E))


def van_hove_curve(
    structure: HierarchicalStructure,
    weights: WeightSequence,
    exponents: Sequence[int],
    base: float = 2.0,
) -> List[Tuple[float, float]]:
    """``(E, 1 - N_0(1 - E))`` at ``E = base**-m`` from the closed-form free IDS."""
    return [
        (base ** (-m), 1.0 - ids_free(structure, weights, 1.0 - base ** (-m)))
        for m in exponents
    ]
