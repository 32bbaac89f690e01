"""Temple's inequality for the top of the spectrum.

If ``E_max`` is an isolated eigenvalue of ``A`` and ``E_1`` bounds the rest of
the spectrum from above, then for a unit vector ``psi`` with
``<psi, A psi> > E_1``::

    E_max <= <A> + (<A^2> - <A>^2) / (<A> - E_1)
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..exceptions import PreconditionError, ValidationError

logger = logging.getLogger(__name__)

CAUCHY_SCHWARZ_SLACK = 1e-12


@dataclass(frozen=True)
class TempleInput:
    mean: float
    second_moment: float
    e1: float

    def __post_init__(self):
        if self.second_moment < self.mean ** 2 - CAUCHY_SCHWARZ_SLACK:
            raise ValidationError(
                f"<A^2> = {self.second_moment!r} < <A>^2 = {self.mean ** 2!r}"
            )

    @property
    def variance(self) -> float:
        return max(0.0, self.second_moment - self.mean ** 2)


def temple_bound(t: TempleInput) -> float:
    deficit = t.e1 - t.mean
    if deficit >= 0:
        raise PreconditionError("Temple bound needs <psi, A psi> > E_1", deficit)
    return t.mean + t.variance / (t.mean - t.e1)


def temple_moments(apply: Callable[[np.ndarray], np.ndarray], psi, e1: float) -> TempleInput:
    """Quadratic-form moments of ``psi / |psi|`` computed from one matvec."""
    psi = np.asarray(psi, dtype=float)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValidationError("trial vector is zero")
    psi = psi / norm
    image = apply(psi)
    return TempleInput(mean=float(psi @ image), second_moment=float(image @ image), e1=float(e1))
