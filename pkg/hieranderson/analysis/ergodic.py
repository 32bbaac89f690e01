"""Covariance of the random operator under shifts and Birkhoff averages."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..config import DENSE_CAP, SIGMA_MEAN
from ..exceptions import RangeError, ValidationError
from ..operators import Boundary, FiniteVolumeHamiltonian
from ..randomness import SingleSiteDistribution, birkhoff_average, sample_potential, shift_window
from ..structure import HierarchicalStructure, Point, WeightSequence, translate_indices

logger = logging.getLogger(__name__)

# share of seeds whose average must land within the band
PASS_RATE = 0.95


def covariance_check(
    structure: HierarchicalStructure,
    weights: WeightSequence,
    kappa: int,
    R: int,
    omega,
    x: Point,
    cap: Optional[int] = None,
) -> float:
    """``max |K^{tau_x omega}(y, y') - K^omega(x + y, x + y')|`` over ``Q_R``.

    ``K^omega = sum_{s<=kappa} p_s E_s + omega`` on ``Q_R``, which leaves every
    rank-``kappa`` block invariant.
    """
    if not 0 <= kappa < R:
        raise RangeError(f"truncation rank must satisfy 0 <= kappa < R={R}, got {kappa}")
    inner = structure.with_max_rank(R)
    omega = np.asarray(omega, dtype=float)
    cap = DENSE_CAP if cap is None else cap
    shifted = shift_window(inner, omega, x, R)
    base = FiniteVolumeHamiltonian(inner, weights, R, Boundary.NEUMANN, omega, truncation=kappa)
    moved = base.with_potential(shifted)
    image = translate_indices(inner, x, np.arange(inner.size))
    conjugated = base.dense(cap)[np.ix_(image, image)]
    return float(np.abs(moved.dense(cap) - conjugated).max())


@dataclass(frozen=True, eq=False)
class BirkhoffReport:
    averages: np.ndarray
    expected: float
    sigma: float
    rank: int
    threshold: float
    pass_rate: float = PASS_RATE

    @property
    def deviations(self) -> np.ndarray:
        return np.abs(self.averages - self.expected)

    @property
    def pass_count(self) -> int:
        return int(np.sum(self.deviations <= self.threshold * self.sigma))

    @property
    def required(self) -> int:
        """Averages that must fall inside the band, ``ceil(pass_rate * seeds)``."""
        return math.ceil(self.pass_rate * len(self.averages) - 1e-9)

    @property
    def passed(self) -> bool:
        return self.pass_count >= self.required


def origin_value(window: np.ndarray) -> float:
    return float(window[0])


def birkhoff_check(
    structure: HierarchicalStructure,
    dist: SingleSiteDistribution,
    rank: int,
    seeds: int,
    master_seed: int,
    observable: Callable[[np.ndarray], float] = origin_value,
    expected: Optional[float] = None,
    variance: Optional[float] = None,
    window_rank: int = 0,
    threshold: float = SIGMA_MEAN,
    pass_rate: float = PASS_RATE,
) -> BirkhoffReport:
    """Birkhoff averages over ``Q_rank`` for ``seeds`` independent potentials.

    Each average should lie within ``threshold`` standard deviations
    ``sqrt(variance / |Q_rank|)`` of ``expected``; both default to the mean and
    variance of the single-site law, which is right for the origin value.
    """
    if not 0 < pass_rate <= 1:
        raise ValidationError(f"pass rate must lie in (0, 1], got {pass_rate}")
    inner = structure.with_max_rank(rank)
    expected = dist.mean if expected is None else expected
    variance = dist.var if variance is None else variance
    volume = inner.volume(rank)
    averages = np.array(
        [
            birkhoff_average(
                inner, sample_potential(dist, volume, master_seed, replica).omega, observable, window_rank
            )
            for replica in range(seeds)
        ]
    )
    report = BirkhoffReport(
        averages=averages,
        expected=float(expected),
        sigma=float(np.sqrt(variance / volume)),
        rank=rank,
        threshold=threshold,
        pass_rate=pass_rate,
    )
    logger.debug(
        "Birkhoff check: %d of %d averages within %.1f sigma (%d required)",
        report.pass_count, seeds, threshold, report.required,
    )
    return report
