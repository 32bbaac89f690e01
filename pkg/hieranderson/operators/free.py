"""Closed-form spectral data of the free operator."""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..config import COUNTING_SLACK, RANK_SLACK
from ..exceptions import ValidationError
from ..structure import HierarchicalStructure, WeightSequence
from ..structure.weights import GEOMETRIC
from .laplacian import Boundary, check_state_vector, cluster_averages

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExactSpectrum:
    """Distinct eigenvalues in increasing order with their multiplicities."""

    eigenvalues: np.ndarray
    multiplicities: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.multiplicities.sum())

    def pairs(self):
        return list(zip(self.eigenvalues.tolist(), self.multiplicities.tolist()))

    def expand(self) -> np.ndarray:
        """Every eigenvalue repeated by its multiplicity, sorted."""
        return np.repeat(self.eigenvalues, self.multiplicities)


def exact_free_spectrum(
    structure: HierarchicalStructure,
    weights: WeightSequence,
    kappa: int,
    boundary: Boundary = Boundary.NEUMANN,
) -> ExactSpectrum:
    """``lam(r)`` with multiplicity ``|Q_k|/|Q_r| - |Q_k|/|Q_{r+1}|`` for r < k, ``lam(k)`` once.

    The multiplicity count holds for any branching sequence, not only
    homogeneous ones. Ranks with ``p_r = 0`` produce repeated values, which
    are merged.
    """
    structure.check_rank(kappa)
    volume = structure.volume(kappa)
    values, counts = [], []
    for r in range(kappa):
        values.append(weights.lam(r))
        counts.append(volume // structure.volume(r) - volume // structure.volume(r + 1))
    values.append(weights.lam(kappa))
    counts.append(1)
    if Boundary(boundary) is Boundary.DIRICHLET:
        tail = weights.tail(kappa)
        values = [value + tail for value in values]

    eigenvalues, inverse = np.unique(np.asarray(values), return_inverse=True)
    multiplicities = np.bincount(inverse.ravel(), weights=counts).astype(np.int64)
    return ExactSpectrum(eigenvalues=eigenvalues, multiplicities=multiplicities)


def ids_free(structure: HierarchicalStructure, weights: WeightSequence, E: float) -> float:
    """Integrated density of states of the free operator on the whole space.

    ``N_0(E) = 1 - 1/|Q_{r(E)+1}|`` with ``r(E)`` the largest rank such that
    ``lam(r) <= E``; zero below the spectrum and one from ``E = 1`` on.
    """
    if E < 0:
        return 0.0
    if E >= 1:
        return 1.0
    # lam(r) <= E  <=>  log_tail(r) >= log(1 - E); the slack is relative to 1 - E
    threshold = math.log1p(-E) - RANK_SLACK
    rank = 0
    if weights.kind == GEOMETRIC:
        rank = max(0, math.floor(-threshold / math.log(weights.rho)) - 1)
        while rank > 0 and weights.log_tail(rank) < threshold:
            rank -= 1
    while weights.log_tail(rank + 1) >= threshold:
        rank += 1
    return 1.0 - 1.0 / structure.volume(rank + 1)


def ids_free_finite(
    structure: HierarchicalStructure,
    weights: WeightSequence,
    kappa: int,
    E: float,
    boundary: Boundary = Boundary.NEUMANN,
) -> float:
    """Normalized counting function of the free operator on ``Q_kappa``."""
    spectrum = exact_free_spectrum(structure, weights, kappa, boundary)
    below = spectrum.eigenvalues <= E + COUNTING_SLACK
    return float(spectrum.multiplicities[below].sum() / spectrum.dim)


def free_eigenfunction(
    structure: HierarchicalStructure,
    kappa: int,
    r: int,
    block: int,
    coefficients: Sequence[float],
) -> np.ndarray:
    """Eigenfunction of the free Neumann operator for ``lam(r)``.

    It is supported on the ``block``-th rank-``(r+1)`` cluster of ``Q_kappa``,
    constant ``coefficients[j]`` on its ``j``-th rank-``r`` sub-cluster, and has
    zero sum. For ``r = kappa`` the only eigenfunction is the constant.
    """
    structure.check_rank(kappa)
    if not 0 <= r < kappa:
        raise ValidationError(f"eigenfunction rank must satisfy 0 <= r < kappa={kappa}, got {r}")
    coefficients = np.asarray(coefficients, dtype=float)
    n = structure.branching(r + 1)
    if coefficients.shape != (n,):
        raise ValidationError(f"need {n} coefficients for rank {r}, got {coefficients.shape}")
    scale = max(1.0, float(np.abs(coefficients).max()))
    if abs(coefficients.sum()) > 1e-12 * scale:
        raise ValidationError("coefficients must sum to zero")
    blocks = structure.volume(kappa) // structure.volume(r + 1)
    if not 0 <= block < blocks:
        raise ValidationError(f"block must lie in 0..{blocks - 1}, got {block}")

    psi = np.zeros(structure.volume(kappa))
    start = block * structure.volume(r + 1)
    psi[start:start + structure.volume(r + 1)] = np.repeat(coefficients, structure.volume(r))
    return psi


def spectral_decomposition_apply(
    structure: HierarchicalStructure, weights: WeightSequence, kappa: int, psi
) -> np.ndarray:
    """``sum_{r<kappa} lam(r)(E_r - E_{r+1}) psi + lam(kappa) E_kappa psi``."""
    psi = check_state_vector(structure, kappa, psi)
    averages = cluster_averages(structure, kappa, psi)
    out = weights.lam(kappa) * averages[kappa]
    for r in range(kappa):
        out = out + weights.lam(r) * (averages[r] - averages[r + 1])
    return out
