"""Hierarchical Laplacian and random Hamiltonians restricted to ``Q_kappa(x_0)``.

The free Neumann operator is ``sum_{s<=kappa} p_s E_s`` where ``E_s`` averages a
vector over rank-``s`` clusters. Because clusters are contiguous blocks of the
enumeration, ``E_s`` is a reshape-and-sum followed by a repeat, and all ranks
share one bottom-up pass of cluster sums.
"""

import dataclasses
import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator

from ..config import DENSE_CAP
from ..exceptions import ResourceError, ValidationError
from ..structure import HierarchicalStructure, WeightSequence, common_rank_matrix

logger = logging.getLogger(__name__)


class Boundary(str, Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


def check_state_vector(structure: HierarchicalStructure, kappa: int, psi) -> np.ndarray:
    psi = np.asarray(psi)
    dim = structure.volume(kappa)
    if psi.shape != (dim,):
        raise ValidationError(f"state vector has shape {psi.shape}, expected ({dim},)")
    if not np.issubdtype(psi.dtype, np.inexact):
        psi = psi.astype(float)
    return psi


@dataclass(frozen=True, eq=False)
class FiniteVolumeHamiltonian:
    """``Delta_{X,kappa} + omega`` with Neumann or Dirichlet boundary.

    The Dirichlet operator is the Neumann one plus ``tail(kappa)`` times the
    identity. Without a potential this is the free operator. With
    ``truncation = r < kappa`` the operator is the direct sum over the rank-r
    blocks of ``Q_kappa`` of the rank-r restrictions, i.e. only ``p_s`` with
    ``s <= r`` enter and the Dirichlet shift is ``tail(r)``.
    """

    structure: HierarchicalStructure
    weights: WeightSequence
    kappa: int
    boundary: Boundary = Boundary.NEUMANN
    potential: Optional[np.ndarray] = None
    truncation: Optional[int] = None

    def __post_init__(self):
        self.structure.check_rank(self.kappa)
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.truncation is not None and not 0 <= self.truncation <= self.kappa:
            raise ValidationError(
                f"truncation rank must satisfy 0 <= r <= kappa={self.kappa}, got {self.truncation}"
            )
        if self.potential is not None:
            omega = np.array(self.potential, dtype=float)
            if omega.shape != (self.dim,):
                raise ValidationError(
                    f"potential has shape {omega.shape}, expected ({self.dim},)"
                )
            if not np.all(np.isfinite(omega)):
                raise ValidationError("potential has non-finite entries")
            omega.setflags(write=False)
            object.__setattr__(self, "potential", omega)

    @property
    def dim(self) -> int:
        return self.structure.volume(self.kappa)

    @property
    def block_rank(self) -> int:
        return self.kappa if self.truncation is None else self.truncation

    @property
    def shift(self) -> float:
        """Constant added on the diagonal by the boundary condition."""
        if self.boundary is Boundary.DIRICHLET:
            return self.weights.tail(self.block_rank)
        return 0.0

    def with_boundary(self, boundary: Boundary) -> "FiniteVolumeHamiltonian":
        return dataclasses.replace(self, boundary=Boundary(boundary))

    def with_potential(self, potential) -> "FiniteVolumeHamiltonian":
        return dataclasses.replace(self, potential=potential)

    def decoupled(self, r: int) -> "FiniteVolumeHamiltonian":
        """Direct sum of the rank-``r`` restrictions with the same boundary and potential."""
        return dataclasses.replace(self, truncation=r)

    def apply(self, psi) -> np.ndarray:
        return hamiltonian_apply(self, psi)

    def dense(self, cap: Optional[int] = None) -> np.ndarray:
        return dense_matrix(self, cap)

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(
            (self.dim, self.dim), matvec=self.apply, rmatvec=self.apply, dtype=float
        )


def cluster_sums(
    structure: HierarchicalStructure, kappa: int, psi, upto: Optional[int] = None
) -> List[np.ndarray]:
    """Sums of ``psi`` over every cluster of rank ``0..upto`` inside ``Q_kappa``."""
    psi = check_state_vector(structure, kappa, psi)
    upto = kappa if upto is None else upto
    sums = [psi]
    for r in range(1, upto + 1):
        sums.append(sums[-1].reshape(-1, structure.branching(r)).sum(axis=1))
    return sums


def averaging_apply(structure: HierarchicalStructure, s: int, kappa: int, psi) -> np.ndarray:
    """``E_s psi``: replace every entry by the mean over its rank-``s`` cluster."""
    structure.check_rank(kappa)
    if not 0 <= s <= kappa:
        raise ValidationError(f"averaging rank must satisfy 0 <= s <= kappa={kappa}, got {s}")
    psi = check_state_vector(structure, kappa, psi)
    if s == 0:
        return psi.copy()
    volume = structure.volume(s)
    return np.repeat(psi.reshape(-1, volume).mean(axis=1), volume)


def cluster_averages(structure: HierarchicalStructure, kappa: int, psi) -> List[np.ndarray]:
    """``[E_0 psi, E_1 psi, ..., E_kappa psi]`` from one pass of cluster sums."""
    sums = cluster_sums(structure, kappa, psi)
    return [
        np.repeat(total / structure.volume(r), structure.volume(r))
        for r, total in enumerate(sums)
    ]


def laplacian_apply(
    structure: HierarchicalStructure,
    weights: WeightSequence,
    kappa: int,
    psi,
    truncation: Optional[int] = None,
) -> np.ndarray:
    """Free Neumann matvec ``sum_{s=1..r} p_s E_s psi`` in ``O(|Q_kappa|)``, ``r = truncation or kappa``."""
    top = kappa if truncation is None else truncation
    sums = cluster_sums(structure, kappa, psi, upto=top)
    # top-down: fold the coarse contributions back onto finer clusters
    acc = weights.p(top) / structure.volume(top) * sums[top]
    for r in range(top, 0, -1):
        acc = np.repeat(acc, structure.branching(r))
        if r > 1:
            acc = acc + weights.p(r - 1) / structure.volume(r - 1) * sums[r - 1]
    return acc


def hamiltonian_apply(H: FiniteVolumeHamiltonian, psi) -> np.ndarray:
    psi = check_state_vector(H.structure, H.kappa, psi)
    out = laplacian_apply(H.structure, H.weights, H.kappa, psi, H.truncation)
    if H.shift:
        out = out + H.shift * psi
    if H.potential is not None:
        out = out + H.potential * psi
    return out


def dense_matrix(H: FiniteVolumeHamiltonian, cap: Optional[int] = None) -> np.ndarray:
    """Entry ``(x, y) = sum_{s >= max(d(x,y), 1)} p_s/|Q_s|`` plus the diagonal terms.

    ``d(x, y)`` is the smallest rank of a cluster containing both points;
    entries with ``d(x, y)`` above the truncation rank vanish.
    """
    cap = DENSE_CAP if cap is None else cap
    if H.dim > cap:
        raise ResourceError(f"dense matrix of dimension {H.dim} exceeds the cap {cap}")
    top = H.block_rank
    scaled = [0.0] + [H.weights.p(s) / H.structure.volume(s) for s in range(1, top + 1)]
    # coefficients[d] = sum_{s=d..top} p_s/|Q_s|, with p_0 = 0
    coefficients = np.zeros(H.kappa + 1)
    coefficients[: top + 1] = np.cumsum(scaled[::-1])[::-1]
    matrix = coefficients[common_rank_matrix(H.structure, H.kappa)]
    diagonal = np.full(H.dim, H.shift)
    if H.potential is not None:
        diagonal = diagonal + H.potential
    matrix[np.diag_indices(H.dim)] += diagonal
    return matrix
