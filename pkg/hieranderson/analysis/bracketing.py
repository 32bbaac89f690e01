"""Dirichlet-Neumann bracketing for a single potential.

Cutting ``Q_kappa`` into its rank-``r`` blocks drops the jumps of rank above
``r``. As quadratic forms this lowers the Neumann operator and raises the
Dirichlet one::

    H_{N,kappa} >= (+)_j H_{N,r,j}        H_{D,kappa} <= (+)_j H_{D,r,j}

By the min-max principle the same ordering holds for every sorted eigenvalue.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import TOLERANCES
from ..exceptions import ValidationError
from ..operators import Boundary, FiniteVolumeHamiltonian
from ..randomness import TEST_VECTOR_STREAM, replica_generator
from ..spectra import eigenvalues_dense
from ..structure import HierarchicalStructure, WeightSequence
from .replicas import check_dense_cap

logger = logging.getLogger(__name__)

BRACKETING_ATOL = float(TOLERANCES["BRACKETING_ATOL"])
GAP_ATOL = float(TOLERANCES["GAP_ATOL"])


@dataclass(frozen=True)
class BracketingReport:
    kappa: int
    r: int
    psi_count: int
    form_violation_neumann: float
    form_violation_dirichlet: float
    eigen_violation_neumann: float
    eigen_violation_dirichlet: float

    @property
    def max_violation(self) -> float:
        return max(
            self.form_violation_neumann,
            self.form_violation_dirichlet,
            self.eigen_violation_neumann,
            self.eigen_violation_dirichlet,
        )

    def passed(self, atol: float = BRACKETING_ATOL) -> bool:
        return self.max_violation <= atol


def random_unit_vectors(dim: int, count: int, seed: int, replica: int = 0) -> np.ndarray:
    rng = replica_generator(seed, replica, TEST_VECTOR_STREAM)
    vectors = rng.standard_normal((count, dim))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def _quadratic_forms(H: FiniteVolumeHamiltonian, vectors: np.ndarray) -> np.ndarray:
    return np.array([psi @ H.apply(psi) for psi in vectors])


def bracketing_check(
    structure: HierarchicalStructure,
    weights: WeightSequence,
    kappa: int,
    r: int,
    omega,
    psi_count: int = 100,
    seed: int = 0,
    cap: Optional[int] = None,
) -> BracketingReport:
    """Largest violation of both orderings, as forms on random vectors and as spectra."""
    if not 0 <= r <= kappa:
        raise ValidationError(f"block rank must satisfy 0 <= r <= kappa={kappa}, got {r}")
    cap = check_dense_cap(structure, kappa, cap)
    neumann = FiniteVolumeHamiltonian(structure, weights, kappa, Boundary.NEUMANN, omega)
    dirichlet = neumann.with_boundary(Boundary.DIRICHLET)
    blocks_neumann = neumann.decoupled(r)
    blocks_dirichlet = dirichlet.decoupled(r)

    vectors = random_unit_vectors(neumann.dim, psi_count, seed)
    form_neumann = _quadratic_forms(blocks_neumann, vectors) - _quadratic_forms(neumann, vectors)
    form_dirichlet = _quadratic_forms(dirichlet, vectors) - _quadratic_forms(blocks_dirichlet, vectors)

    e_neumann = eigenvalues_dense(neumann.dense(cap), cap)
    e_dirichlet = eigenvalues_dense(dirichlet.dense(cap), cap)
    e_blocks_neumann = eigenvalues_dense(blocks_neumann.dense(cap), cap)
    e_blocks_dirichlet = eigenvalues_dense(blocks_dirichlet.dense(cap), cap)

    report = BracketingReport(
        kappa=kappa,
        r=r,
        psi_count=psi_count,
        form_violation_neumann=float(np.max(form_neumann, initial=0.0)),
        form_violation_dirichlet=float(np.max(form_dirichlet, initial=0.0)),
        eigen_violation_neumann=float(np.max(e_blocks_neumann - e_neumann, initial=0.0)),
        eigen_violation_dirichlet=float(np.max(e_dirichlet - e_blocks_dirichlet, initial=0.0)),
    )
    if not report.passed():
        logger.warning("Bracketing violated for kappa=%d, r=%d: %.3e", kappa, r, report.max_violation)
    return report


def dirichlet_neumann_gap(
    structure: HierarchicalStructure,
    weights: WeightSequence,
    kappa: int,
    omega,
    cap: Optional[int] = None,
) -> float:
    """``max_j |e_D(j) - e_N(j) - tail(kappa)|`` from two independent diagonalizations."""
    cap = check_dense_cap(structure, kappa, cap)
    neumann = FiniteVolumeHamiltonian(structure, weights, kappa, Boundary.NEUMANN, omega)
    e_neumann = eigenvalues_dense(neumann.dense(cap), cap)
    e_dirichlet = eigenvalues_dense(neumann.with_boundary(Boundary.DIRICHLET).dense(cap), cap)
    return float(np.abs(e_dirichlet - e_neumann - weights.tail(kappa)).max())
