"""Replica loop shared by every Monte Carlo estimate.

Replicas are independent; each one derives its randomness from
``(master_seed, replica)`` only, and results come back in replica order, so
aggregates do not depend on ``n_jobs``.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, TypeVar

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from ..config import DENSE_CAP, THREADS
from ..exceptions import ResourceError, ValidationError
from ..operators import Boundary, FiniteVolumeHamiltonian
from ..randomness import SingleSiteDistribution, sample_potential
from ..spectra import eigenvalues_dense
from ..structure import HierarchicalStructure, WeightSequence

logger = logging.getLogger(__name__)

T = TypeVar("T")


def resolve_jobs(n_jobs: Optional[int]) -> int:
    if n_jobs is None:
        n_jobs = THREADS
    return -1 if n_jobs is None else int(n_jobs)


def run_replicas(
    fn: Callable[[int], T],
    replicas: int,
    n_jobs: Optional[int] = None,
    progress: bool = False,
    desc: str = "replicas",
) -> List[T]:
    """``[fn(0), ..., fn(replicas - 1)]`` evaluated on a thread pool."""
    if replicas < 1:
        raise ValidationError(f"need at least one replica, got {replicas}")
    n_jobs = resolve_jobs(n_jobs)
    if n_jobs == 1:
        return [fn(replica) for replica in tqdm(range(replicas), desc=desc, disable=not progress)]
    results = Parallel(n_jobs=n_jobs, prefer="threads", return_as="generator")(
        delayed(fn)(replica) for replica in range(replicas)
    )
    return list(tqdm(results, total=replicas, desc=desc, disable=not progress))


def mean_and_stderr(samples, axis: int = 0):
    """Sample mean and standard error (NaN with fewer than two samples)."""
    samples = np.asarray(samples, dtype=float)
    count = samples.shape[axis]
    mean = samples.mean(axis=axis)
    if count < 2:
        return mean, np.full_like(mean, np.nan)
    return mean, samples.std(axis=axis, ddof=1) / np.sqrt(count)


def check_dense_cap(structure: HierarchicalStructure, kappa: int, cap: Optional[int]) -> int:
    cap = DENSE_CAP if cap is None else cap
    if structure.volume(kappa) > cap:
        raise ResourceError(
            f"volume |Q_{kappa}| = {structure.volume(kappa)} exceeds the dense cap {cap}"
        )
    return cap


def warn_if_degenerate(dist: SingleSiteDistribution) -> None:
    if dist.is_degenerate:
        logger.warning("Single-site distribution %s is degenerate (all mass at one point)", dist.to_dict())


@dataclass(frozen=True, eq=False)
class ReplicaSpectrum:
    """Potential and sorted spectrum of one sampled Hamiltonian."""

    replica: int
    omega: np.ndarray
    eigenvalues: np.ndarray


def replica_hamiltonian(
    structure: HierarchicalStructure,
    weights: WeightSequence,
    kappa: int,
    dist: SingleSiteDistribution,
    master_seed: int,
    replica: int,
    boundary: Boundary = Boundary.NEUMANN,
) -> FiniteVolumeHamiltonian:
    omega = sample_potential(dist, structure.volume(kappa), master_seed, replica).omega
    return FiniteVolumeHamiltonian(structure, weights, kappa, boundary, omega)


def replica_spectrum(
    structure: HierarchicalStructure,
    weights: WeightSequence,
    kappa: int,
    dist: SingleSiteDistribution,
    master_seed: int,
    replica: int,
    boundary: Boundary = Boundary.NEUMANN,
    cap: Optional[int] = None,
) -> ReplicaSpectrum:
    H = replica_hamiltonian(structure, weights, kappa, dist, master_seed, replica, boundary)
    eigenvalues = eigenvalues_dense(H.dense(cap), cap)
    return ReplicaSpectrum(replica=replica, omega=H.potential, eigenvalues=eigenvalues)
