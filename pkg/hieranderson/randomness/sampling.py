"""Reproducible potentials, the shift action and Birkhoff averages.

Every replica draws from its own counter-based Philox stream keyed by
``(master_seed, replica, stream)``, so a replica's potential does not depend on
which worker computes it or in which order.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..exceptions import RangeError, ValidationError
from ..structure import HierarchicalStructure, Point, indices_to_digits, digits_to_indices, translate_indices
from .distributions import SingleSiteDistribution

logger = logging.getLogger(__name__)

# stream identifiers inside one replica
POTENTIAL_STREAM = 0
START_VECTOR_STREAM = 1
TEST_VECTOR_STREAM = 2

_SEED_LIMIT = 2 ** 64


@dataclass(frozen=True, eq=False)
class PotentialSample:
    omega: np.ndarray
    master_seed: int
    replica: int

    @property
    def provenance(self):
        return self.master_seed, self.replica


def replica_generator(master_seed: int, replica: int, stream: int = POTENTIAL_STREAM) -> np.random.Generator:
    if not 0 <= master_seed < _SEED_LIMIT:
        raise ValidationError(f"master seed must be a 64-bit unsigned integer, got {master_seed}")
    if replica < 0 or stream < 0:
        raise ValidationError(f"replica and stream must be >= 0, got {replica}, {stream}")
    sequence = np.random.SeedSequence([int(master_seed), int(replica), int(stream)])
    return np.random.Generator(np.random.Philox(sequence))


def sample_potential(
    dist: SingleSiteDistribution, volume: int, master_seed: int, replica: int
) -> PotentialSample:
    if volume < 1:
        raise ValidationError(f"volume must be >= 1, got {volume}")
    rng = replica_generator(master_seed, replica, POTENTIAL_STREAM)
    omega = dist.ppf(rng.random(volume))
    omega.setflags(write=False)
    return PotentialSample(omega=omega, master_seed=int(master_seed), replica=int(replica))


def sampled_rank(struct: HierarchicalStructure, omega: np.ndarray) -> int:
    """Rank ``R`` with ``len(omega) == |Q_R|``."""
    size = len(omega)
    for rank, volume in enumerate(struct.volumes):
        if volume == size:
            return rank
    raise ValidationError(f"array of length {size} is not the volume of a materialized cluster")


def shift_window(
    struct: HierarchicalStructure, omega: np.ndarray, x: Point, kappa: int
) -> np.ndarray:
    """``(tau_x omega)`` restricted to ``Q_kappa``: entry ``y`` is ``omega[x + y]``."""
    omega = np.asarray(omega)
    rank = sampled_rank(struct, omega)
    if kappa > rank:
        raise RangeError(f"window rank {kappa} exceeds the sampled rank {rank}")
    if x.support_rank > rank:
        raise RangeError(f"shift {x.canonical} leaves Q_{rank}(x_0)")
    inner = struct.with_max_rank(rank)
    return omega[translate_indices(inner, x, np.arange(inner.volume(kappa)))]


def shifted_windows(struct: HierarchicalStructure, omega: np.ndarray, kappa: int) -> np.ndarray:
    """Row ``k`` is ``shift_window`` by the point with index ``k``, for every ``k`` in ``Q_R``."""
    omega = np.asarray(omega)
    rank = sampled_rank(struct, omega)
    if kappa > rank:
        raise RangeError(f"window rank {kappa} exceeds the sampled rank {rank}")
    inner = struct.with_max_rank(rank)
    shifts = indices_to_digits(inner, np.arange(inner.size), rank)
    offsets = indices_to_digits(inner, np.arange(inner.volume(kappa)), rank)
    radix = np.asarray(inner.branchings, dtype=np.int64)
    digits = (shifts[:, None, :] + offsets[None, :, :]) % radix
    return omega[digits_to_indices(inner, digits.reshape(-1, rank)).reshape(inner.size, -1)]


def birkhoff_average(
    struct: HierarchicalStructure,
    omega: np.ndarray,
    h: Callable[[np.ndarray], float],
    window_rank: int = 0,
) -> float:
    """``|Q_r|^-1 sum_{x in Q_r} h(tau_x omega)`` with windows of rank ``window_rank``."""
    windows = shifted_windows(struct, omega, window_rank)
    values = np.fromiter((h(window) for window in windows), dtype=float, count=len(windows))
    return float(values.mean())
