"""Monte Carlo estimates of the integrated density of states.

For a fixed rank ``kappa`` the expected counting functions of the Neumann and
Dirichlet restrictions sandwich the infinite-volume IDS: the Dirichlet one
from below, the Neumann one from above.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import SIGMA_ORDERING
from ..exceptions import ValidationError
from ..operators import Boundary, ids_free
from ..randomness import SingleSiteDistribution
from ..spectra import counting_function
from ..structure import HierarchicalStructure, WeightSequence
from .replicas import check_dense_cap, mean_and_stderr, replica_spectrum, run_replicas, warn_if_degenerate

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class IdsEstimate:
    energies: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    replicas: int
    boundary: Boundary
    kappa: int

    def max_decrease(self) -> float:
        """Largest drop of the mean between consecutive grid points, in units of 2 stderr."""
        if len(self.mean) < 2:
            return 0.0
        drop = self.mean[:-1] - self.mean[1:]
        slack = 2 * np.nan_to_num(np.hypot(self.stderr[:-1], self.stderr[1:]))
        return float(np.max(drop - slack, initial=0.0))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "E": self.energies,
                "value": self.mean,
                "stderr": self.stderr,
                "method": f"mc-{self.boundary.value}",
                "kappa": self.kappa,
                "replicas": self.replicas,
            }
        )


def energy_grid(kind: str, start: float, stop: float, num: int) -> np.ndarray:
    if num < 1:
        raise ValidationError(f"grid needs at least one point, got {num}")
    if kind == "linear":
        return np.linspace(start, stop, num)
    if kind == "log":
        if not (start > 0 and stop > 0):
            raise ValidationError("a log grid needs positive endpoints")
        return np.geomspace(start, stop, num)
    raise ValidationError(f"grid kind must be 'linear' or 'log', got {kind!r}")


def mc_ids(
    boundary: Boundary,
    kappa: int,
    dist: SingleSiteDistribution,
    weights: WeightSequence,
    structure: HierarchicalStructure,
    E_grid: Sequence[float],
    replicas: int,
    master_seed: int,
    n_jobs: Optional[int] = None,
    cap: Optional[int] = None,
    progress: bool = False,
) -> IdsEstimate:
    """Mean and standard error of the counting function over sampled potentials."""
    boundary = Boundary(boundary)
    structure.check_rank(kappa)
    cap = check_dense_cap(structure, kappa, cap)
    warn_if_degenerate(dist)
    grid = np.sort(np.asarray(E_grid, dtype=float))

    def one(replica):
        sample = replica_spectrum(structure, weights, kappa, dist, master_seed, replica, boundary, cap)
        return counting_function(sample.eigenvalues, grid)

    counts = np.vstack(run_replicas(one, replicas, n_jobs, progress, desc=f"ids {boundary.value} k={kappa}"))
    mean, stderr = mean_and_stderr(counts)
    logger.debug("mc_ids %s kappa=%d replicas=%d done", boundary.value, kappa, replicas)
    return IdsEstimate(
        energies=grid, mean=mean, stderr=stderr, replicas=replicas, boundary=boundary, kappa=kappa
    )


def ids_free_curve(structure: HierarchicalStructure, weights: WeightSequence, E_grid) -> np.ndarray:
    return np.array([ids_free(structure, weights, float(E)) for E in E_grid])


def spectrum_bounds(dist: SingleSiteDistribution) -> Tuple[float, float]:
    """Deterministic spectrum ``[0, 1] + [v_minus, v_plus]`` of the random operator."""
    return dist.v_minus, 1.0 + dist.v_plus


def spectral_range_violation(eigenvalues, dist: SingleSiteDistribution) -> float:
    """How far a sampled spectrum sticks out of ``spectrum_bounds`` (0 when contained)."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    low, high = spectrum_bounds(dist)
    return float(max(0.0, low - eigenvalues.min(), eigenvalues.max() - high))


def continuity_grid(
    weights: WeightSequence,
    kappa: int,
    dist: SingleSiteDistribution,
    low: float,
    high: float,
) -> np.ndarray:
    """Energies strictly between consecutive atoms ``lam(r) + a`` inside ``[low, high]``.

    ``a`` runs over the atoms of the single-site law and its support edges; the
    returned points are the midpoints, so none of them can sit on a jump.
    """
    if not high > low:
        raise ValidationError(f"empty energy window [{low}, {high}]")
    offsets = set(dist.atoms()) | {dist.v_minus, dist.v_plus}
    levels = [weights.lam(r) for r in range(kappa + 1)] + [1.0]
    atoms = {level + offset for level in levels for offset in offsets}
    cuts = sorted({low, high} | {a for a in atoms if low < a < high})
    return np.array([(a + b) / 2 for a, b in zip(cuts[:-1], cuts[1:])])


@dataclass(frozen=True)
class SandwichReport:
    max_excess: float
    sigma: float
    passed: bool


def sandwich_check(
    dirichlet: IdsEstimate, neumann: IdsEstimate, sigma: float = SIGMA_ORDERING
) -> SandwichReport:
    """Dirichlet mean <= Neumann mean + ``sigma`` combined standard errors at every grid point."""
    if not np.array_equal(dirichlet.energies, neumann.energies):
        raise ValidationError("sandwich check needs both estimates on the same grid")
    combined = np.nan_to_num(np.hypot(dirichlet.stderr, neumann.stderr))
    excess = dirichlet.mean - neumann.mean - sigma * combined
    max_excess = float(np.max(excess, initial=-np.inf))
    return SandwichReport(max_excess=max_excess, sigma=sigma, passed=max_excess <= 0)


@dataclass(frozen=True)
class ConvergenceTrend:
    kappas: Tuple[int, ...]
    differences: Tuple[float, ...]
    stderrs: Tuple[float, ...]
    sigma: float
    passed: bool


def convergence_trend(
    kappas: Iterable[int],
    dist: SingleSiteDistribution,
    weights: WeightSequence,
    structure: HierarchicalStructure,
    E_grid: Sequence[float],
    replicas: int,
    master_seed: int,
    step: int = 2,
    sigma: float = SIGMA_ORDERING,
    n_jobs: Optional[int] = None,
    cap: Optional[int] = None,
) -> ConvergenceTrend:
    """``max_E |N_{N,k}(E) - N_{N,k+step}(E)|`` must not increase in ``k`` beyond ``sigma`` errors."""
    kappas = tuple(sorted(int(k) for k in kappas))
    needed = sorted(set(kappas) | {k + step for k in kappas})
    estimates = {
        k: mc_ids(Boundary.NEUMANN, k, dist, weights, structure, E_grid, replicas, master_seed, n_jobs, cap)
        for k in needed
    }
    differences: List[float] = []
    stderrs: List[float] = []
    for k in kappas:
        coarse, fine = estimates[k], estimates[k + step]
        gap = np.abs(coarse.mean - fine.mean)
        worst = int(np.argmax(gap))
        differences.append(float(gap[worst]))
        stderrs.append(float(np.nan_to_num(np.hypot(coarse.stderr[worst], fine.stderr[worst]))))
    passed = all(
        later <= earlier + sigma * np.hypot(se_earlier, se_later)
        for earlier, later, se_earlier, se_later in zip(
            differences[:-1], differences[1:], stderrs[:-1], stderrs[1:]
        )
    )
    return ConvergenceTrend(kappas, tuple(differences), tuple(stderrs), sigma, bool(passed))
