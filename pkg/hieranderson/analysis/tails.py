"""Bounds and estimates for the IDS tail ``1 - N(1 + v_plus - E)`` at the upper edge.

All computations work in the frame ``v_plus = 0``: the single-site law is
shifted before sampling and ``E`` is the distance below the upper spectral
edge ``1``. Probabilities are carried as natural logarithms because the
analytic lower bound underflows doubles already at moderate ``E``.

* upper bound: truncate the potential at ``-p_k/3`` with ``k = k(E)``, apply
  Temple's inequality with the constant trial vector and compare with the
  true top eigenvalue of the Dirichlet restriction;
* lower bound: with ``K = K(E)`` the event "every site of ``Q_K`` exceeds
  ``-E/2``" pushes the Neumann top eigenvalue above ``1 - E``.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import DENSE_CAP, SIGMA_ORDERING, TOLERANCES
from ..exceptions import PreconditionError, ValidationError
from ..operators import Boundary, FiniteVolumeHamiltonian
from ..randomness import SingleSiteDistribution, sample_potential
from ..spectra import counting_function, eigenvalues_dense, max_eigenvalue_iterative, temple_bound, temple_moments
from ..structure import (
    HierarchicalStructure,
    SpectralDimension,
    WeightSequence,
    K_of_E,
    decay_constants,
    k_of_E,
    spectral_dimension,
)
from .replicas import check_dense_cap, mean_and_stderr, replica_spectrum, run_replicas, warn_if_degenerate

logger = logging.getLogger(__name__)

TEMPLE_ATOL = float(TOLERANCES["SPECTRUM_ATOL"])


class TailMethod(str, Enum):
    MC_NEUMANN_LOWER = "MC-Neumann-lower"
    MC_DIRICHLET_UPPER = "MC-Dirichlet-upper"
    ANALYTIC_LOWER = "analytic-lower"
    ANALYTIC_ENVELOPE = "analytic-envelope"
    TEMPLE_UPPER = "temple-upper"


@dataclass(frozen=True)
class TailEstimate:
    """Estimate of ``1 - N(1 - E)`` stored as ``log_value`` (``-inf`` for zero)."""

    E: float
    method: TailMethod
    log_value: float
    stderr: float = 0.0
    kappa: int = 0
    replicas: int = 0

    @classmethod
    def from_value(cls, E, method, value, stderr=0.0, kappa=0, replicas=0) -> "TailEstimate":
        if not 0 <= value <= 1 + 1e-12:
            raise ValidationError(f"tail estimate {value!r} outside [0, 1]")
        log_value = math.log(value) if value > 0 else -math.inf
        return cls(float(E), TailMethod(method), min(log_value, 0.0), float(stderr), int(kappa), int(replicas))

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    @property
    def log10_value(self) -> float:
        return self.log_value / math.log(10)

    @property
    def is_deterministic(self) -> bool:
        return self.method in (TailMethod.ANALYTIC_LOWER, TailMethod.ANALYTIC_ENVELOPE)

    def interval(self, sigma: float = SIGMA_ORDERING) -> Tuple[float, float]:
        spread = 0.0 if self.is_deterministic else sigma * self.stderr
        return max(0.0, self.value - spread), min(1.0, self.value + spread)


# ---------------------------------------------------------------------------
# Rank selection


def model_dimension(structure: HierarchicalStructure, weights: WeightSequence) -> SpectralDimension:
    """Spectral dimension of a homogeneous structure with decay base ``weights.rho``."""
    if not structure.is_homogeneous:
        raise ValidationError("the spectral dimension needs a homogeneous structure")
    if weights.rho is None:
        raise ValidationError("the spectral dimension needs a decay base rho")
    return spectral_dimension(structure.degree, weights.rho)


def decay_lower_constant(weights: WeightSequence, rho: float, kappa: int) -> float:
    if weights.kind == "geometric":
        return weights.rho - 1
    return decay_constants(weights, rho, range(1, max(kappa, 1) + 1)).c1


def default_alpha(weights: WeightSequence) -> float:
    """Smallest integer offset above ``6 / C_1``."""
    if weights.rho is None:
        raise ValidationError("default alpha needs a decay base rho")
    return 6 / (weights.rho - 1) + 1


@dataclass(frozen=True)
class KappaRule:
    """How the finite-volume rank follows ``E``: ``k_of_E`` (with ``alpha``), ``K_of_E`` or ``fixed``."""

    kind: str = "K_of_E"
    alpha: Optional[float] = None
    kappa: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("k_of_E", "K_of_E", "fixed"):
            raise ValidationError(f"unknown rank rule {self.kind!r}")
        if self.kind == "fixed" and (self.kappa is None or self.kappa < 0):
            raise ValidationError("a fixed rank rule needs kappa >= 0")
        if self.alpha is not None and not self.alpha > 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")

    def resolve(self, E: float, weights: WeightSequence, structure: HierarchicalStructure) -> int:
        if self.kind == "fixed":
            return int(self.kappa)
        if self.kind == "K_of_E":
            return K_of_E(weights, E)
        alpha = default_alpha(weights) if self.alpha is None else self.alpha
        return k_of_E(model_dimension(structure, weights), E, alpha)


def _materialized(structure: HierarchicalStructure, kappa: int) -> HierarchicalStructure:
    if kappa <= structure.max_rank:
        return structure
    return structure.with_max_rank(kappa)


# ---------------------------------------------------------------------------
# Analytic lower bounds


def tail_lower_analytic(
    E: float, dist: SingleSiteDistribution, weights: WeightSequence, structure: HierarchicalStructure
) -> TailEstimate:
    """``|Q_K|^-1 P_0(omega > -E/2)^|Q_K|`` with ``K = K_of_E(E)``."""
    dist0, _ = dist.normalized()
    K = K_of_E(weights, E)
    volume = structure.volume(K)
    q = dist0.prob_above(-E / 2)
    log_value = -math.log(volume) + (volume * math.log(q) if q > 0 else -math.inf)
    return TailEstimate(E=float(E), method=TailMethod.ANALYTIC_LOWER, log_value=log_value, kappa=K)


def lower_bound_envelope(
    E: float,
    dist: SingleSiteDistribution,
    weights: WeightSequence,
    structure: HierarchicalStructure,
    c2: Optional[float] = None,
) -> TailEstimate:
    """Closed-form envelope ``C_l^-1 E^(d_s/2) exp(-C_l E^(-d_s/2) g(E))``.

    ``g(E) = -ln P_0(omega > -E/2)`` and ``C_l = (2 C_2 rho / (rho - 1))^(d_s/2)``;
    valid for ``E`` small enough.
    """
    dim = model_dimension(structure, weights)
    dist0, _ = dist.normalized()
    c2 = weights.rho - 1 if c2 is None else c2
    half = dim.d_s / 2
    c_l = (2 * c2 * dim.rho / (dim.rho - 1)) ** half
    q = dist0.prob_above(-E / 2)
    g = -math.log(q) if q > 0 else math.inf
    log_value = -math.log(c_l) + half * math.log(E) - c_l * E ** (-half) * g
    return TailEstimate(E=float(E), method=TailMethod.ANALYTIC_ENVELOPE, log_value=min(log_value, 0.0))


# ---------------------------------------------------------------------------
# Large deviation step of the upper bound


@dataclass(frozen=True, eq=False)
class LargeDeviationDiagnostics:
    E: float
    alpha: float
    kappa: int
    p_kappa: float
    gamma: float
    q: float
    c1: float
    z: float
    t_grid: np.ndarray
    f_values: np.ndarray
    t0: float
    f_t0: float
    log_chernoff: float
    c_u: float
    clauses: Dict[str, bool] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "E": self.E,
            "alpha": self.alpha,
            "kappa": self.kappa,
            "p_kappa": self.p_kappa,
            "gamma": self.gamma,
            "q": self.q,
            "C1": self.c1,
            "z": self.z,
            "t0": self.t0,
            "f_t0": self.f_t0,
            "log_chernoff": self.log_chernoff,
            "C_u": self.c_u,
            "clauses": dict(self.clauses),
        }


def _log_bernoulli_mgf(q: float, t: np.ndarray) -> np.ndarray:
    """``ln(1 - q + q e^t)``."""
    if q <= 0:
        return np.zeros_like(t)
    if q >= 1:
        return t.copy()
    return np.logaddexp(math.log1p(-q), math.log(q) + t)


def large_deviation_diagnostics(
    E: float,
    alpha: float,
    dist: SingleSiteDistribution,
    weights: WeightSequence,
    structure: HierarchicalStructure,
    gamma: Optional[float] = None,
    t_max: float = 10.0,
    t_points: int = 1001,
) -> LargeDeviationDiagnostics:
    """Bernoulli coarse-graining of the truncated potential and its Chernoff bound.

    ``eta_x = 1{omega_x in ]gamma, 0]}`` has mean ``q``; the Chernoff exponent
    ``f(t) = t z - ln E[e^(t eta)]`` is scanned on ``[0, t_max]`` and the
    "for r large enough" clauses are reported, not enforced.
    """
    dim = model_dimension(structure, weights)
    dist0, _ = dist.normalized()
    kappa = k_of_E(dim, E, alpha)
    p_kappa = weights.p(kappa)
    gamma = -p_kappa / 3 if gamma is None else float(gamma)
    q = dist0.prob_interval(gamma, 0.0)
    c1 = decay_lower_constant(weights, dim.rho, kappa)
    z = 1 - 6 / (alpha * c1)

    t_grid = np.linspace(0.0, t_max, t_points)
    f_values = t_grid * z - _log_bernoulli_mgf(q, t_grid)
    best = int(np.argmax(f_values))
    t0, f_t0 = float(t_grid[best]), float(f_values[best])
    volume = structure.volume(kappa)
    clauses = {
        "alpha_admissible": alpha > 6 / c1,
        "z_positive": z > 0,
        "q_in_open_unit_interval": 0 < q < 1,
        "q_below_z": q < z,
        "gamma_inside_support": dist0.v_minus < gamma < 0,
        "gamma_below_truncation": gamma <= -p_kappa / 3 + 1e-15,
        "decay_lower_bound": p_kappa >= c1 * alpha * E,
        "f_positive": f_t0 > 0,
    }
    return LargeDeviationDiagnostics(
        E=float(E),
        alpha=float(alpha),
        kappa=kappa,
        p_kappa=p_kappa,
        gamma=gamma,
        q=q,
        c1=c1,
        z=z,
        t_grid=t_grid,
        f_values=f_values,
        t0=t0,
        f_t0=f_t0,
        log_chernoff=min(0.0, -volume * f_t0),
        c_u=f_t0 * alpha ** (-dim.d_s / 2) / dim.n,
        clauses=clauses,
    )


# ---------------------------------------------------------------------------
# Temple pipeline (upper bound)


@dataclass(frozen=True, eq=False)
class UpperTailReport:
    estimate: TailEstimate
    bound_event: TailEstimate
    diagnostics: LargeDeviationDiagnostics
    records: pd.DataFrame
    truncation_floor: float
    e1: float

    @property
    def precondition_failures(self) -> int:
        return int((~self.records["precondition_ok"]).sum())

    @property
    def chain_violations(self) -> int:
        checked = self.records[self.records["precondition_ok"]]
        return int((~checked["chain_ok"]).sum())

    @property
    def solver_failures(self) -> int:
        return int((~self.records["converged"]).sum())

    @property
    def passed(self) -> bool:
        return self.chain_violations == 0


def top_eigenvalue(
    H: FiniteVolumeHamiltonian, cap: Optional[int], seed: int, replica: int
) -> Tuple[float, bool]:
    """``E_max`` by dense diagonalization under the cap, by Lanczos above it."""
    cap = DENSE_CAP if cap is None else cap
    if H.dim <= cap:
        return float(eigenvalues_dense(H.dense(cap), cap)[-1]), True
    result = max_eigenvalue_iterative(H.apply, H.dim, seed=seed, replica=replica)
    return result.value, result.converged


def tail_upper_pipeline(
    E: float,
    alpha: float,
    dist: SingleSiteDistribution,
    weights: WeightSequence,
    structure: HierarchicalStructure,
    replicas: int,
    master_seed: int,
    gamma: Optional[float] = None,
    t_max: float = 10.0,
    t_points: int = 1001,
    n_jobs: Optional[int] = None,
    cap: Optional[int] = None,
    progress: bool = False,
) -> UpperTailReport:
    """Per-replica check of ``E_max(H_D) <= E_max(H~_D) <= Temple <= 1 + mean(V)/2``.

    ``H~_D`` carries the truncated potential ``V = max(omega, -p_k/3)`` and
    ``E_1 = 1 - p_k`` is the analytic second-highest free Dirichlet level.
    """
    if not 0 < E:
        raise ValidationError(f"E must be positive, got {E}")
    dist0, _ = dist.normalized()
    warn_if_degenerate(dist0)
    dim_model = model_dimension(structure, weights)
    kappa = k_of_E(dim_model, E, alpha)
    inner = _materialized(structure, kappa)
    volume = inner.volume(kappa)
    p_kappa = weights.p(kappa)
    floor = -p_kappa / 3
    e1 = 1 - p_kappa
    trial = np.ones(volume)

    def one(replica):
        omega = sample_potential(dist0, volume, master_seed, replica).omega
        truncated = np.maximum(omega, floor)
        H = FiniteVolumeHamiltonian(inner, weights, kappa, Boundary.DIRICHLET, omega)
        H_truncated = H.with_potential(truncated)
        mean_v = float(truncated.mean())
        analytic = 1 + mean_v / 2
        try:
            temple = temple_bound(temple_moments(H_truncated.apply, trial, e1))
            precondition_ok, deficit = True, 0.0
        except PreconditionError as error:
            temple, precondition_ok, deficit = math.nan, False, error.deficit
        e_max, converged_a = top_eigenvalue(H, cap, master_seed, replica)
        e_truncated, converged_b = top_eigenvalue(H_truncated, cap, master_seed, replica)
        chain_ok = precondition_ok and (
            e_max <= e_truncated + TEMPLE_ATOL
            and e_truncated <= temple + TEMPLE_ATOL
            and temple <= analytic + TEMPLE_ATOL
        )
        return {
            "replica": replica,
            "mean_v": mean_v,
            "e_max": e_max,
            "e_max_truncated": e_truncated,
            "temple": temple,
            "analytic_bound": analytic,
            "precondition_ok": precondition_ok,
            "deficit": deficit,
            "chain_ok": bool(chain_ok),
            "converged": bool(converged_a and converged_b),
            "event": e_max > 1 - E,
            "bound_event": mean_v > -2 * E,
        }

    records = pd.DataFrame(run_replicas(one, replicas, n_jobs, progress, desc=f"temple E={E:g}"))
    frequency = float(records["event"].mean())
    bound_frequency = float(records["bound_event"].mean())
    report = UpperTailReport(
        estimate=TailEstimate.from_value(
            E, TailMethod.TEMPLE_UPPER, frequency, _binomial_stderr(frequency, replicas), kappa, replicas
        ),
        bound_event=TailEstimate.from_value(
            E, TailMethod.TEMPLE_UPPER, bound_frequency, _binomial_stderr(bound_frequency, replicas),
            kappa, replicas,
        ),
        diagnostics=large_deviation_diagnostics(E, alpha, dist0, weights, structure, gamma, t_max, t_points),
        records=records,
        truncation_floor=floor,
        e1=e1,
    )
    if report.precondition_failures:
        logger.warning("Temple precondition failed for %d of %d replicas", report.precondition_failures, replicas)
    if report.chain_violations:
        logger.warning("Temple chain violated for %d replicas at E=%g", report.chain_violations, E)
    return report


def _binomial_stderr(p: float, count: int) -> float:
    return math.sqrt(p * (1 - p) / count) if count > 0 else math.nan


# ---------------------------------------------------------------------------
# Monte Carlo tails


@dataclass(frozen=True, eq=False)
class TailMcReport:
    estimates: List[TailEstimate]
    details: pd.DataFrame

    def by_method(self, method: TailMethod) -> List[TailEstimate]:
        return [estimate for estimate in self.estimates if estimate.method is TailMethod(method)]

    @property
    def trial_violations(self) -> int:
        return int(self.details["trial_violations"].sum())


def tail_mc(
    E_grid: Sequence[float],
    dist: SingleSiteDistribution,
    weights: WeightSequence,
    structure: HierarchicalStructure,
    kappa_rule: KappaRule,
    replicas: int,
    master_seed: int,
    n_jobs: Optional[int] = None,
    cap: Optional[int] = None,
    progress: bool = False,
) -> TailMcReport:
    """Neumann (lower) and Dirichlet (upper) Monte Carlo estimates of ``1 - N(1 - E)``.

    One dense Neumann diagonalization per replica and rank serves both: the
    Dirichlet spectrum is the Neumann one shifted by ``tail(kappa)``.
    """
    dist0, _ = dist.normalized()
    warn_if_degenerate(dist0)
    energies = [float(E) for E in E_grid]
    ranks = {E: kappa_rule.resolve(E, weights, structure) for E in energies}
    samples = {}
    for kappa in sorted(set(ranks.values())):
        inner = _materialized(structure, kappa)
        check_dense_cap(inner, kappa, cap)
        samples[kappa] = run_replicas(
            lambda replica, inner=inner, kappa=kappa: replica_spectrum(
                inner, weights, kappa, dist0, master_seed, replica, Boundary.NEUMANN, cap
            ),
            replicas,
            n_jobs,
            progress,
            desc=f"tail k={kappa}",
        )

    estimates: List[TailEstimate] = []
    rows = []
    for E in energies:
        kappa = ranks[E]
        tail = weights.tail(kappa)
        threshold = 1 - E
        spectra = samples[kappa]
        neumann = np.array([1 - counting_function(s.eigenvalues, threshold) for s in spectra])
        dirichlet = np.array([1 - counting_function(s.eigenvalues + tail, threshold) for s in spectra])
        e_max = np.array([s.eigenvalues[-1] for s in spectra])
        trial = np.array([weights.lam(kappa) + s.omega.mean() for s in spectra])
        n_mean, n_err = mean_and_stderr(neumann)
        d_mean, d_err = mean_and_stderr(dirichlet)
        estimates.append(
            TailEstimate.from_value(E, TailMethod.MC_NEUMANN_LOWER, float(n_mean), float(n_err), kappa, replicas)
        )
        estimates.append(
            TailEstimate.from_value(E, TailMethod.MC_DIRICHLET_UPPER, float(d_mean), float(d_err), kappa, replicas)
        )
        rows.append(
            {
                "E": E,
                "kappa": kappa,
                "neumann": float(n_mean),
                "neumann_stderr": float(n_err),
                "dirichlet": float(d_mean),
                "dirichlet_stderr": float(d_err),
                "emax_frequency": float(np.mean(e_max > threshold)),
                "trial_violations": int(np.sum(e_max < trial - TEMPLE_ATOL)),
            }
        )
    return TailMcReport(estimates=estimates, details=pd.DataFrame(rows))


@dataclass(frozen=True)
class TailOrdering:
    upper_above_lower: bool
    analytic_below_mc: bool
    compared: int


def tail_orderings(
    mc: TailMcReport,
    analytic: Iterable[TailEstimate],
    sigma: float = SIGMA_ORDERING,
    floor: float = 1e-6,
) -> TailOrdering:
    """Dirichlet >= Neumann within ``sigma``; analytic <= Neumann where both exceed ``floor``."""
    neumann = {e.E: e for e in mc.by_method(TailMethod.MC_NEUMANN_LOWER)}
    dirichlet = {e.E: e for e in mc.by_method(TailMethod.MC_DIRICHLET_UPPER)}
    upper_ok = all(
        dirichlet[E].value >= neumann[E].value - sigma * math.hypot(dirichlet[E].stderr, neumann[E].stderr)
        for E in neumann
    )
    compared = 0
    analytic_ok = True
    for bound in analytic:
        mc_value = neumann.get(bound.E)
        if mc_value is None or bound.value <= floor or mc_value.value <= floor:
            continue
        compared += 1
        analytic_ok &= bound.value <= mc_value.value + sigma * mc_value.stderr
    return TailOrdering(upper_above_lower=bool(upper_ok), analytic_below_mc=bool(analytic_ok), compared=compared)
