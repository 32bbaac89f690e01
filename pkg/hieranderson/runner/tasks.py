"""One task per subcommand.

Every task reads the resolved ``ExperimentConfig``, appends rows to the
experiment's ``RecordWriter`` and returns the verdict of each invariant it
can assert. Tasks only compute; exit codes and files are the app's business.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict

import numpy as np

from ..analysis import (
    KappaRule,
    bracketing_check,
    birkhoff_check,
    continuity_grid,
    convergence_trend,
    covariance_check,
    default_alpha,
    dirichlet_neumann_gap,
    exponent_fit,
    ids_free_curve,
    lower_bound_envelope,
    mc_ids,
    model_dimension,
    pointwise_ratio,
    replica_hamiltonian,
    replica_spectrum,
    sandwich_check,
    spectral_range_violation,
    tail_lower_analytic,
    tail_mc,
    tail_orderings,
    tail_upper_pipeline,
    van_hove_curve,
)
from ..config import TOLERANCES
from ..exceptions import DomainError, ResourceError, ValidationError
from ..operators import (
    Boundary,
    FiniteVolumeHamiltonian,
    averaging_apply,
    exact_free_spectrum,
    ids_free,
    ids_free_finite,
    laplacian_apply,
    spectral_decomposition_apply,
)
from ..randomness import replica_generator, sample_potential, shift_window
from ..spectra import counting_function, eigenvalues_dense, max_eigenvalue_iterative
from ..structure import group_add, group_neg, index_to_point, origin, point_to_index
from .experiment import ExperimentConfig
from .records import RecordWriter

logger = logging.getLogger(__name__)

SPECTRUM_ATOL = float(TOLERANCES["SPECTRUM_ATOL"])
BRACKETING_ATOL = float(TOLERANCES["BRACKETING_ATOL"])
GAP_ATOL = float(TOLERANCES["GAP_ATOL"])
COVARIANCE_ATOL = float(TOLERANCES["COVARIANCE_ATOL"])
MATVEC_RTOL = float(TOLERANCES["MATVEC_RTOL"])
# eigenvalue error of a Lanczos solve with residual tolerance 1e-10
ITERATIVE_ATOL = 1e-8
VAN_HOVE_RTOL = 0.15
# sample spectra written to the CSV (all of them enter the invariants)
SPECTRUM_ROWS = 3
# largest volume on which the group axioms are checked over all triples
GROUP_CHECK_SIZE = 64
DETERMINISM_REPLICAS = 50
DETERMINISM_JOBS = 4


@dataclass
class TaskResult:
    invariants: Dict[str, bool] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)

    def check(self, name: str, ok, **detail) -> bool:
        ok = bool(ok)
        self.invariants[name] = ok
        if detail:
            self.details[name] = detail
        if not ok:
            logger.warning("Invariant %s failed: %s", name, detail)
        return ok

    def merge(self, prefix: str, other: "TaskResult") -> None:
        for name, ok in other.invariants.items():
            self.invariants[f"{prefix}.{name}"] = ok
        for name, detail in other.details.items():
            self.details[f"{prefix}.{name}"] = detail

    @property
    def passed(self) -> bool:
        return all(self.invariants.values())


def _model(config: ExperimentConfig, max_rank=None):
    return config.structure(max_rank), config.weights(), config.dist()


# ---------------------------------------------------------------------------
# spectrum


def run_spectrum(config: ExperimentConfig, writer: RecordWriter, progress: bool = False) -> TaskResult:
    """Exact and dense free spectra, and the spectra of a few sampled potentials."""
    result = TaskResult()
    structure, weights, dist = _model(config)
    kappa, cap = config.kappa, config.dense_cap

    for boundary in config.boundaries():
        tag = boundary.value
        exact = exact_free_spectrum(structure, weights, kappa, boundary)
        for value, multiplicity in exact.pairs():
            writer.record(value, multiplicity / exact.dim, f"exact-free-{tag}", kappa=kappa)
        writer.plot(f"exact-free-{tag}", exact.eigenvalues, exact.multiplicities / exact.dim)

        free = FiniteVolumeHamiltonian(structure, weights, kappa, boundary)
        dense = eigenvalues_dense(free.dense(cap), cap)
        for j, value in enumerate(dense):
            writer.record(value, (j + 1) / len(dense), f"dense-free-{tag}", kappa=kappa)
        deviation = float(np.abs(dense - exact.expand()).max())
        result.check(f"free_spectrum_{tag}", deviation <= SPECTRUM_ATOL, max_deviation=deviation)

    # counting at the levels lam(r) equals the infinite-volume free IDS
    free_dense = eigenvalues_dense(FiniteVolumeHamiltonian(structure, weights, kappa).dense(cap), cap)
    level_errors = [
        abs(counting_function(free_dense, weights.lam(r)) - ids_free(structure, weights, weights.lam(r)))
        for r in range(kappa)
    ]
    result.check("free_ids_at_levels", max(level_errors, default=0.0) <= 1e-14, levels=len(level_errors))

    samples = min(config.bracketing.samples, config.replicas)
    range_violation = 0.0
    gap = 0.0
    for boundary in config.boundaries():
        tag = boundary.value
        for replica in range(samples):
            sample = replica_spectrum(structure, weights, kappa, dist, config.seed, replica, boundary, cap)
            range_violation = max(range_violation, spectral_range_violation(sample.eigenvalues, dist))
            if replica < SPECTRUM_ROWS:
                counts = np.arange(1, len(sample.eigenvalues) + 1) / len(sample.eigenvalues)
                for value, count in zip(sample.eigenvalues, counts):
                    writer.record(value, count, f"sample-{tag}-{replica}", kappa=kappa, replicas=1)
                writer.plot(f"sample-{tag}-{replica}", sample.eigenvalues, counts)
    for replica in range(samples):
        omega = sample_potential(dist, structure.volume(kappa), config.seed, replica).omega
        gap = max(gap, dirichlet_neumann_gap(structure, weights, kappa, omega, cap))
    result.check("spectral_range", range_violation <= SPECTRUM_ATOL, max_violation=range_violation)
    result.check("dirichlet_neumann_gap", gap <= GAP_ATOL, max_deviation=gap, samples=samples)

    H = replica_hamiltonian(structure, weights, kappa, dist, config.seed, 0)
    iterative = max_eigenvalue_iterative(H.apply, H.dim, seed=config.seed, replica=0)
    top = float(eigenvalues_dense(H.dense(cap), cap)[-1])
    result.check(
        "iterative_matches_dense",
        iterative.converged and abs(iterative.value - top) <= ITERATIVE_ATOL,
        iterative=iterative.value,
        dense=top,
        attempts=iterative.attempts,
    )
    return result


# ---------------------------------------------------------------------------
# ids


def run_ids(config: ExperimentConfig, writer: RecordWriter, progress: bool = False) -> TaskResult:
    """Monte Carlo IDS per boundary next to the free closed forms."""
    result = TaskResult()
    structure, weights, dist = _model(config)
    kappa, cap, threads = config.kappa, config.dense_cap, config.threads
    grid = config.energies()

    closed_form = ids_free_curve(structure, weights, grid)
    for E, value in zip(grid, closed_form):
        writer.record(E, value, "free-closed-form", stderr=0.0)
    writer.plot("free-closed-form", grid, closed_form)

    estimates = {}
    for boundary in config.boundaries():
        tag = boundary.value
        estimate = mc_ids(
            boundary, kappa, dist, weights, structure, grid, config.replicas, config.seed, threads, cap, progress
        )
        estimates[boundary] = estimate
        for row in estimate.to_frame().itertuples(index=False):
            writer.record(row.E, row.value, row.method, row.stderr, row.kappa, row.replicas)
        writer.plot(f"mc-{tag}", estimate.energies, estimate.mean)

        finite = np.array([ids_free_finite(structure, weights, kappa, E, boundary) for E in grid])
        for E, value in zip(grid, finite):
            writer.record(E, value, f"free-finite-{tag}", stderr=0.0, kappa=kappa)

        result.check(
            f"ids_in_unit_interval_{tag}",
            np.all((estimate.mean >= 0) & (estimate.mean <= 1)),
        )
        result.check(f"ids_monotone_{tag}", estimate.max_decrease() <= 0, max_decrease=estimate.max_decrease())
        if dist.is_degenerate:
            # a constant potential only shifts the free spectrum
            shifted = np.array([ids_free_finite(structure, weights, kappa, E - dist.mean, boundary) for E in grid])
            result.check(
                f"point_mass_matches_free_{tag}",
                np.allclose(estimate.mean, shifted, rtol=0.0, atol=1e-12),
                max_deviation=float(np.abs(estimate.mean - shifted).max()),
            )

    if len(estimates) == 2:
        sandwich = sandwich_check(estimates[Boundary.DIRICHLET], estimates[Boundary.NEUMANN])
        result.check("sandwich", sandwich.passed, max_excess=sandwich.max_excess, sigma=sandwich.sigma)

    if not dist.is_degenerate:
        kappas = list(range(1, kappa + 1))
        low, high = float(grid.min()), float(grid.max())
        if high > low:
            trend_grid = continuity_grid(weights, kappa + 2, dist, low, high)
            try:
                trend = convergence_trend(
                    kappas, dist, weights, config.structure(kappa + 2), trend_grid,
                    config.replicas, config.seed, n_jobs=threads, cap=cap,
                )
            except ResourceError as e:
                logger.warning("Skipping the convergence trend: %s", e)
            else:
                for k, difference, stderr in zip(trend.kappas, trend.differences, trend.stderrs):
                    writer.record(math.nan, difference, "convergence-trend", stderr, k, config.replicas)
                result.check("convergence_trend", trend.passed, differences=list(trend.differences))
    return result


# ---------------------------------------------------------------------------
# bracketing


def run_bracketing(config: ExperimentConfig, writer: RecordWriter, progress: bool = False) -> TaskResult:
    """Eigenvalue and form bracketing per block rank, the D/N gap, and the sandwich in expectation."""
    result = TaskResult()
    structure, weights, dist = _model(config)
    kappa, cap = config.kappa, config.dense_cap
    samples = config.bracketing.samples
    potentials = [
        sample_potential(dist, structure.volume(kappa), config.seed, replica).omega for replica in range(samples)
    ]

    for r in sorted(set(config.bracketing.ranks) | {kappa}):
        reports = [
            bracketing_check(structure, weights, kappa, r, omega, config.bracketing.psi_count, config.seed, cap)
            for omega in potentials
        ]
        worst = max(report.max_violation for report in reports)
        writer.record(math.nan, worst, f"bracketing-r{r}", kappa=kappa, replicas=samples)
        result.check(f"bracketing_r{r}", worst <= BRACKETING_ATOL, max_violation=worst)

    gap = max(dirichlet_neumann_gap(structure, weights, kappa, omega, cap) for omega in potentials)
    writer.record(math.nan, gap, "dirichlet-neumann-gap", kappa=kappa, replicas=samples)
    result.check("dirichlet_neumann_gap", gap <= GAP_ATOL, max_deviation=gap)

    if dist.is_degenerate:
        grid = config.energies()
    else:
        grid = continuity_grid(weights, kappa, dist, *_grid_window(config))
    neumann = mc_ids(
        Boundary.NEUMANN, kappa, dist, weights, structure, grid, config.replicas, config.seed,
        config.threads, cap, progress,
    )
    dirichlet = mc_ids(
        Boundary.DIRICHLET, kappa, dist, weights, structure, grid, config.replicas, config.seed,
        config.threads, cap, progress,
    )
    sandwich = sandwich_check(dirichlet, neumann)
    writer.record(math.nan, sandwich.max_excess, "sandwich-excess", kappa=kappa, replicas=config.replicas)
    result.check("sandwich", sandwich.passed, max_excess=sandwich.max_excess)
    return result


def _grid_window(config: ExperimentConfig):
    grid = config.energies()
    low, high = float(grid.min()), float(grid.max())
    if high <= low:
        raise ValidationError("the sandwich check needs an energy window with start < stop")
    return low, high


# ---------------------------------------------------------------------------
# tail


def run_tail(config: ExperimentConfig, writer: RecordWriter, progress: bool = False) -> TaskResult:
    """Monte Carlo tails, analytic lower bounds and the Temple upper pipeline."""
    result = TaskResult()
    structure, weights, dist = _model(config)
    cap, threads = config.dense_cap, config.threads
    rule = KappaRule(config.rank_rule.kind, config.rank_rule.alpha, config.kappa)

    mc = tail_mc(
        config.tail.energies, dist, weights, structure, rule, config.replicas, config.seed, threads, cap, progress
    )
    for estimate in mc.estimates:
        writer.record_tail(estimate)
    analytic = [tail_lower_analytic(E, dist, weights, structure) for E in config.tail.energies]
    for estimate in analytic:
        writer.record_tail(estimate)

    try:
        model_dimension(structure, weights)
    except ValidationError as e:
        logger.warning("Skipping the envelope and the Temple pipeline: %s", e)
        result.details["skipped"] = str(e)
    else:
        for E in config.tail.energies:
            writer.record_tail(lower_bound_envelope(E, dist, weights, structure, config.tail.envelope_c2))
        alpha = default_alpha(weights) if config.tail.alpha is None else config.tail.alpha
        for E in config.tail.upper_energies:
            report = tail_upper_pipeline(
                E, alpha, dist, weights, structure, config.replicas, config.seed,
                config.tail.gamma, config.tail.t_max, config.tail.t_points, threads, cap, progress,
            )
            writer.record_tail(report.estimate)
            bound = report.bound_event
            writer.record(bound.E, bound.value, "temple-bound-event", bound.stderr, bound.kappa, bound.replicas)
            result.check(
                f"temple_chain_E{E:g}",
                report.passed,
                chain_violations=report.chain_violations,
                precondition_pass_rate=1 - report.precondition_failures / config.replicas,
                solver_failures=report.solver_failures,
                large_deviations=report.diagnostics.summary(),
            )

    ordering = tail_orderings(mc, analytic)
    result.check("dirichlet_above_neumann", ordering.upper_above_lower)
    result.check("analytic_below_mc", ordering.analytic_below_mc, compared=ordering.compared)
    result.check("trial_function_bound", mc.trial_violations == 0, violations=mc.trial_violations)
    writer.plot("tail-neumann", mc.details["E"], mc.details["neumann"])
    writer.plot("tail-dirichlet", mc.details["E"], mc.details["dirichlet"])
    return result


# ---------------------------------------------------------------------------
# exponent


def run_exponent(config: ExperimentConfig, writer: RecordWriter, progress: bool = False) -> TaskResult:
    """Van Hove fit of the free tail and a Lifshits fit of the analytic lower bound."""
    result = TaskResult()
    structure, weights, dist = _model(config)
    exponents = range(config.exponent.m_min, config.exponent.m_max + 1)
    try:
        half = model_dimension(structure, weights).d_s / 2
    except ValidationError:
        half = None

    curve = van_hove_curve(structure, weights, exponents)
    for E, value in curve:
        writer.record(E, value, "van_hove-curve", stderr=0.0)
    writer.plot("van_hove-curve", [E for E, _ in curve], [v for _, v in curve])
    fit = exponent_fit(curve, "van_hove", target=half)
    writer.record(math.nan, fit.slope, "van_hove-slope", fit.slope_stderr)
    result.details["van_hove"] = {
        "slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual, "target": half,
    }
    middle = 2.0 ** -((config.exponent.m_min + config.exponent.m_max) // 2)
    ratio = pointwise_ratio(middle, 1 - ids_free(structure, weights, 1 - middle))
    writer.record(middle, ratio, "van_hove-ratio")
    if half is not None:
        result.check("van_hove_slope", fit.relative_error <= VAN_HOVE_RTOL, relative_error=fit.relative_error)

    if config.exponent.lifshits:
        energies = [2.0 ** -m for m in exponents]
        bounds = [tail_lower_analytic(E, dist, weights, structure) for E in energies]
        for bound in bounds:
            writer.record_tail(bound)
        try:
            lifshits = exponent_fit(
                [(b.E, b.log_value) for b in bounds], "lifshits",
                target=None if half is None else -half, log_domain=True,
            )
        except DomainError as e:
            logger.warning("Lifshits fit skipped: %s", e)
        else:
            writer.record(math.nan, lifshits.slope, "lifshits-slope", lifshits.slope_stderr)
            result.details["lifshits"] = {
                "slope": lifshits.slope, "residual": lifshits.residual, "target": lifshits.target,
            }
    return result


# ---------------------------------------------------------------------------
# ergodic


def run_ergodic(config: ExperimentConfig, writer: RecordWriter, progress: bool = False) -> TaskResult:
    """Covariance of the operator under shifts and Birkhoff averages of the origin value."""
    result = TaskResult()
    ergodic = config.ergodic
    weights, dist = config.weights(), config.dist()
    R, kappa = ergodic.total_rank, ergodic.kappa
    inner = config.structure(R)
    volume = inner.volume(R)

    worst = 0.0
    composition_ok = True
    shifts = [index_to_point(inner, k) for k in range(volume)]
    for replica in range(ergodic.samples):
        omega = sample_potential(dist, volume, config.seed, replica).omega
        for x in shifts:
            worst = max(worst, covariance_check(inner, weights, kappa, R, omega, x, config.dense_cap))
        x, y = shifts[replica % volume], shifts[(3 * replica + 1) % volume]
        twice = shift_window(inner, shift_window(inner, omega, x, R), y, R)
        composition_ok &= bool(np.array_equal(twice, shift_window(inner, omega, group_add(inner, x, y), R)))
    writer.record(math.nan, worst, "covariance", kappa=kappa, replicas=ergodic.samples)
    result.check("covariance", worst <= COVARIANCE_ATOL, max_deviation=worst)
    result.check("shift_composition", composition_ok)

    report = birkhoff_check(
        config.model.structure(ergodic.birkhoff_rank), dist, ergodic.birkhoff_rank,
        ergodic.birkhoff_seeds, config.seed,
    )
    for average in report.averages:
        writer.record(math.nan, average, "birkhoff", report.sigma, ergodic.birkhoff_rank, 1)
    result.check(
        "birkhoff",
        report.passed,
        pass_count=report.pass_count,
        required=report.required,
        expected=report.expected,
        sigma=report.sigma,
    )
    return result


# ---------------------------------------------------------------------------
# selfcheck


def structural_checks(config: ExperimentConfig) -> TaskResult:
    """Exact identities of the structure, the weights and the operators."""
    result = TaskResult()
    structure, weights, dist = _model(config)
    kappa = config.kappa
    size = structure.volume(kappa)
    rng = replica_generator(config.seed, 0)

    points = [index_to_point(structure, k) for k in range(size)]
    result.check("enumeration_bijective", all(point_to_index(structure, p) == k for k, p in enumerate(points)))
    subset = points if size <= GROUP_CHECK_SIZE else [points[k] for k in rng.choice(size, 16, replace=False)]
    zero = origin(structure)
    group_ok = all(
        group_add(structure, group_add(structure, a, b), c) == group_add(structure, a, group_add(structure, b, c))
        for a, b, c in itertools.product(subset, repeat=3)
    )
    group_ok &= all(
        group_add(structure, a, zero) == a
        and group_add(structure, a, group_neg(structure, a)) == zero
        and group_add(structure, a, b) == group_add(structure, b, a)
        for a, b in itertools.product(subset, repeat=2)
    )
    result.check("group_axioms", group_ok)

    lam_error = max(
        abs(weights.lam(r) - math.fsum(weights.p(s) for s in range(r + 1))) for r in range(51)
    )
    result.check("weights_closed_form", lam_error <= 1e-14, max_error=lam_error)

    psi = rng.standard_normal(size)
    projection_error = max(
        float(np.abs(
            averaging_apply(structure, s, kappa, averaging_apply(structure, t, kappa, psi))
            - averaging_apply(structure, max(s, t), kappa, psi)
        ).max())
        for s in range(kappa + 1)
        for t in range(kappa + 1)
    )
    result.check("projection_algebra", projection_error <= 1e-12, max_error=projection_error)

    decomposition_error = float(np.abs(
        spectral_decomposition_apply(structure, weights, kappa, psi) - laplacian_apply(structure, weights, kappa, psi)
    ).max())
    result.check("spectral_decomposition", decomposition_error <= 1e-12, max_error=decomposition_error)

    matvec_error = 0.0
    for replica in range(10):
        for boundary in Boundary:
            H = replica_hamiltonian(structure, weights, kappa, dist, config.seed, replica, boundary)
            vector = rng.standard_normal(size)
            expected = H.dense(config.dense_cap) @ vector
            error = np.linalg.norm(H.apply(vector) - expected) / max(np.linalg.norm(expected), 1e-300)
            matvec_error = max(matvec_error, float(error))
    result.check("fast_matvec", matvec_error <= MATVEC_RTOL, max_relative_error=matvec_error)
    return result


def determinism_check(config: ExperimentConfig) -> TaskResult:
    """The same replicas at one thread and at several give identical estimates."""
    result = TaskResult()
    structure, weights, dist = _model(config)
    replicas = min(config.replicas, DETERMINISM_REPLICAS)
    grid = config.energies()
    runs = [
        mc_ids(Boundary.NEUMANN, config.kappa, dist, weights, structure, grid, replicas, config.seed, jobs, config.dense_cap)
        for jobs in (1, DETERMINISM_JOBS)
    ]
    same = np.array_equal(runs[0].mean, runs[1].mean) and np.array_equal(
        runs[0].stderr, runs[1].stderr, equal_nan=True
    )
    result.check("thread_count_independent", same, replicas=replicas, jobs=[1, DETERMINISM_JOBS])
    return result


def run_selfcheck(config: ExperimentConfig, writer: RecordWriter, progress: bool = False) -> TaskResult:
    """Every task plus the exact identities and the determinism check."""
    result = TaskResult()
    result.merge("structure", structural_checks(config))
    for name, task in TASKS.items():
        if name != "selfcheck":
            result.merge(name, task(config, writer, progress))
    result.merge("determinism", determinism_check(config))
    return result


TASKS: Dict[str, Callable[[ExperimentConfig, RecordWriter, bool], TaskResult]] = {
    "spectrum": run_spectrum,
    "ids": run_ids,
    "bracketing": run_bracketing,
    "tail": run_tail,
    "exponent": run_exponent,
    "ergodic": run_ergodic,
    "selfcheck": run_selfcheck,
}


def run_task(name: str, config: ExperimentConfig, writer: RecordWriter, progress: bool = False) -> TaskResult:
    try:
        logger.info("Starting %s for experiment %s", name, config.name)
        result = TASKS[name](config, writer, progress)
        failed = [key for key, ok in result.invariants.items() if not ok]
        logger.info(
            "%s completed: %d invariants, %d failed", name, len(result.invariants), len(failed)
        )
        return result
    except Exception as e:
        logger.error(f"Error during {name} for experiment {config.name}: {e}", exc_info=True)
        raise
