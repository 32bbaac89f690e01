import math

import numpy as np
import pytest

from hieranderson.analysis import (
    KappaRule,
    TailEstimate,
    TailMethod,
    default_alpha,
    large_deviation_diagnostics,
    lower_bound_envelope,
    model_dimension,
    tail_lower_analytic,
    tail_mc,
    tail_orderings,
    tail_upper_pipeline,
)
from hieranderson.exceptions import DomainError, ValidationError
from hieranderson.operators import ids_free_finite
from hieranderson.randomness import SingleSiteDistribution
from hieranderson.structure import HierarchicalStructure


def test_analytic_lower_bound_uniform(binary, rho2, uniform):
    estimate = tail_lower_analytic(1 / 8, uniform, rho2, binary)
    assert estimate.kappa == 5
    assert estimate.method is TailMethod.ANALYTIC_LOWER
    assert estimate.log_value == pytest.approx(-math.log(32) + 32 * math.log(1 / 16))
    assert estimate.interval() == (estimate.value, estimate.value)


def test_analytic_lower_bound_two_point(binary, rho2):
    dist = SingleSiteDistribution.two_point(-1.0, 0.0, 0.3)
    estimate = tail_lower_analytic(0.5, dist, rho2, binary)
    assert estimate.kappa == 3
    assert estimate.value == pytest.approx(0.3 ** 8 / 8)


def test_analytic_lower_bound_is_frame_independent(binary, rho2):
    shifted = SingleSiteDistribution.uniform(1.0, 2.0)
    a = tail_lower_analytic(0.25, shifted, rho2, binary)
    b = tail_lower_analytic(0.25, SingleSiteDistribution.uniform(-1.0, 0.0), rho2, binary)
    assert a.log_value == pytest.approx(b.log_value)


def test_tail_estimate_from_value():
    zero = TailEstimate.from_value(0.1, "MC-Neumann-lower", 0.0)
    assert zero.log_value == -math.inf
    assert zero.value == 0.0
    with pytest.raises(ValidationError):
        TailEstimate.from_value(0.1, "MC-Neumann-lower", 1.5)
    mc = TailEstimate.from_value(0.1, TailMethod.MC_DIRICHLET_UPPER, 0.5, stderr=0.1)
    assert mc.interval(sigma=3) == pytest.approx((0.2, 0.8))
    assert mc.log10_value == pytest.approx(math.log10(0.5))


def test_kappa_rule(binary, rho2):
    assert KappaRule().resolve(1 / 8, rho2, binary) == 5
    assert KappaRule("k_of_E", alpha=1.0).resolve(1 / 8, rho2, binary) == 3
    assert KappaRule("fixed", kappa=2).resolve(0.3, rho2, binary) == 2
    with pytest.raises(DomainError):
        KappaRule("k_of_E").resolve(1 / 8, rho2, binary)
    with pytest.raises(ValidationError):
        KappaRule("fixed")
    with pytest.raises(ValidationError):
        KappaRule("nearest")
    with pytest.raises(ValidationError):
        KappaRule("k_of_E", alpha=-1.0)


def test_default_alpha(rho2):
    assert default_alpha(rho2) == 7.0


def test_model_dimension_needs_a_homogeneous_structure(mixed, rho2):
    with pytest.raises(ValidationError):
        model_dimension(mixed, rho2)


def test_upper_pipeline_free_operator_is_tight(binary, rho2):
    report = tail_upper_pipeline(1 / 8, 1.0, SingleSiteDistribution.point_mass(0.0), rho2, binary, 3, 1, n_jobs=1)
    assert report.estimate.kappa == 3
    assert report.truncation_floor == pytest.approx(-1 / 24)
    assert report.e1 == pytest.approx(7 / 8)
    np.testing.assert_allclose(report.records["temple"], 1.0, atol=1e-14)
    np.testing.assert_allclose(report.records["e_max"], 1.0, atol=1e-14)
    np.testing.assert_allclose(report.records["analytic_bound"], 1.0)
    assert report.passed
    assert report.estimate.value == 1.0


def test_upper_pipeline_uniform_chain(binary, rho2, uniform):
    report = tail_upper_pipeline(1 / 8, 1.0, uniform, rho2, binary, 40, 20110808, n_jobs=1)
    assert report.precondition_failures == 0
    assert report.chain_violations == 0
    assert report.solver_failures == 0
    assert len(report.records) == 40
    assert report.estimate.method is TailMethod.TEMPLE_UPPER
    assert 0.0 <= report.estimate.value <= 1.0


def test_large_deviation_diagnostics(binary, rho2, uniform):
    diagnostics = large_deviation_diagnostics(1 / 64, 7.0, uniform, rho2, binary)
    assert diagnostics.kappa == 3
    assert diagnostics.gamma == pytest.approx(-1 / 24)
    assert diagnostics.q == pytest.approx(1 / 24)
    assert diagnostics.z == pytest.approx(1 / 7)
    assert diagnostics.f_t0 > 0
    assert all(diagnostics.clauses.values())
    assert diagnostics.summary()["C1"] == pytest.approx(1.0)


def test_lower_bound_envelope(binary, rho2, uniform):
    envelope = lower_bound_envelope(1 / 64, uniform, rho2, binary)
    assert envelope.method is TailMethod.ANALYTIC_ENVELOPE
    assert envelope.log_value < 0
    assert envelope.interval()[0] == envelope.interval()[1]


def test_tail_mc_free_reduction(binary, rho2):
    report = tail_mc([0.25], SingleSiteDistribution.point_mass(0.0), rho2, binary, KappaRule(), 3, 1, n_jobs=1)
    (neumann,) = report.by_method(TailMethod.MC_NEUMANN_LOWER)
    assert neumann.kappa == 4
    assert neumann.value == pytest.approx(1 - ids_free_finite(binary, rho2, 4, 0.75))
    assert neumann.value == pytest.approx(1 / 8)


def test_tail_mc_orderings(binary, rho2, uniform):
    report = tail_mc([0.25, 0.5], uniform, rho2, binary, KappaRule(), 30, 4, n_jobs=1)
    assert len(report.estimates) == 4
    assert report.trial_violations == 0
    analytic = [tail_lower_analytic(E, uniform, rho2, binary) for E in (0.25, 0.5)]
    ordering = tail_orderings(report, analytic)
    assert ordering.upper_above_lower
    assert ordering.analytic_below_mc
    for E in (0.25, 0.5):
        row = report.details[report.details["E"] == E].iloc[0]
        assert row["dirichlet"] >= row["neumann"]


def test_tail_mc_materializes_ranks_beyond_the_structure(rho2, uniform):
    small = HierarchicalStructure.homogeneous(2, 2)
    report = tail_mc([0.25], uniform, rho2, small, KappaRule(), 2, 4, n_jobs=1)
    assert report.details["kappa"].tolist() == [4]
