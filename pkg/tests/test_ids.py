import numpy as np
import pytest

from hieranderson.analysis import (
    continuity_grid,
    convergence_trend,
    energy_grid,
    ids_free_curve,
    mc_ids,
    replica_spectrum,
    sandwich_check,
    spectral_range_violation,
    spectrum_bounds,
)
from hieranderson.exceptions import ResourceError, ValidationError
from hieranderson.operators import Boundary, ids_free_finite
from hieranderson.randomness import SingleSiteDistribution


def test_point_mass_reproduces_the_shifted_free_counting(binary, rho2):
    dist = SingleSiteDistribution.point_mass(-0.3)
    grid = continuity_grid(rho2, 3, dist, -0.5, 1.0)
    estimate = mc_ids(Boundary.NEUMANN, 3, dist, rho2, binary, grid, 3, 1, n_jobs=1)
    expected = [ids_free_finite(binary, rho2, 3, E + 0.3) for E in grid]
    np.testing.assert_allclose(estimate.mean, expected, atol=1e-15)
    np.testing.assert_allclose(estimate.stderr, 0.0, atol=1e-15)


def test_dirichlet_below_neumann(binary, rho2, uniform):
    grid = energy_grid("linear", -1.0, 1.0, 41)
    neumann = mc_ids(Boundary.NEUMANN, 3, uniform, rho2, binary, grid, 20, 8, n_jobs=1)
    dirichlet = mc_ids(Boundary.DIRICHLET, 3, uniform, rho2, binary, grid, 20, 8, n_jobs=1)
    report = sandwich_check(dirichlet, neumann)
    assert report.passed
    assert np.all(dirichlet.mean <= neumann.mean)


def test_estimates_are_monotone_and_in_unit_interval(binary, rho2, uniform):
    grid = energy_grid("linear", -1.2, 1.2, 25)
    estimate = mc_ids(Boundary.NEUMANN, 4, uniform, rho2, binary, grid, 10, 2, n_jobs=1)
    assert estimate.max_decrease() == 0.0
    assert np.all(np.diff(estimate.mean) >= 0)
    assert estimate.mean[0] == 0.0
    assert estimate.mean[-1] == 1.0


def test_thread_count_does_not_change_the_estimate(binary, rho2, uniform):
    grid = energy_grid("linear", -1.0, 1.0, 11)
    serial = mc_ids(Boundary.NEUMANN, 3, uniform, rho2, binary, grid, 12, 5, n_jobs=1)
    threaded = mc_ids(Boundary.NEUMANN, 3, uniform, rho2, binary, grid, 12, 5, n_jobs=3)
    np.testing.assert_array_equal(serial.mean, threaded.mean)
    np.testing.assert_array_equal(serial.stderr, threaded.stderr)


def test_to_frame(binary, rho2, uniform):
    estimate = mc_ids(Boundary.DIRICHLET, 2, uniform, rho2, binary, [0.0, 0.5], 4, 1, n_jobs=1)
    frame = estimate.to_frame()
    assert list(frame.columns) == ["E", "value", "stderr", "method", "kappa", "replicas"]
    assert set(frame["method"]) == {"mc-dirichlet"}
    assert frame["replicas"].tolist() == [4, 4]


def test_mc_ids_respects_the_dense_cap(binary, rho2, uniform):
    with pytest.raises(ResourceError):
        mc_ids(Boundary.NEUMANN, 5, uniform, rho2, binary, [0.0], 2, 1, cap=16)


def test_energy_grid():
    np.testing.assert_allclose(energy_grid("linear", 0.0, 1.0, 5), [0.0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(energy_grid("log", 1e-3, 1e-1, 3), [1e-3, 1e-2, 1e-1])
    with pytest.raises(ValidationError):
        energy_grid("log", 0.0, 1.0, 3)
    with pytest.raises(ValidationError):
        energy_grid("cubic", 0.0, 1.0, 3)
    with pytest.raises(ValidationError):
        energy_grid("linear", 0.0, 1.0, 0)


def test_continuity_grid_avoids_jumps(rho2):
    dist = SingleSiteDistribution.two_point(-1.0, 0.0, 0.5)
    grid = continuity_grid(rho2, 3, dist, -1.0, 1.0)
    atoms = [rho2.lam(r) + a for r in range(4) for a in (-1.0, 0.0)] + [0.0, 1.0]
    assert np.all(np.diff(grid) > 0)
    assert np.all((grid > -1.0) & (grid < 1.0))
    assert min(np.abs(grid[:, None] - np.array(atoms)[None, :]).min(axis=1)) > 0
    with pytest.raises(ValidationError):
        continuity_grid(rho2, 3, dist, 1.0, 1.0)


def test_free_curve_is_a_distribution_function(binary, rho2):
    curve = ids_free_curve(binary, rho2, np.linspace(-0.5, 1.5, 81))
    assert curve[0] == 0.0
    assert curve[-1] == 1.0
    assert np.all(np.diff(curve) >= 0)


def test_spectral_range(binary, rho2, uniform):
    assert spectrum_bounds(uniform) == (-1.0, 1.0)
    for replica in range(5):
        sample = replica_spectrum(binary, rho2, 4, uniform, 3, replica, Boundary.DIRICHLET)
        assert spectral_range_violation(sample.eigenvalues, uniform) <= 1e-12
    assert spectral_range_violation([-1.5, 0.0], uniform) == pytest.approx(0.5)


def test_convergence_trend_shape(binary, rho2, uniform):
    trend = convergence_trend((1, 2), uniform, rho2, binary, [-0.5, 0.0, 0.5], 6, 4, n_jobs=1)
    assert trend.kappas == (1, 2)
    assert len(trend.differences) == 2
    assert all(0.0 <= d <= 1.0 for d in trend.differences)


def test_neumann_estimates_converge_in_the_volume(binary, rho2, uniform):
    grid = continuity_grid(rho2, 6, uniform, -1.0, 1.0)
    trend = convergence_trend((2, 3, 4), uniform, rho2, binary, grid, 200, 31, n_jobs=1)
    assert trend.passed
