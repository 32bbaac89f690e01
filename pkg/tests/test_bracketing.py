import numpy as np
import pytest

from hieranderson.analysis import bracketing_check, dirichlet_neumann_gap, random_unit_vectors
from hieranderson.exceptions import ResourceError, ValidationError
from hieranderson.operators import Boundary, FiniteVolumeHamiltonian
from hieranderson.spectra import eigenvalues_dense


def test_free_decoupled_dirichlet_example(binary, rho2):
    blocks = FiniteVolumeHamiltonian(binary, rho2, 2, Boundary.DIRICHLET).decoupled(1)
    np.testing.assert_allclose(eigenvalues_dense(blocks.dense()), [0.5, 0.5, 1.0, 1.0], atol=1e-14)
    full = eigenvalues_dense(FiniteVolumeHamiltonian(binary, rho2, 2, Boundary.DIRICHLET).dense())
    np.testing.assert_allclose(full, [0.25, 0.25, 0.75, 1.0], atol=1e-14)


def test_block_rank_equal_to_kappa_changes_nothing(binary, rho2, rng):
    report = bracketing_check(binary, rho2, 3, 3, rng.uniform(-1, 0, 8), psi_count=20)
    assert report.max_violation <= 1e-14
    assert report.passed()


@pytest.mark.parametrize("r", [0, 1, 2])
def test_random_potential_bracketing(binary, rho2, rng, r):
    report = bracketing_check(binary, rho2, 4, r, rng.uniform(-1, 0, 16), psi_count=50, seed=2)
    assert report.max_violation <= 1e-10
    assert report.kappa == 4
    assert report.r == r


def test_mixed_branching_bracketing(mixed, rho2, rng):
    report = bracketing_check(mixed, rho2, 3, 1, rng.uniform(-1, 0, mixed.size))
    assert report.passed()


def test_bracketing_validates_arguments(binary, rho2):
    with pytest.raises(ValidationError):
        bracketing_check(binary, rho2, 2, 3, np.zeros(4))
    with pytest.raises(ResourceError):
        bracketing_check(binary, rho2, 5, 1, np.zeros(32), cap=16)


def test_dirichlet_neumann_gap_is_the_tail(binary, rho2, rng):
    for kappa in (1, 3, 5):
        omega = rng.uniform(-1, 0, binary.volume(kappa))
        assert dirichlet_neumann_gap(binary, rho2, kappa, omega) <= 1e-12


def test_random_unit_vectors():
    vectors = random_unit_vectors(16, 5, seed=1)
    assert vectors.shape == (5, 16)
    np.testing.assert_allclose(np.linalg.norm(vectors, axis=1), 1.0)
    np.testing.assert_array_equal(vectors, random_unit_vectors(16, 5, seed=1))
