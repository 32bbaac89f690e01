import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hieranderson.exceptions import ResourceError, ValidationError
from hieranderson.operators import (
    Boundary,
    FiniteVolumeHamiltonian,
    averaging_apply,
    exact_free_spectrum,
    free_eigenfunction,
    ids_free,
    ids_free_finite,
    laplacian_apply,
    spectral_decomposition_apply,
)
from hieranderson.structure import HierarchicalStructure, explicit_weights, geometric_weights

MIXED = HierarchicalStructure.from_branching((3, 2, 2))
RHO2 = geometric_weights(2.0)
vectors = arrays(np.float64, MIXED.size, elements=st.floats(-10, 10))


def test_averaging_examples(binary):
    psi = np.array([1.0, -1.0])
    np.testing.assert_array_equal(averaging_apply(binary, 0, 1, psi), psi)
    np.testing.assert_array_equal(averaging_apply(binary, 1, 1, psi), [0.0, 0.0])
    with pytest.raises(ValidationError):
        averaging_apply(binary, 2, 1, psi)


@pytest.mark.parametrize("kappa", [1, 3, 5])
def test_constant_vector(binary, rho2, kappa):
    ones = np.ones(binary.volume(kappa))
    neumann = FiniteVolumeHamiltonian(binary, rho2, kappa)
    dirichlet = neumann.with_boundary(Boundary.DIRICHLET)
    np.testing.assert_allclose(neumann.apply(ones), rho2.lam(kappa) * ones, atol=1e-15)
    np.testing.assert_allclose(dirichlet.apply(ones), ones, atol=1e-15)


def test_dense_matrix_rank_one(binary, rho2):
    H = FiniteVolumeHamiltonian(binary, rho2, 1)
    np.testing.assert_allclose(H.dense(), [[0.25, 0.25], [0.25, 0.25]], atol=1e-16)
    np.testing.assert_allclose(
        H.with_boundary("dirichlet").dense(), [[0.75, 0.25], [0.25, 0.75]], atol=1e-16
    )


def test_exact_free_spectrum_examples(binary, rho2):
    neumann = exact_free_spectrum(binary, rho2, 3)
    np.testing.assert_allclose(neumann.eigenvalues, [0.0, 0.5, 0.75, 0.875], atol=1e-15)
    assert neumann.multiplicities.tolist() == [4, 2, 1, 1]
    dirichlet = exact_free_spectrum(binary, rho2, 3, Boundary.DIRICHLET)
    np.testing.assert_allclose(dirichlet.eigenvalues, [0.125, 0.625, 0.875, 1.0], atol=1e-15)
    assert dirichlet.multiplicities.tolist() == [4, 2, 1, 1]


def test_exact_free_spectrum_single_site(binary, rho2):
    assert exact_free_spectrum(binary, rho2, 0).pairs() == [(0.0, 1)]
    (value, count), = exact_free_spectrum(binary, rho2, 0, Boundary.DIRICHLET).pairs()
    assert value == pytest.approx(1.0) and count == 1


@pytest.mark.parametrize("boundary", list(Boundary))
def test_exact_spectrum_matches_dense(mixed, rho2, boundary):
    H = FiniteVolumeHamiltonian(mixed, rho2, 3, boundary)
    spectrum = exact_free_spectrum(mixed, rho2, 3, boundary)
    assert spectrum.dim == mixed.size
    np.testing.assert_allclose(np.linalg.eigvalsh(H.dense()), spectrum.expand(), atol=1e-12)


def test_ids_free_examples(binary, rho2):
    assert ids_free(binary, rho2, -0.1) == 0.0
    assert ids_free(binary, rho2, 0.0) == 0.5
    assert ids_free(binary, rho2, 0.4) == 0.5
    assert ids_free(binary, rho2, 0.5) == 0.75
    assert ids_free(binary, rho2, 1.0) == 1.0


def test_ids_free_just_below_one(binary, rho2):
    # r(E) = floor(log2(1 / (1 - E))) = 43
    assert ids_free(binary, rho2, 1 - 1e-13) == pytest.approx(1 - 2.0 ** -44, abs=0.0, rel=1e-15)
    listed = explicit_weights([0.5, 0.5], "reject")
    assert ids_free(binary, listed, 0.9999999999995) == 0.75
    assert ids_free(binary, listed, 0.5) == 0.75
    assert ids_free(binary, listed, 0.25) == 0.5


@pytest.mark.parametrize("r", [1, 10, 30, 45])
def test_ids_free_at_the_free_eigenvalues(binary, rho2, r):
    assert ids_free(binary, rho2, rho2.lam(r)) == 1 - 2.0 ** -(r + 1)
    assert ids_free(binary, rho2, 1 - 2.0 ** -r) == 1 - 2.0 ** -(r + 1)


def test_ids_free_finite(binary, rho2):
    assert ids_free_finite(binary, rho2, 3, 0.5) == pytest.approx(0.75)
    assert ids_free_finite(binary, rho2, 3, 0.1, Boundary.DIRICHLET) == 0.0
    assert ids_free_finite(binary, rho2, 3, 1.0, Boundary.DIRICHLET) == 1.0


def test_fast_matvec_matches_dense(mixed, rho2, rng):
    omega = rng.uniform(-1, 0, mixed.size)
    for boundary in Boundary:
        H = FiniteVolumeHamiltonian(mixed, rho2, 3, boundary, potential=omega)
        for _ in range(5):
            psi = rng.standard_normal(mixed.size)
            np.testing.assert_allclose(H.apply(psi), H.dense() @ psi, rtol=1e-12, atol=1e-12)


def test_linear_operator_wraps_matvec(mixed, rho2, rng):
    H = FiniteVolumeHamiltonian(mixed, rho2, 3, potential=rng.uniform(-1, 0, mixed.size))
    psi = rng.standard_normal(mixed.size)
    np.testing.assert_allclose(H.as_linear_operator() @ psi, H.apply(psi))


@settings(max_examples=50)
@given(psi=vectors, s=st.integers(0, 3), t=st.integers(0, 3))
def test_averaging_projections_compose(psi, s, t):
    lhs = averaging_apply(MIXED, s, 3, averaging_apply(MIXED, t, 3, psi))
    rhs = averaging_apply(MIXED, max(s, t), 3, psi)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@settings(max_examples=50)
@given(psi=vectors)
def test_spectral_decomposition_matches_matvec(psi):
    np.testing.assert_allclose(
        spectral_decomposition_apply(MIXED, RHO2, 3, psi),
        laplacian_apply(MIXED, RHO2, 3, psi),
        atol=1e-11,
    )


def test_free_eigenfunction(binary, rho2):
    psi = free_eigenfunction(binary, 3, 1, 1, [1.0, -1.0])
    np.testing.assert_array_equal(psi, [0, 0, 0, 0, 1, 1, -1, -1])
    H = FiniteVolumeHamiltonian(binary, rho2, 3)
    np.testing.assert_allclose(H.apply(psi), rho2.lam(1) * psi, atol=1e-15)
    with pytest.raises(ValidationError):
        free_eigenfunction(binary, 3, 1, 0, [1.0, 1.0])
    with pytest.raises(ValidationError):
        free_eigenfunction(binary, 3, 3, 0, [1.0, -1.0])


def test_decoupled_operator(binary, rho2):
    H = FiniteVolumeHamiltonian(binary, rho2, 2, Boundary.DIRICHLET).decoupled(1)
    np.testing.assert_allclose(np.linalg.eigvalsh(H.dense()), [0.5, 0.5, 1.0, 1.0], atol=1e-14)
    neumann = H.with_boundary(Boundary.NEUMANN)
    np.testing.assert_allclose(np.linalg.eigvalsh(neumann.dense()), [0.0, 0.0, 0.5, 0.5], atol=1e-14)
    psi = np.arange(4.0)
    np.testing.assert_allclose(H.apply(psi), H.dense() @ psi, atol=1e-14)


def test_dense_cap(binary, rho2):
    with pytest.raises(ResourceError):
        FiniteVolumeHamiltonian(binary, rho2, 3).dense(cap=4)


def test_potential_is_validated_and_frozen(binary, rho2):
    with pytest.raises(ValidationError):
        FiniteVolumeHamiltonian(binary, rho2, 2, potential=np.zeros(3))
    with pytest.raises(ValidationError):
        FiniteVolumeHamiltonian(binary, rho2, 2, potential=[0.0, np.nan, 0.0, 0.0])
    with pytest.raises(ValidationError):
        FiniteVolumeHamiltonian(binary, rho2, 2, truncation=3)
    H = FiniteVolumeHamiltonian(binary, rho2, 2, potential=np.zeros(4))
    with pytest.raises(ValueError):
        H.potential[0] = 1.0
