from .laplacian import Boundary, FiniteVolumeHamiltonian, check_state_vector
from .laplacian import cluster_sums, cluster_averages, averaging_apply, laplacian_apply, hamiltonian_apply, dense_matrix
from .free import ExactSpectrum, exact_free_spectrum, ids_free, ids_free_finite, free_eigenfunction
from .free import spectral_decomposition_apply
