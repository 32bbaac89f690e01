from .eigen import IterativeResult, eigenvalues_dense, max_eigenvalue_iterative, start_vector, counting_function
from .temple import TempleInput, temple_bound, temple_moments
