from .replicas import run_replicas, mean_and_stderr, replica_spectrum, replica_hamiltonian, ReplicaSpectrum
from .ids import IdsEstimate, mc_ids, energy_grid, ids_free_curve, spectrum_bounds, spectral_range_violation
from .ids import continuity_grid, sandwich_check, SandwichReport, convergence_trend, ConvergenceTrend
from .bracketing import BracketingReport, bracketing_check, dirichlet_neumann_gap, random_unit_vectors
from .tails import TailMethod, TailEstimate, KappaRule, UpperTailReport, TailMcReport, LargeDeviationDiagnostics
from .tails import tail_upper_pipeline, tail_lower_analytic, lower_bound_envelope, large_deviation_diagnostics
from .tails import tail_mc, tail_orderings, default_alpha, model_dimension, top_eigenvalue
from .fits import Transform, ExponentFit, exponent_fit, pointwise_ratio, van_hove_curve
from .ergodic import covariance_check, birkhoff_check, BirkhoffReport, origin_value
