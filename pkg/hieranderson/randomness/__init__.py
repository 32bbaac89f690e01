from .distributions import SingleSiteDistribution
from .sampling import PotentialSample, replica_generator, sample_potential, shift_window, shifted_windows
from .sampling import birkhoff_average, sampled_rank, POTENTIAL_STREAM, START_VECTOR_STREAM, TEST_VECTOR_STREAM
