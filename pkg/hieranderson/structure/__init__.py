from .hierarchy import HierarchicalStructure, Point, ClusterRef, origin, validate_point
from .hierarchy import index_to_point, point_to_index, cluster_of, group_add, group_neg
from .hierarchy import indices_to_digits, digits_to_indices, translate_indices, common_rank_matrix
from .weights import WeightSequence, SpectralDimension, DecayConstants, geometric_weights, explicit_weights
from .weights import spectral_dimension, k_of_E, K_of_E, decay_constants
