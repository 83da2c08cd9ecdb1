"""hubkit: hubness diagnosis and reduction for distance-based generative
model evaluation.

The main entry points are re-exported here; see the submodules for details.
"""

__version__ = "0.1.0"

from .io import VectorSet, load_vectors, save_vectors
from .knn import DissimilarityView, NeighborTable, knn_query, pairwise_dissimilarity
from .hubness import OccurrenceProfile, antihub_ratio, hub_score, k_occurrence
from .reduction import ScalingState, icdm, mean_knn_distance, nicdm, sphere_project
from .gicdm import GicdmResult, delta_out_of_sample, gicdm_view, run_gicdm
from .density import DensityEstimate, knn_density, unit_ball_volume

__all__ = [
    "__version__",
    "VectorSet", "load_vectors", "save_vectors",
    "DissimilarityView", "NeighborTable", "knn_query", "pairwise_dissimilarity",
    "OccurrenceProfile", "k_occurrence", "hub_score", "antihub_ratio",
    "ScalingState", "mean_knn_distance", "nicdm", "icdm", "sphere_project",
    "GicdmResult", "delta_out_of_sample", "run_gicdm", "gicdm_view",
    "DensityEstimate", "knn_density", "unit_ball_volume",
]
