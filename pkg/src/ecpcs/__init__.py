"""Ensemble clustering by propagating cluster-wise similarities.

Base clusterings are linked through a Jaccard-weighted cluster graph, random
walks on that graph yield a refined cluster similarity ``Z``, and ``Z`` is
mapped to an enhanced object co-association matrix. Two consensus functions
consume it: average-link agglomeration (``HC``) and meta-cluster voting
(``MC``).
"""

from ._kernels import BACKEND
from .coassoc import coassociation, enhanced_coassociation
from .consensus import (
    ConsensusResult,
    Dendrogram,
    MetaClustering,
    eac_baseline,
    hc_build_dendrogram,
    hc_cut,
    mc_partition,
    mc_vote,
)
from .core import (
    BaseClustering,
    ContractViolation,
    Dataset,
    Ensemble,
    NumericalError,
    stable_argmax,
    symmetric_eigendecomposition,
)
from .ensemble_gen import EnsembleConfig, generate_ensemble, kmeans
from .metrics import ari, nmi
from .propagation import (
    build_cluster_graph,
    build_transition_matrix,
    cluster_similarity,
    propagate,
    trajectory_similarity,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BaseClustering",
    "ConsensusResult",
    "ContractViolation",
    "Dataset",
    "Dendrogram",
    "Ensemble",
    "EnsembleConfig",
    "MetaClustering",
    "NumericalError",
    "ari",
    "build_cluster_graph",
    "build_transition_matrix",
    "cluster_similarity",
    "coassociation",
    "eac_baseline",
    "enhanced_coassociation",
    "generate_ensemble",
    "hc_build_dendrogram",
    "hc_cut",
    "kmeans",
    "mc_partition",
    "mc_vote",
    "nmi",
    "propagate",
    "stable_argmax",
    "symmetric_eigendecomposition",
    "trajectory_similarity",
]
