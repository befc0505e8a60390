"""Object-level co-association matrices built from an ensemble."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .core import ContractViolation, Ensemble


def coassociation(ens: Ensemble, *, backend: str | None = None) -> np.ndarray:
    """Fraction of members that put each object pair in the same cluster."""
    nc = ens.n_clusters_total
    return _kernels.accumulate_coassociation(
        ens.global_labels(), np.zeros((nc, nc)), backend=backend
    )


def enhanced_coassociation(ens: Ensemble, Z: np.ndarray, *, backend: str | None = None) -> np.ndarray:
    """Co-association where a split pair contributes the similarity of its two clusters.

    ``b_ij = mean_m (1 if x_i, x_j share a cluster in member m else Z[u, v])``
    with ``u, v`` the global ids of the clusters holding ``x_i`` and ``x_j``.
    """
    Z = np.asarray(Z, dtype=np.float64)
    nc = ens.n_clusters_total
    if Z.shape != (nc, nc):
        raise ContractViolation(f"Z has shape {Z.shape}, ensemble has {nc} clusters")
    return _kernels.accumulate_coassociation(ens.global_labels(), Z, backend=backend)
