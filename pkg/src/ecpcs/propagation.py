"""Cluster similarity graph, random-walk propagation and trajectory similarity."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ContractViolation, Ensemble

# above this many trajectory entries per row, Z is built from accumulated
# per-step Gram matrices instead of materialized trajectories
MATERIALIZE_LIMIT = 200_000


@dataclass(frozen=True)
class ClusterGraph:
    edge_weights: np.ndarray
    cluster_sizes: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.edge_weights.shape[0]


@dataclass(frozen=True)
class TransitionMatrix:
    P: np.ndarray
    isolated: frozenset[int]


@dataclass(frozen=True)
class TrajectorySet:
    """Per-step transition matrices ``P^(1) .. P^(t)``.

    Row ``i`` of :attr:`rows` is the node's trajectory, the concatenation of
    ``P^(1)[i], ..., P^(t)[i]``.
    """

    steps: tuple[np.ndarray, ...]

    @property
    def t(self) -> int:
        return len(self.steps)

    @property
    def rows(self) -> np.ndarray:
        return np.hstack(self.steps)


def intersection_counts(ens: Ensemble) -> np.ndarray:
    """Exact integer ``|C_i & C_j|`` for all global cluster pairs."""
    nc = ens.n_clusters_total
    out = np.zeros((nc, nc), dtype=np.int64)
    for a, (ma, oa) in enumerate(zip(ens.members, ens.offsets[:-1])):
        for b in range(a, ens.M):
            mb, ob = ens.members[b], ens.offsets[b]
            joint = np.bincount(
                ma.assignments * mb.n_clusters + mb.assignments,
                minlength=ma.n_clusters * mb.n_clusters,
            ).reshape(ma.n_clusters, mb.n_clusters)
            out[oa:oa + ma.n_clusters, ob:ob + mb.n_clusters] = joint
            out[ob:ob + mb.n_clusters, oa:oa + ma.n_clusters] = joint.T
    return out


def build_cluster_graph(ens: Ensemble) -> ClusterGraph:
    """Jaccard-weighted graph over all clusters of the ensemble."""
    inter = intersection_counts(ens)
    sizes = np.diag(inter).copy()
    union = sizes[:, None] + sizes[None, :] - inter
    E = inter / union
    np.fill_diagonal(E, 1.0)
    return ClusterGraph(E, sizes)


def build_transition_matrix(g: ClusterGraph) -> TransitionMatrix:
    W = np.array(g.edge_weights, dtype=np.float64)
    np.fill_diagonal(W, 0.0)
    degree = W.sum(axis=1)
    isolated = degree <= 0
    P = np.zeros_like(W)
    P[~isolated] = W[~isolated] / degree[~isolated, None]
    return TransitionMatrix(P, frozenset(np.flatnonzero(isolated).tolist()))


def propagate(P: TransitionMatrix | np.ndarray, t: int) -> TrajectorySet:
    """``P^(1) = P``, ``P^(s) = P^(s-1) P`` for ``s = 2..t``."""
    if t < 1:
        raise ContractViolation(f"step length t must be >= 1, got {t}")
    P = P.P if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=np.float64)
    steps = [P]
    for _ in range(t - 1):
        steps.append(steps[-1] @ P)
    return TrajectorySet(tuple(steps))


def _cosine_from_gram(G: np.ndarray) -> np.ndarray:
    G = np.triu(G) + np.triu(G, 1).T
    norms = np.sqrt(np.diag(G))
    live = norms > 0
    Z = np.zeros_like(G)
    Z[np.ix_(live, live)] = G[np.ix_(live, live)] / np.outer(norms[live], norms[live])
    np.clip(Z, 0.0, 1.0, out=Z)
    np.fill_diagonal(Z, 1.0)
    return Z


def trajectory_similarity(traj: TrajectorySet) -> np.ndarray:
    """Cosine similarity of trajectories (the Z matrix).

    Isolated nodes (all-zero trajectory) have similarity 0 to every other
    node; the diagonal is 1.
    """
    R = traj.rows
    return _cosine_from_gram(R @ R.T)


def gram_similarity(P: TransitionMatrix | np.ndarray, t: int) -> np.ndarray:
    """Same as ``trajectory_similarity(propagate(P, t))`` without storing trajectories.

    Accumulates ``sum_s P^(s) P^(s)^T`` one step at a time.
    """
    if t < 1:
        raise ContractViolation(f"step length t must be >= 1, got {t}")
    P = P.P if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=np.float64)
    Ps = P
    G = Ps @ Ps.T
    for _ in range(t - 1):
        Ps = Ps @ P
        G += Ps @ Ps.T
    return _cosine_from_gram(G)


def cluster_similarity(ens: Ensemble, t: int = 20, *, materialize_limit: int = MATERIALIZE_LIMIT):
    """Graph, transition matrix and Z for an ensemble in one call."""
    graph = build_cluster_graph(ens)
    trans = build_transition_matrix(graph)
    if graph.n_nodes * t <= materialize_limit:
        Z = trajectory_similarity(propagate(trans, t))
    else:
        Z = gram_similarity(trans, t)
    return graph, trans, Z


def write_matrix_csv(path: str | Path, matrix: np.ndarray) -> None:
    """Full matrix, row-major, 17 significant digits."""
    np.savetxt(path, np.asarray(matrix, dtype=np.float64), delimiter=",", fmt="%.17g")
