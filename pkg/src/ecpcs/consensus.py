"""Consensus functions: average-link over a co-association matrix, and
meta-clustering of the cluster graph followed by per-object voting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import (
    ContractViolation,
    Ensemble,
    first_appearance_labels,
    stable_argmax,
    symmetric_eigendecomposition,
)
from .ensemble_gen import kmeans_restarts


@dataclass(frozen=True)
class Dendrogram:
    """Merge history of an agglomeration over ``n_leaves`` objects.

    Leaves are regions ``0..N-1``; merge ``q`` joins ``left[q] < right[q]``
    into region ``N + q`` at average-link similarity ``similarity[q]``.
    """

    n_leaves: int
    left: np.ndarray
    right: np.ndarray
    similarity: np.ndarray

    @property
    def merges(self) -> list[tuple[int, int, float, int]]:
        n = self.n_leaves
        return [
            (int(a), int(b), float(s), n + q)
            for q, (a, b, s) in enumerate(zip(self.left, self.right, self.similarity))
        ]


@dataclass(frozen=True)
class MetaClustering:
    k: int
    assignment: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    @property
    def degenerate(self) -> bool:
        return bool(np.any(self.sizes == 0))


@dataclass(frozen=True)
class ConsensusResult:
    labels: np.ndarray
    method: str
    k: int
    provenance: dict = field(default_factory=dict)

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0


def _check_square_symmetric(S: np.ndarray, name: str) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ContractViolation(f"{name} must be square, got shape {S.shape}")
    scale = max(np.abs(S).max(initial=0.0), np.finfo(float).tiny)
    if np.abs(S - S.T).max(initial=0.0) > 1e-10 * scale:
        raise ContractViolation(f"{name} must be symmetric")
    return S


def hc_build_dendrogram(B: np.ndarray, *, backend: str | None = None) -> Dendrogram:
    """Average-link agglomeration driven by similarity ``B`` (highest merges first).

    Exact similarity ties go to the lexicographically smallest pair of region
    ids. Merge similarities are recorded as-is; average link over a general
    similarity need not be monotone.
    """
    B = _check_square_symmetric(B, "B")
    n = B.shape[0]
    if n < 2:
        raise ContractViolation("need at least two objects to agglomerate")
    left, right, sims = _kernels.agglomerate(B, backend=backend)
    return Dendrogram(n, left, right, sims)


def hc_cut(d: Dendrogram, k: int, method: str = "HC") -> ConsensusResult:
    """Undo the last ``k - 1`` merges; clusters numbered by their smallest leaf."""
    n = d.n_leaves
    if not 1 <= k <= n:
        raise ContractViolation(f"k must lie in 1..{n}, got {k}")
    root = np.arange(2 * n - 1)
    for q in range(n - k - 1, -1, -1):
        root[d.left[q]] = root[n + q]
        root[d.right[q]] = root[n + q]
    labels = first_appearance_labels(root[:n])
    return ConsensusResult(labels, method, k)


def mc_partition(Z: np.ndarray, k: int, rng: np.random.Generator, restarts: int = 10) -> MetaClustering:
    """Normalized-cut partition of the cluster graph weighted by ``Z``.

    Spectral relaxation: top-``k`` eigenvectors of ``D^-1/2 W D^-1/2`` with
    ``W = Z`` minus its diagonal, rows scaled to unit length, then seeded
    k-means (best of ``restarts``). Nodes with zero degree take no part in the
    eigenproblem and join the largest meta-cluster.
    """
    Z = _check_square_symmetric(Z, "Z")
    nc = Z.shape[0]
    if not 2 <= k <= nc:
        raise ContractViolation(f"k must lie in 2..{nc}, got {k}")
    W = Z.copy()
    np.fill_diagonal(W, 0.0)
    degree = W.sum(axis=1)
    live = np.flatnonzero(degree > 0)
    if k > live.size:
        raise ContractViolation(
            f"cannot cut {live.size} connected cluster node(s) into k={k} meta-clusters"
        )
    inv_sqrt = 1.0 / np.sqrt(degree[live])
    L = W[np.ix_(live, live)] * inv_sqrt[:, None] * inv_sqrt[None, :]
    _, vecs = symmetric_eigendecomposition((L + L.T) / 2, k)
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    emb = np.divide(vecs, norms, out=np.zeros_like(vecs), where=norms > 0)
    sub = kmeans_restarts(emb, k, rng, restarts=restarts)

    assignment = np.empty(nc, dtype=np.int64)
    assignment[live] = sub
    if live.size < nc:
        # a zero-degree node has no positive Z entry to any other node, so
        # "nearest by Z" is undefined; it joins the largest meta-cluster
        largest = int(np.bincount(sub, minlength=k).argmax())
        dead = np.setdiff1d(np.arange(nc), live)
        assignment[dead] = largest
    return MetaClustering(k, assignment)


def voting_scores(ens: Ensemble, mc: MetaClustering) -> np.ndarray:
    """``N x k`` matrix: share of each meta-cluster's clusters that contain the object."""
    if mc.assignment.shape[0] != ens.n_clusters_total:
        raise ContractViolation("meta-clustering must cover every cluster of the ensemble")
    n = ens.n_objects
    counts = np.zeros((n, mc.k), dtype=np.float64)
    rows = np.arange(n)
    for g in ens.global_labels():
        counts[rows, mc.assignment[g]] += 1.0
    sizes = mc.sizes.astype(np.float64)
    return np.divide(counts, sizes[None, :], out=np.zeros_like(counts), where=sizes[None, :] > 0)


def mc_vote(ens: Ensemble, mc: MetaClustering, rng: np.random.Generator) -> ConsensusResult:
    """Assign every object to the meta-cluster with its highest voting score."""
    scores = voting_scores(ens, mc)
    best = scores.max(axis=1)
    n_winners = (scores == best[:, None]).sum(axis=1)
    winner = scores.argmax(axis=1)
    tied = np.flatnonzero(n_winners > 1)
    for i in tied:
        winner[i] = stable_argmax(scores[i], rng)
    labels = first_appearance_labels(winner)
    prov = {"tie_events": int(tied.size), "empty_meta_clusters": int((mc.sizes == 0).sum())}
    return ConsensusResult(labels, "MC", mc.k, prov)


def eac_baseline(A: np.ndarray, k: int, *, backend: str | None = None) -> ConsensusResult:
    """Evidence accumulation: average link over the plain co-association matrix."""
    return hc_cut(hc_build_dendrogram(A, backend=backend), k, method="EAC")
