"""Base-clustering pool from randomized k-means."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import BaseClustering, ContractViolation, Dataset, Ensemble

log = logging.getLogger(__name__)


def member_rng(seed: int, m: int) -> np.random.Generator:
    """Independent generator for ensemble member ``m`` under base ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), m]))


def standardize(X: np.ndarray) -> np.ndarray:
    """Per-feature z-score; constant features map to 0."""
    X = np.asarray(X, dtype=np.float64)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    out = X - mu
    nz = sd > 0
    out[:, nz] /= sd[nz]
    out[:, ~nz] = 0.0
    return out


def _sq_distances(X, centers, x_sq):
    d = x_sq[:, None] - 2.0 * (X @ centers.T) + np.einsum("ij,ij->i", centers, centers)[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def _lloyd(X, k, rng, max_iters):
    n = X.shape[0]
    x_sq = np.einsum("ij,ij->i", X, X)
    centers = X[rng.choice(n, size=k, replace=False)].copy()
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iters):
        dist = _sq_distances(X, centers, x_sq)
        new = dist.argmin(axis=1)
        counts = np.bincount(new, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # reseed each empty cluster with the object farthest from its own center
            own = dist[np.arange(n), new].copy()
            for c in empty:
                movable = counts[new] > 1
                cand = np.where(movable, own, -1.0)
                far = int(cand.argmax())
                if cand[far] <= 0.0:
                    break
                counts[new[far]] -= 1
                new[far] = c
                counts[c] = 1
                own[far] = 0.0
                centers[c] = X[far]
        converged = np.array_equal(new, labels)
        labels = new
        if converged:
            break
        counts = np.bincount(labels, minlength=k)
        filled = counts > 0
        sums = np.stack(
            [np.bincount(labels, weights=X[:, j], minlength=k) for j in range(X.shape[1])], axis=1
        )
        centers[filled] = sums[filled] / counts[filled, None]
    sse = float(((X - centers[labels]) ** 2).sum())
    return labels, sse


def kmeans(data, k: int, rng: np.random.Generator, max_iters: int = 100) -> BaseClustering:
    """Lloyd's k-means with centers initialized on ``k`` distinct sampled objects.

    ``data`` is a :class:`Dataset` or an ``N x d`` array. Empty clusters are
    reseeded during iteration; any still empty at the end are dropped, so the
    result can have fewer than ``k`` clusters when the geometry is degenerate
    (e.g. all points identical).
    """
    X = data.objects if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    n = X.shape[0]
    if not 2 <= k <= n:
        raise ContractViolation(f"k must lie in 2..N={n}, got {k}")
    labels, _ = _lloyd(X, k, rng, max_iters)
    return BaseClustering.from_labels(labels)


def kmeans_restarts(X: np.ndarray, k: int, rng: np.random.Generator, restarts: int = 10,
                    max_iters: int = 100) -> np.ndarray:
    """Best-of-``restarts`` k-means by within-cluster sum of squares; raw labels."""
    X = np.asarray(X, dtype=np.float64)
    best, best_sse = None, math.inf
    for _ in range(restarts):
        labels, sse = _lloyd(X, k, rng, max_iters)
        if sse < best_sse:
            best, best_sse = labels, sse
    return best


@dataclass(frozen=True)
class EnsembleConfig:
    M: int = 20
    k_min: int | None = None
    k_max: int | None = None
    kmeans_max_iters: int = 100
    seed: int = 0
    standardize: bool = True

    def resolve(self, data: Dataset) -> tuple[int, int]:
        """Concrete ``(k_min, k_max)`` for ``data`` after applying defaults."""
        n = data.n_objects
        k_min = self.k_min if self.k_min is not None else (data.n_classes or 2)
        k_max = self.k_max if self.k_max is not None else min(math.isqrt(n), 100)
        if self.k_max is None:
            k_max = max(k_max, k_min)
        if self.M < 2:
            raise ContractViolation(f"ensemble size M must be >= 2, got {self.M}")
        if not 2 <= k_min <= k_max <= n:
            raise ContractViolation(f"need 2 <= k_min <= k_max <= N, got {k_min}, {k_max}, {n}")
        return k_min, k_max


def generate_ensemble(data: Dataset, cfg: EnsembleConfig) -> Ensemble:
    k_min, k_max = cfg.resolve(data)
    X = standardize(data.objects) if cfg.standardize else data.objects
    members = []
    for m in range(cfg.M):
        rng = member_rng(cfg.seed, m)
        k = int(rng.integers(k_min, k_max + 1))
        member = kmeans(X, k, rng, cfg.kmeans_max_iters)
        if member.n_clusters < 2:
            log.warning("member %d collapsed to %d cluster(s) (k=%d)", m, member.n_clusters, k)
        members.append(member)
    return Ensemble(tuple(members))

