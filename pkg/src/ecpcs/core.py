"""Shared domain types and the two small numeric helpers the pipeline needs.

Similarity-like matrices (edge weights, transition matrices, Z, A, B) are
plain ``float64`` ndarrays; the producing operation asserts whatever
structure it promises.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ContractViolation(ValueError):
    """An operation was called with inputs outside its stated preconditions."""


class NumericalError(ArithmeticError):
    """A numeric routine failed to converge.

    ``iterations`` carries the iteration (or LAPACK ``info``) count reported
    by the failing routine when one is available.
    """

    def __init__(self, message: str, iterations: int | None = None):
        super().__init__(message)
        self.iterations = iterations


def _as_labels(values, n: int | None = None, name: str = "labels") -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ContractViolation(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ContractViolation(f"{name} has length {arr.shape[0]}, expected {n}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ContractViolation(f"{name} must hold integer ids")
    return arr.astype(np.int64, copy=False)


def compact_labels(values) -> tuple[np.ndarray, int]:
    """Relabel arbitrary integer ids to ``0..n-1`` preserving their sorted order."""
    uniq, inverse = np.unique(np.asarray(values), return_inverse=True)
    return inverse.astype(np.int64).ravel(), int(uniq.size)


def first_appearance_labels(values) -> np.ndarray:
    """Relabel ids to ``0..n-1`` in order of first appearance."""
    values = np.asarray(values)
    _, first, inverse = np.unique(values, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.ravel()]


@dataclass(frozen=True)
class Dataset:
    objects: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        X = np.array(self.objects, dtype=np.float64)
        if X.ndim != 2:
            raise ContractViolation(f"objects must be an N x d matrix, got shape {X.shape}")
        if X.shape[0] < 2 or X.shape[1] < 1:
            raise ContractViolation(f"need N >= 2 and d >= 1, got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ContractViolation("feature values must be finite")
        X.setflags(write=False)
        object.__setattr__(self, "objects", X)
        if self.labels is not None:
            y = _as_labels(self.labels, X.shape[0]).copy()
            k = np.unique(y)
            if k.size < 2 or k[0] != 0 or k[-1] != k.size - 1:
                raise ContractViolation("class ids must be contiguous 0..K-1 with K >= 2")
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    @property
    def n_objects(self) -> int:
        return self.objects.shape[0]

    @property
    def n_features(self) -> int:
        return self.objects.shape[1]

    @property
    def n_classes(self) -> int | None:
        return None if self.labels is None else int(self.labels.max()) + 1


@dataclass(frozen=True)
class BaseClustering:
    assignments: np.ndarray
    n_clusters: int

    def __post_init__(self):
        a = _as_labels(self.assignments, name="assignments").copy()
        counts = np.bincount(a, minlength=self.n_clusters) if a.size else np.zeros(0)
        if a.size and (a.min() < 0 or a.max() >= self.n_clusters):
            raise ContractViolation("assignment ids must lie in 0..n_clusters-1")
        if np.any(counts == 0):
            raise ContractViolation("every cluster id must be used by at least one object")
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)
        object.__setattr__(self, "n_clusters", int(self.n_clusters))

    @classmethod
    def from_labels(cls, labels) -> "BaseClustering":
        """Build from arbitrary integer ids, dropping unused ids."""
        compact, n = compact_labels(_as_labels(labels))
        return cls(compact, n)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.n_clusters)


@dataclass(frozen=True)
class Ensemble:
    """M base clusterings of the same N objects with a global cluster registry.

    Global cluster ids run over member 0's clusters first, then member 1's,
    and so on: ``global = offsets[m] + local``.
    """

    members: tuple[BaseClustering, ...]
    offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ContractViolation("an ensemble needs at least one member")
        n = members[0].assignments.shape[0]
        if any(m.assignments.shape[0] != n for m in members):
            raise ContractViolation("all members must cover the same N objects")
        offsets = np.zeros(len(members) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([m.n_clusters for m in members])
        offsets.setflags(write=False)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "offsets", offsets)

    @classmethod
    def from_assignments(cls, assignments) -> "Ensemble":
        return cls(tuple(BaseClustering.from_labels(a) for a in assignments))

    @property
    def M(self) -> int:
        return len(self.members)

    @property
    def n_objects(self) -> int:
        return self.members[0].assignments.shape[0]

    @property
    def n_clusters_total(self) -> int:
        return int(self.offsets[-1])

    def global_id(self, m: int, local: int) -> int:
        if not 0 <= local < self.members[m].n_clusters:
            raise ContractViolation(f"member {m} has no cluster {local}")
        return int(self.offsets[m] + local)

    def locate(self, g: int) -> tuple[int, int]:
        """Inverse of :meth:`global_id`."""
        if not 0 <= g < self.n_clusters_total:
            raise ContractViolation(f"global cluster id {g} out of range")
        m = int(np.searchsorted(self.offsets, g, side="right") - 1)
        return m, int(g - self.offsets[m])

    def global_labels(self) -> np.ndarray:
        """M x N matrix of global cluster ids containing each object."""
        return np.stack(
            [m.assignments + off for m, off in zip(self.members, self.offsets[:-1])]
        )

    def cluster_sizes(self) -> np.ndarray:
        return np.concatenate([m.sizes for m in self.members])

    def cluster_member(self) -> np.ndarray:
        """Member index of every global cluster."""
        return np.repeat(np.arange(self.M), np.diff(self.offsets))


def symmetric_eigendecomposition(m: np.ndarray, k: int, *, rtol: float = 1e-10):
    """Return the ``k`` algebraically largest eigenpairs of a symmetric matrix.

    Eigenvalues come back in descending order, eigenvectors as the columns of
    an ``n x k`` orthonormal matrix.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if not 1 <= k <= n:
        raise ContractViolation(f"k must lie in 1..{n}, got {k}")
    scale = max(np.abs(m).max(initial=0.0), np.finfo(float).tiny)
    if np.abs(m - m.T).max(initial=0.0) > rtol * scale:
        raise ContractViolation("matrix is not symmetric within tolerance")
    try:
        w, v = np.linalg.eigh((m + m.T) / 2)
    except np.linalg.LinAlgError as exc:
        info = next((int(tok) for tok in str(exc).split() if tok.isdigit()), None)
        raise NumericalError(f"eigendecomposition did not converge: {exc}", info) from exc
    order = np.argsort(w, kind="stable")[::-1][:k]
    return w[order], v[:, order]


def stable_argmax(values, rng: np.random.Generator) -> int:
    """Index of the maximum; exact ties are broken uniformly at random by ``rng``.

    ``rng`` is only consumed when a tie actually occurs.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ContractViolation("stable_argmax needs a non-empty vector")
    if not np.all(np.isfinite(values)):
        raise ContractViolation("stable_argmax needs finite values")
    winners = np.flatnonzero(values == values.max())
    if winners.size == 1:
        return int(winners[0])
    return int(winners[rng.integers(winners.size)])
