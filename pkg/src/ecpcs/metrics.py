"""External clustering-quality measures: NMI and ARI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ContractViolation, compact_labels


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def contingency(test, truth) -> ContingencyTable:
    test = np.asarray(test).ravel()
    truth = np.asarray(truth).ravel()
    if test.shape != truth.shape:
        raise ContractViolation(f"label vectors differ in length: {test.size} vs {truth.size}")
    if test.size == 0:
        raise ContractViolation("label vectors are empty")
    a, na = compact_labels(test)
    b, nb = compact_labels(truth)
    counts = np.bincount(a * nb + b, minlength=na * nb).reshape(na, nb)
    return ContingencyTable(counts)


def nmi(test, truth, *, return_degenerate: bool = False):
    """Normalized mutual information with natural logarithms.

    A single-cluster side makes the normalizer zero; the score is then 0 and,
    with ``return_degenerate=True``, the flag in ``(score, flag)`` is set.
    """
    table = contingency(test, truth)
    c = table.counts
    n = float(table.total)
    ni = table.row_sums.astype(np.float64)
    nj = table.col_sums.astype(np.float64)
    degenerate = ni.size == 1 or nj.size == 1
    if degenerate:
        value = 0.0
    elif ni.size == nj.size and np.all((c > 0).sum(axis=0) == 1) and np.all((c > 0).sum(axis=1) == 1):
        # same partition up to relabeling
        value = 1.0
    else:
        nz = c > 0
        nij = c[nz].astype(np.float64)
        outer = np.outer(ni, nj)[nz]
        mutual = float(np.sum(nij * np.log(nij * n / outer)))
        h_test = float(np.sum(ni * np.log(ni / n)))
        h_truth = float(np.sum(nj * np.log(nj / n)))
        value = mutual / np.sqrt(h_test * h_truth)
        value = float(min(max(value, 0.0), 1.0))
    return (value, degenerate) if return_degenerate else value


def pair_counts(test, truth) -> tuple[int, int, int, int]:
    """``(N11, N00, N10, N01)`` over unordered object pairs, from the contingency table.

    ``N10`` counts pairs together in ``test`` but apart in ``truth``.
    """
    table = contingency(test, truth)
    comb2 = lambda x: int((x.astype(object) * (x.astype(object) - 1)).sum()) // 2  # noqa: E731
    n = table.total
    total = n * (n - 1) // 2
    n11 = comb2(table.counts.ravel())
    same_test = comb2(table.row_sums)
    same_truth = comb2(table.col_sums)
    n10 = same_test - n11
    n01 = same_truth - n11
    n00 = total - n11 - n10 - n01
    return n11, n00, n10, n01


def ari(test, truth) -> float:
    """Adjusted Rand index from pair counts; 1 when the denominator vanishes."""
    n11, n00, n10, n01 = pair_counts(test, truth)
    num = 2 * (n00 * n11 - n01 * n10)
    den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11)
    if den == 0:
        return 1.0
    return num / den
