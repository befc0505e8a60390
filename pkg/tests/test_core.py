from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecpcs.core import (
    BaseClustering,
    ContractViolation,
    Dataset,
    Ensemble,
    NumericalError,
    compact_labels,
    first_appearance_labels,
    stable_argmax,
    symmetric_eigendecomposition,
)

labels_st = st.lists(st.integers(0, 4), min_size=2, max_size=15)


def ensembles_st(max_n=12, max_m=4):
    return st.integers(2, max_n).flatmap(
        lambda n: st.lists(
            st.lists(st.integers(0, 3), min_size=n, max_size=n), min_size=1, max_size=max_m
        )
    )


class TestLabels:
    def test_compact_preserves_order_of_values(self):
        labels, n = compact_labels([7, 3, 7, 9])
        assert n == 3
        assert labels.tolist() == [1, 0, 1, 2]

    def test_first_appearance(self):
        assert first_appearance_labels([5, 5, 2, 9, 2]).tolist() == [0, 0, 1, 2, 1]


class TestDataset:
    def test_shape_properties(self):
        d = Dataset(np.zeros((4, 3)), np.array([0, 1, 1, 0]), name="toy")
        assert (d.n_objects, d.n_features, d.n_classes) == (4, 3, 2)

    def test_unlabeled(self):
        assert Dataset(np.ones((3, 2))).n_classes is None

    def test_rejects_nan(self):
        with pytest.raises(ContractViolation):
            Dataset(np.array([[0.0, np.nan], [1.0, 2.0]]))

    def test_rejects_label_length_mismatch(self):
        with pytest.raises(ContractViolation):
            Dataset(np.zeros((3, 2)), np.array([0, 1]))


class TestBaseClustering:
    def test_from_labels_compacts(self):
        b = BaseClustering.from_labels([4, 4, 9, 1])
        assert b.n_clusters == 3
        assert sorted(b.sizes.tolist()) == [1, 1, 2]

    def test_rejects_empty_cluster(self):
        with pytest.raises(ContractViolation):
            BaseClustering(np.array([0, 0, 2]), 3)


class TestEnsemble:
    def test_offsets_and_totals(self):
        ens = Ensemble.from_assignments([[0, 0, 1, 1], [0, 1, 2, 2]])
        assert ens.M == 2
        assert ens.n_objects == 4
        assert ens.n_clusters_total == 5
        assert ens.offsets.tolist() == [0, 2, 5]
        assert ens.global_labels().tolist() == [[0, 0, 1, 1], [2, 3, 4, 4]]
        assert ens.cluster_member().tolist() == [0, 0, 1, 1, 1]

    def test_rejects_mismatched_members(self):
        with pytest.raises(ContractViolation):
            Ensemble.from_assignments([[0, 1, 1], [0, 1]])

    @pytest.mark.property
    @settings(max_examples=60, deadline=None)
    @given(ensembles_st())
    def test_registry_round_trip(self, assignments):
        ens = Ensemble.from_assignments(assignments)
        seen = []
        for m, member in enumerate(ens.members):
            for j in range(member.n_clusters):
                g = ens.global_id(m, j)
                assert ens.locate(g) == (m, j)
                seen.append(g)
        assert seen == list(range(ens.n_clusters_total))
        assert ens.cluster_sizes().sum() == ens.M * ens.n_objects


class TestEigendecomposition:
    def test_diagonal(self):
        vals, vecs = symmetric_eigendecomposition(np.diag([1.0, 3.0, 2.0]), 2)
        np.testing.assert_allclose(vals, [3.0, 2.0])
        np.testing.assert_allclose(np.abs(vecs), [[0, 0], [1, 0], [0, 1]])

    def test_two_by_two(self):
        vals, vecs = symmetric_eigendecomposition(np.array([[2.0, 1.0], [1.0, 2.0]]), 2)
        np.testing.assert_allclose(vals, [3.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(np.abs(vecs[:, 0]), [2**-0.5, 2**-0.5], atol=1e-14)

    def test_full_reconstruction(self, rng):
        a = rng.standard_normal((6, 6))
        m = (a + a.T) / 2
        vals, vecs = symmetric_eigendecomposition(m, 6)
        np.testing.assert_allclose(vecs @ np.diag(vals) @ vecs.T, m, atol=1e-10)

    @pytest.mark.property
    @pytest.mark.parametrize("n", [1, 5, 40, 200])
    def test_residual_and_orthonormality(self, n, rng):
        a = rng.standard_normal((n, n))
        m = (a + a.T) / 2
        k = max(1, n // 3)
        vals, vecs = symmetric_eigendecomposition(m, k)
        norm = np.linalg.norm(m, 2)
        for i in range(k):
            assert np.linalg.norm(m @ vecs[:, i] - vals[i] * vecs[:, i]) <= 1e-10 * norm
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(k), atol=1e-10)
        assert np.all(np.diff(vals) <= 0)

    def test_rejects_asymmetric(self):
        with pytest.raises(ContractViolation):
            symmetric_eigendecomposition(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)

    def test_rejects_bad_k(self):
        with pytest.raises(ContractViolation):
            symmetric_eigendecomposition(np.eye(3), 4)

    def test_numerical_error_carries_iterations(self):
        err = NumericalError("boom", 7)
        assert err.iterations == 7


class TestStableArgmax:
    def test_unique_max_does_not_touch_rng(self):
        rng = np.random.default_rng(1)
        state = rng.bit_generator.state
        assert stable_argmax([0.1, 0.7, 0.2], rng) == 1
        assert rng.bit_generator.state == state

    @pytest.mark.property
    def test_tie_uniform(self):
        rng = np.random.default_rng(2)
        draws = np.array([stable_argmax([0.5, 0.2, 0.5, 0.5], rng) for _ in range(10_000)])
        assert set(draws.tolist()) == {0, 2, 3}
        for i in (0, 2, 3):
            assert abs((draws == i).mean() - 1 / 3) <= 0.02

    def test_deterministic_for_same_seed(self):
        a = [stable_argmax([1.0, 1.0], np.random.default_rng(5)) for _ in range(3)]
        assert len(set(a)) == 1

    def test_rejects_empty_and_nan(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ContractViolation):
            stable_argmax([], rng)
        with pytest.raises(ContractViolation):
            stable_argmax([1.0, np.nan], rng)

    @pytest.mark.property
    @given(labels_st)
    def test_returns_a_maximizer(self, values):
        i = stable_argmax(values, np.random.default_rng(0))
        assert values[i] == max(values)
