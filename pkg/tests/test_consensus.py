from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecpcs import _kernels
from ecpcs.coassoc import coassociation, enhanced_coassociation
from ecpcs.consensus import (
    MetaClustering,
    eac_baseline,
    hc_build_dendrogram,
    hc_cut,
    mc_partition,
    mc_vote,
    voting_scores,
)
from ecpcs.core import ContractViolation, Ensemble
from ecpcs.metrics import ari, nmi
from ecpcs.propagation import cluster_similarity
from oracles import exhaustive_best_bipartition, naive_average_link, same_partition

BLOCK4 = np.array(
    [
        [1.0, 0.9, 0.1, 0.1],
        [0.9, 1.0, 0.1, 0.1],
        [0.1, 0.1, 1.0, 0.8],
        [0.1, 0.1, 0.8, 1.0],
    ]
)

# five objects, three members; meta-clusters {g0,g2,g4} and {g1,g3,g5,g6}
VOTE_ENS = [[0, 0, 1, 1, 1], [0, 0, 0, 1, 1], [0, 1, 1, 2, 2]]
VOTE_MC = MetaClustering(2, np.array([0, 1, 0, 1, 0, 1, 1]))


def random_similarity(rng, n):
    B = rng.random((n, n))
    B = (B + B.T) / 2
    np.fill_diagonal(B, 1.0)
    return B


def leaf_sets(d):
    regions = {i: [i] for i in range(d.n_leaves)}
    out = []
    for a, b, s, new in d.merges:
        out.append((regions[a], regions[b], s))
        regions[new] = regions.pop(a) + regions.pop(b)
    return out


class TestDendrogram:
    def test_two_objects(self, backend):
        d = hc_build_dendrogram(np.array([[1.0, 0.3], [0.3, 1.0]]), backend=backend)
        assert d.merges == [(0, 1, 0.3, 2)]

    def test_block_example(self, backend):
        d = hc_build_dendrogram(BLOCK4, backend=backend)
        assert [(a, b, new) for a, b, _, new in d.merges] == [(0, 1, 4), (2, 3, 5), (4, 5, 6)]
        np.testing.assert_allclose(d.similarity, [0.9, 0.8, 0.1], atol=1e-15)

    def test_all_equal_ties_go_to_smallest_pair(self, backend):
        B = np.full((4, 4), 0.5)
        np.fill_diagonal(B, 1.0)
        d = hc_build_dendrogram(B, backend=backend)
        assert [(a, b) for a, b, _, _ in d.merges] == [(0, 1), (2, 3), (4, 5)]

    def test_rejects_asymmetric_or_tiny(self):
        with pytest.raises(ContractViolation):
            hc_build_dendrogram(np.array([[1.0, 0.2], [0.3, 1.0]]))
        with pytest.raises(ContractViolation):
            hc_build_dendrogram(np.ones((1, 1)))

    @pytest.mark.oracle
    @pytest.mark.parametrize("n", [3, 9, 25, 50])
    def test_matches_recompute_oracle(self, n, backend, rng):
        B = random_similarity(rng, n)
        d = hc_build_dendrogram(B, backend=backend)
        want = naive_average_link(B.tolist())
        assert [(a, b) for a, b, _, _ in d.merges] == [(a, b) for a, b, _ in want]
        np.testing.assert_allclose(d.similarity, [s for _, _, s in want], rtol=0, atol=1e-12)

    @pytest.mark.oracle
    @pytest.mark.parametrize("n", [6, 20])
    def test_matches_oracle_on_block_matrix_with_ties(self, n, backend, rng):
        y = rng.integers(0, 3, n)
        B = (y[:, None] == y[None, :]).astype(float)
        d = hc_build_dendrogram(B, backend=backend)
        want = naive_average_link(B.tolist())
        assert [(a, b, s) for a, b, s, _ in d.merges] == want

    @pytest.mark.property
    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 30), st.integers(0, 2**32 - 1))
    def test_merge_similarity_is_cross_pair_mean(self, n, seed):
        B = random_similarity(np.random.default_rng(seed), n)
        d = hc_build_dendrogram(B)
        for ra, rb, s in leaf_sets(d):
            direct = math.fsum(B[u, v] for u in ra for v in rb) / (len(ra) * len(rb))
            assert abs(s - direct) <= 1e-12

    @pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
    @pytest.mark.parametrize("kind", ["random", "coassoc"])
    def test_backends_bit_identical(self, kind, rng):
        if kind == "random":
            B = random_similarity(rng, 80)
        else:
            B = coassociation(Ensemble.from_assignments(rng.integers(0, 4, (3, 80))))
        a = hc_build_dendrogram(B, backend="numpy")
        b = hc_build_dendrogram(B, backend="numba")
        assert np.array_equal(a.left, b.left) and np.array_equal(a.right, b.right)
        assert np.array_equal(a.similarity, b.similarity)


class TestCut:
    def test_block_cuts(self):
        d = hc_build_dendrogram(BLOCK4)
        assert hc_cut(d, 2).labels.tolist() == [0, 0, 1, 1]
        assert hc_cut(d, 1).labels.tolist() == [0, 0, 0, 0]
        assert hc_cut(d, 4).labels.tolist() == [0, 1, 2, 3]
        assert hc_cut(d, 3).labels.tolist() == [0, 0, 1, 2]

    def test_rejects_bad_k(self):
        d = hc_build_dendrogram(BLOCK4)
        for k in (0, 5):
            with pytest.raises(ContractViolation):
                hc_cut(d, k)

    @pytest.mark.property
    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 25), st.integers(0, 2**32 - 1), st.data())
    def test_cut_has_k_clusters(self, n, seed, data):
        d = hc_build_dendrogram(random_similarity(np.random.default_rng(seed), n))
        k = data.draw(st.integers(1, n))
        labels = hc_cut(d, k).labels
        assert len(set(labels.tolist())) == k
        assert labels[0] == 0


class TestMetaClustering:
    @pytest.mark.property
    def test_block_recovery(self, rng):
        y = np.array([0, 0, 0, 1, 1, 1, 2, 2])
        Z = np.where(y[:, None] == y[None, :], 0.9, 0.05)
        np.fill_diagonal(Z, 1.0)
        mc = mc_partition(Z, 3, rng)
        assert same_partition(mc.assignment, y)
        assert not mc.degenerate

    @pytest.mark.oracle
    @pytest.mark.parametrize("seed", range(12))
    def test_matches_exhaustive_ncut(self, seed):
        rng = np.random.default_rng(seed)
        y = rng.permutation([0, 0, 0, 1, 1, 1] if seed % 2 else [0, 0, 1, 1, 1, 1])
        noise = rng.random((6, 6)) * 0.25
        Z = np.where(y[:, None] == y[None, :], 0.7, 0.05) + (noise + noise.T) / 2
        np.fill_diagonal(Z, 1.0)
        W = Z.copy()
        np.fill_diagonal(W, 0.0)
        _, best = exhaustive_best_bipartition(W.tolist())
        mc = mc_partition(Z, 2, rng)
        assert same_partition(mc.assignment, best)

    def test_zero_degree_node_joins_largest(self, rng):
        y = np.array([0, 0, 0, 1, 1, -1])
        Z = np.where((y[:, None] == y[None, :]) & (y[:, None] >= 0), 0.9, 0.0)
        np.fill_diagonal(Z, 1.0)
        mc = mc_partition(Z, 2, rng)
        assert mc.assignment[5] == mc.assignment[0]
        assert same_partition(mc.assignment[:5], y[:5])

    def test_contract_errors(self, rng):
        with pytest.raises(ContractViolation):
            mc_partition(np.eye(4), 2, rng)  # no edges at all
        with pytest.raises(ContractViolation):
            mc_partition(np.ones((3, 3)), 1, rng)
        with pytest.raises(ContractViolation):
            mc_partition(np.ones((3, 3)), 4, rng)


class TestVoting:
    @pytest.mark.oracle
    def test_worked_scores(self):
        scores = voting_scores(Ensemble.from_assignments(VOTE_ENS), VOTE_MC)
        want = [[1, 0], [2 / 3, 1 / 4], [1 / 3, 1 / 2], [0, 3 / 4], [0, 3 / 4]]
        np.testing.assert_allclose(scores, want, atol=1e-15)

    def test_worked_labels(self, rng):
        res = mc_vote(Ensemble.from_assignments(VOTE_ENS), VOTE_MC, rng)
        assert res.labels.tolist() == [0, 0, 1, 1, 1]
        assert res.provenance["tie_events"] == 0

    def test_tie_is_random_and_reported(self):
        ens = Ensemble.from_assignments([[0, 1]] * 3)
        mc = MetaClustering(2, np.array([0, 0, 0, 0, 1, 1]))
        np.testing.assert_allclose(voting_scores(ens, mc), [[0.5, 0.5], [0.5, 0.5]])
        outcomes = set()
        for seed in range(30):
            res = mc_vote(ens, mc, np.random.default_rng(seed))
            assert res.provenance["tie_events"] == 2
            outcomes.add(res.n_clusters)
        assert outcomes == {1, 2}

    def test_empty_meta_cluster_counted(self, rng):
        ens = Ensemble.from_assignments([[0, 0, 1]] * 2)
        res = mc_vote(ens, MetaClustering(3, np.array([0, 1, 0, 1])), rng)
        assert res.provenance["empty_meta_clusters"] == 1

    @pytest.mark.property
    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 12), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_score_mass_identity(self, n, M, seed):
        rng = np.random.default_rng(seed)
        ens = Ensemble.from_assignments(rng.integers(0, 3, (M, n)))
        k = int(rng.integers(1, ens.n_clusters_total + 1))
        mc = MetaClustering(k, rng.integers(0, k, ens.n_clusters_total))
        scores = voting_scores(ens, mc)
        np.testing.assert_allclose(scores @ mc.sizes, np.full(n, M), atol=1e-12)


class TestPipeline:
    @pytest.mark.property
    @pytest.mark.parametrize("M", [3, 6])
    def test_identical_members_self_consistency(self, M, backend, rng):
        base = np.array([0, 0, 1, 1, 1, 2, 2, 3, 3, 3])
        ens = Ensemble.from_assignments([base] * M)
        _, _, Z = cluster_similarity(ens, t=10)
        A = coassociation(ens, backend=backend)
        B = enhanced_coassociation(ens, Z, backend=backend)
        assert np.array_equal(A, B)
        hc = hc_cut(hc_build_dendrogram(B, backend=backend), 4)
        mc = mc_vote(ens, mc_partition(Z, 4, rng), rng)
        for labels in (hc.labels, mc.labels):
            assert nmi(labels, base) == 1.0
            assert ari(labels, base) == 1.0

    def test_eac_is_hc_on_plain_coassociation(self, rng):
        ens = Ensemble.from_assignments(rng.integers(0, 4, (6, 40)))
        A = coassociation(ens)
        eac = eac_baseline(A, 3)
        hc = hc_cut(hc_build_dendrogram(enhanced_coassociation(ens, np.eye(ens.n_clusters_total))), 3)
        assert eac.method == "EAC"
        assert np.array_equal(eac.labels, hc.labels)

    def test_mc_deterministic_for_seed(self):
        ens = Ensemble.from_assignments(np.random.default_rng(3).integers(0, 5, (8, 60)))
        _, _, Z = cluster_similarity(ens, t=5)
        runs = []
        for _ in range(2):
            r = np.random.default_rng(11)
            runs.append(mc_vote(ens, mc_partition(Z, 3, r), r).labels)
        assert np.array_equal(*runs)
