import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otnn.data import Dataset, make_uniform_measure, normalize_embeddings
from otnn.errors import MappingError, ValidationError
from otnn.neighbors import (
    build_index,
    compute_neighbor_sets,
    knn_ranking_predict,
    neighborhood_mask,
    preselect_sources,
    query_topk,
    weighted_knn_predict,
)
from otnn.solver import OTParams, sinkhorn_unbalanced

from conftest import make_dataset, unit_rows


def dataset_from(emb, labels=None, ids=None):
    emb = np.asarray(emb, dtype=np.float64)
    n = emb.shape[0]
    if labels is None:
        labels = np.zeros(n, dtype=np.int64)
    if ids is None:
        ids = np.arange(n, dtype=np.int64)
    return Dataset(np.asarray(ids), np.asarray(labels), emb)


class TestIndex:
    def test_single_instance_always_returned(self):
        d = dataset_from([[1.0, 0.0]])
        index = build_index(d)
        ids, sims = query_topk(index, np.array([0.0, 1.0]), k=3)
        assert list(ids) == [0]

    def test_size_bookkeeping(self, rng):
        d = make_dataset(rng, n=17, dim=4)
        assert build_index(d).n == 17

    def test_self_similarity_rank_one(self, rng):
        d = make_dataset(rng, n=10, dim=6)
        index = build_index(d)
        ids, sims = query_topk(index, d.embeddings[4], k=3)
        assert ids[0] == d.ids[4]
        assert sims[0] == pytest.approx(1.0, abs=1e-9)

    def test_unnormalized_rejected(self, rng):
        d = Dataset(np.arange(2), np.zeros(2, dtype=np.int64), np.array([[2.0, 0.0], [0.0, 1.0]]))
        with pytest.raises(ValidationError):
            build_index(d)


class TestQueryTopk:
    def test_near_duplicate_wins(self, rng):
        base = np.array([1.0, 0.0, 0.0])
        near = normalize_embeddings(
            dataset_from([base + 0.01 * np.array([0.0, 1.0, 0.0])])
        ).embeddings[0]
        distractors = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        d = dataset_from(np.vstack([distractors, near]))
        ids, _ = query_topk(build_index(d), base, k=1)
        assert ids[0] == 2

    def test_k_larger_than_corpus(self, rng):
        d = make_dataset(rng, n=4, dim=3)
        ids, sims = query_topk(build_index(d), d.embeddings[0], k=100)
        assert len(ids) == 4
        assert all(sims[i] >= sims[i + 1] for i in range(3))

    def test_matches_exhaustive_sort(self, rng):
        d = make_dataset(rng, n=5, dim=4)
        index = build_index(d)
        q = unit_rows(rng, 1, 4)[0]
        ids, sims = query_topk(index, q, k=3)
        # oracle: full sort by (-sim, id)
        all_sims = d.embeddings @ q
        order = sorted(range(5), key=lambda i: (-all_sims[i], d.ids[i]))[:3]
        assert list(ids) == [d.ids[i] for i in order]

    def test_tie_break_ascending_id(self):
        v = np.array([1.0, 0.0])
        d = dataset_from([v, v, v], ids=[5, 2, 9])
        ids, sims = query_topk(build_index(d), v, k=2)
        assert list(ids) == [2, 5]

    def test_k_zero_rejected(self, rng):
        d = make_dataset(rng, n=3, dim=3)
        with pytest.raises(ValidationError):
            query_topk(build_index(d), d.embeddings[0], k=0)

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=25, deadline=None)
    def test_exactness_on_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        n, dim, k = 12, 5, 4
        d = make_dataset(rng, n=n, dim=dim)
        q = unit_rows(rng, 1, dim)[0]
        ids, sims = query_topk(build_index(d), q, k=k)
        all_sims = d.embeddings @ q
        order = sorted(range(n), key=lambda i: (-all_sims[i], d.ids[i]))[:k]
        assert list(ids) == [int(d.ids[i]) for i in order]


def single_target_neighbors(target_id, neighbor_ids):
    """NeighborSet with one target row, for masking tests."""
    from otnn.neighbors import NeighborSet

    nbr = np.asarray(neighbor_ids, dtype=np.int64).reshape(1, -1)
    sims = np.linspace(1.0, 0.5, nbr.shape[1]).reshape(1, -1)
    return NeighborSet(np.array([target_id]), nbr, sims, nbr.shape[1])


def neighbor_set_from_pairs(pairs, target_ids, k=8):
    """NeighborSet mapping each target id to its allowed source ids."""
    from otnn.neighbors import NeighborSet

    per_target = {t: [] for t in target_ids}
    for s, t in pairs:
        per_target[t].append(s)
    width = max(len(v) for v in per_target.values())
    nbr = np.full((len(target_ids), width), -1, dtype=np.int64)
    sims = np.zeros((len(target_ids), width))
    for row, t in enumerate(target_ids):
        for col, s in enumerate(sorted(per_target[t])):
            nbr[row, col] = s
            sims[row, col] = 1.0 - 0.01 * col
    return NeighborSet(np.asarray(target_ids), nbr, sims, width)


class TestMask:
    def test_forced_example(self):
        C = np.array([[1.0, 2.0], [3.0, 4.0]])
        nbrs = neighbor_set_from_pairs([(0, 0), (1, 1)], [0, 1])
        out = neighborhood_mask(C, nbrs, [0, 1], [0, 1])
        np.testing.assert_array_equal(out, [[1.0, 4.0], [4.0, 4.0]])

    def test_everyone_neighbor_no_change(self, rng):
        C = rng.random((3, 3))
        pairs = [(s, t) for s in range(3) for t in range(3)]
        nbrs = neighbor_set_from_pairs(pairs, [0, 1, 2])
        out = neighborhood_mask(C, nbrs, [0, 1, 2], [0, 1, 2])
        np.testing.assert_array_equal(out, C)

    def test_constant_cost_unchanged(self):
        C = np.full((2, 2), 7.0)
        nbrs = neighbor_set_from_pairs([(0, 0)], [0, 1])
        out = neighborhood_mask(C, nbrs, [0, 1], [0, 1])
        np.testing.assert_array_equal(out, C)

    def test_idempotent(self, rng):
        C = rng.random((3, 2))
        nbrs = neighbor_set_from_pairs([(0, 0), (2, 1)], [0, 1])
        once = neighborhood_mask(C, nbrs, [0, 1, 2], [0, 1])
        twice = neighborhood_mask(once, nbrs, [0, 1, 2], [0, 1])
        np.testing.assert_array_equal(once, twice)

    def test_never_decreases(self, rng):
        C = rng.random((4, 3))
        nbrs = neighbor_set_from_pairs([(0, 0), (1, 1), (2, 2)], [0, 1, 2])
        out = neighborhood_mask(C, nbrs, [0, 1, 2, 3], [0, 1, 2])
        assert np.all(out >= C - 1e-15)

    def test_unknown_target_id(self, rng):
        C = rng.random((2, 2))
        nbrs = neighbor_set_from_pairs([(0, 0)], [0])
        with pytest.raises(MappingError):
            neighborhood_mask(C, nbrs, [0, 1], [0, 99])


class TestVoting:
    def build(self, vectors, labels):
        d = normalize_embeddings(dataset_from(vectors, labels=labels))
        return build_index(d)

    def test_strict_majority(self):
        index = self.build(
            [[1.0, 0.0], [1.0, 0.1], [1.0, -0.1]], [1, 1, 0]
        )
        q = np.array([1.0, 0.0])
        assert knn_ranking_predict(index, q, 3) == 1

    def test_tie_falls_back_to_weighted(self):
        # two neighbors, labels {1, 0}, the label-1 one closer
        index = self.build([[1.0, 0.0], [0.9, 0.435889894354067]], [1, 0])
        q = np.array([1.0, 0.0])
        assert knn_ranking_predict(index, q, 2) == 1

    def test_k1_returns_nearest_label(self):
        index = self.build([[1.0, 0.0], [0.0, 1.0]], [0, 1])
        assert knn_ranking_predict(index, np.array([0.1, 0.9949874371066199]), 1) == 1

    def test_weighted_sum_comparison(self):
        # class-1 sim 0.9; class-0 sims 0.5 + 0.45 = 0.95 > 0.9
        c, s = 0.9, np.sqrt(1 - 0.81)
        v1 = [c, s]
        v2 = [0.5, np.sqrt(0.75)]
        v3 = [0.45, np.sqrt(1 - 0.2025)]
        index = self.build([v1, v2, v3], [1, 0, 0])
        q = np.array([1.0, 0.0])
        sims = build_index(normalize_embeddings(dataset_from([v1, v2, v3]))).embeddings @ q
        assert sims[0] == pytest.approx(0.9)
        assert weighted_knn_predict(index, q, 3) == 0

    def test_unopposed_class(self, rng):
        index = self.build([[1.0, 0.0], [0.9, 0.435889894354067]], [1, 1])
        assert weighted_knn_predict(index, np.array([1.0, 0.0]), 2) == 1

    def test_exact_tie_prefers_lower_class(self):
        index = self.build([[1.0, 0.0], [0.0, 1.0]], [1, 0])
        q = np.array([np.sqrt(0.5), np.sqrt(0.5)])
        assert weighted_knn_predict(index, q, 2) == 0

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=30, deadline=None)
    def test_matches_brute_force_voting(self, seed):
        rng = np.random.default_rng(seed)
        n, dim, k = 10, 4, 5
        d = make_dataset(rng, n=n, dim=dim)
        index = build_index(d)
        q = unit_rows(rng, 1, dim)[0]
        sims = d.embeddings @ q
        order = sorted(range(n), key=lambda i: (-sims[i], d.ids[i]))[:k]
        top_labels = d.labels[order]
        top_sims = sims[order]
        # brute-force weighted vote
        w = [top_sims[top_labels == c].sum() for c in (0, 1)]
        expected_weighted = int(np.argmax(w))
        assert weighted_knn_predict(index, q, k) == expected_weighted
        counts = np.bincount(top_labels, minlength=2)
        expected_majority = (
            expected_weighted if counts[0] == counts[1] else int(np.argmax(counts))
        )
        assert knn_ranking_predict(index, q, k) == expected_majority

    def test_scale_invariance_of_weighted_argmax(self, rng):
        # argmax of summed similarities is invariant under positive scaling
        labels = rng.integers(0, 2, 7)
        sims = rng.random(7)
        w = [sims[labels == c].sum() for c in (0, 1)]
        w2 = [2.0 * sims[labels == c].sum() for c in (0, 1)]
        assert int(np.argmax(w)) == int(np.argmax(w2))


class TestPreselect:
    def test_shared_neighbors_union(self, rng):
        d = make_dataset(rng, n=6, dim=4)
        index = build_index(d)
        q = make_dataset(rng, n=2, dim=4)
        # force identical queries -> identical neighbor sets
        emb = np.vstack([q.embeddings[0], q.embeddings[0]])
        targets = Dataset(np.arange(2), np.zeros(2, dtype=np.int64), emb)
        nbrs = compute_neighbor_sets(index, targets, k=3)
        assert len(preselect_sources(nbrs)) == 3

    def test_disjoint_union(self):
        from otnn.neighbors import NeighborSet

        nbrs = NeighborSet(
            np.array([0, 1]),
            np.array([[1, 2], [3, 4]]),
            np.full((2, 2), 0.5),
            2,
        )
        assert list(preselect_sources(nbrs)) == [1, 2, 3, 4]

    def test_matches_exhaustive_recomputation(self, rng):
        src = make_dataset(rng, n=20, dim=5)
        tgt = make_dataset(rng, n=7, dim=5)
        index = build_index(src)
        nbrs = compute_neighbor_sets(index, tgt, k=4)
        got = set(preselect_sources(nbrs).tolist())
        expected = set()
        for q in tgt.embeddings:
            sims = src.embeddings @ q
            order = sorted(range(20), key=lambda i: (-sims[i], src.ids[i]))[:4]
            expected.update(int(src.ids[i]) for i in order)
        assert got == expected


class TestTransferOrdering:
    def test_label_match_gets_more_mass(self):
        # both sources equidistant from both targets; labels crossed
        s0 = np.array([1.0, 0.0])
        s1 = np.array([0.0, 1.0])
        t0 = (s0 + s1) / np.linalg.norm(s0 + s1)
        t1 = -t0
        from otnn.solver import squared_l2_cost
        from otnn.trainer import jdot_cost, label_disagreement

        ed = squared_l2_cost([s0, s1], [t0, t1])
        np.testing.assert_allclose(ed[:, 0], ed[0, 0])  # column-constant
        lc = label_disagreement([0, 1], [0, 1])
        C = jdot_cost(ed, lc, 0.05, 10.0, True, True)
        pairs = [(0, 0), (0, 1), (1, 0), (1, 1)]
        nbrs = neighbor_set_from_pairs(pairs, [0, 1])
        C = neighborhood_mask(C, nbrs, [0, 1], [0, 1])
        plan = sinkhorn_unbalanced(
            C, make_uniform_measure(2), make_uniform_measure(2),
            OTParams(0.2, lam=0.5, tol=1e-10, max_iter=5000),
        )
        g = plan.matrix
        assert g[0, 0] + g[1, 1] > g[0, 1] + g[1, 0]
        assert g[0, 0] > g[1, 0] and g[1, 1] > g[0, 1]
