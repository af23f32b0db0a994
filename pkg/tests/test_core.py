"""Ranking algebra: ranks, preference order, and their structural properties."""

import numpy as np
import pytest

from bmatch.core import Adjacency, Instance, acceptable_rank, complete_rank, prefers
from conftest import KIND_PARAMS, complete_node_instance, explicit_instance, random_instance


def torus1_instance(points, edges):
    pts = np.asarray(points, dtype=float)
    diff = np.abs(pts[:, None] - pts[None, :])
    marks = np.minimum(diff, 1.0 - diff)
    np.fill_diagonal(marks, np.inf)
    return explicit_instance(marks, edges, kind="torus")


class TestCompleteRank:
    def test_node_based_global_best(self):
        inst = complete_node_instance(5)
        assert complete_rank(inst, 3, 1) == 1

    def test_node_based_worst(self):
        inst = complete_node_instance(5)
        assert complete_rank(inst, 1, 5) == 4

    def test_geometric_by_torus_distance(self):
        # distances from node 1: 0.1 to node 2, 0.4 to node 3
        inst = torus1_instance([0.0, 0.1, 0.4], [(1, 2), (1, 3), (2, 3)])
        assert complete_rank(inst, 1, 3) == 2
        assert complete_rank(inst, 1, 2) == 1

    def test_reflexive_rank_rejected(self):
        inst = complete_node_instance(4)
        with pytest.raises(ValueError):
            complete_rank(inst, 2, 2)

    @pytest.mark.parametrize("kind,dim", KIND_PARAMS)
    @pytest.mark.parametrize("seed", [0, 1])
    def test_bijection_onto_1_to_nminus1(self, kind, dim, seed):
        inst = random_instance(kind, 9, 0.6, dim=dim, seed=seed)
        for i in range(1, 10):
            ranks = sorted(complete_rank(inst, i, j) for j in range(1, 10) if j != i)
            assert ranks == list(range(1, 9))


class TestAcceptableRank:
    def test_single_neighbor(self):
        inst = torus1_instance([0.0, 0.3, 0.6], [(1, 2)])
        assert acceptable_rank(inst, 1, 2) == 1

    def test_coincides_with_complete_rank_on_complete_graph(self):
        for kind, dim in KIND_PARAMS:
            inst = random_instance(kind, 7, 1.0, dim=dim, seed=3)
            for i in range(1, 8):
                for j in range(1, 8):
                    if i != j:
                        assert acceptable_rank(inst, i, j) == complete_rank(inst, i, j)

    def test_node_based_neighbor_list(self):
        inst = _node_with_edges(4, [(1, 4), (3, 4)])
        assert acceptable_rank(inst, 4, 3) == 2
        assert acceptable_rank(inst, 4, 1) == 1

    def test_not_acceptable_is_none(self):
        inst = _node_with_edges(4, [(1, 4)])
        assert acceptable_rank(inst, 1, 2) is None

    def test_order_preserving_vs_prefers(self):
        for kind, dim in KIND_PARAMS:
            inst = random_instance(kind, 12, 0.5, dim=dim, seed=7)
            for i in range(1, 13):
                nbrs = [int(x) for x in inst.acceptance.neighbors_of(i)]
                for a in nbrs:
                    for b in nbrs:
                        if a != b:
                            ra = acceptable_rank(inst, i, a)
                            rb = acceptable_rank(inst, i, b)
                            assert (ra < rb) == prefers(inst, i, a, b)


def _node_with_edges(n, edges):
    e = np.asarray([(a - 1, b - 1) for a, b in edges], dtype=np.int64)
    return Instance(
        n_nodes=n,
        quota=np.ones(n, dtype=np.int64),
        kind="node",
        acceptance=Adjacency.from_edges(n, e),
    )


class TestPrefers:
    def test_node_based_lower_label(self):
        inst = complete_node_instance(5)
        assert prefers(inst, 5, 2, 3)
        assert not prefers(inst, 5, 3, 2)

    def test_irreflexive(self):
        inst = complete_node_instance(5)
        assert not prefers(inst, 1, 3, 3)

    def test_tie_break_lower_pair_wins(self):
        marks = np.full((3, 3), np.inf)
        marks[0, 1] = marks[1, 0] = 0.2
        marks[0, 2] = marks[2, 0] = 0.2
        marks[1, 2] = marks[2, 1] = 0.9
        inst = explicit_instance(marks, [(1, 2), (1, 3), (2, 3)])
        assert prefers(inst, 1, 2, 3)       # equal marks, (1,2) < (1,3)
        assert not prefers(inst, 1, 3, 2)
        assert complete_rank(inst, 1, 2) == 1
        assert complete_rank(inst, 1, 3) == 2

    @pytest.mark.parametrize("kind,dim", KIND_PARAMS)
    @pytest.mark.parametrize("seed", [0, 5])
    def test_totality_and_transitivity(self, kind, dim, seed):
        inst = random_instance(kind, 10, 0.7, dim=dim, seed=seed)
        rng = np.random.default_rng(seed)
        nodes = np.arange(1, 11)
        for _ in range(200):
            i, j, k = rng.choice(nodes, size=3, replace=False)
            i, j, k = int(i), int(j), int(k)
            assert prefers(inst, i, j, k) != prefers(inst, i, k, j)
        for _ in range(100):
            i, a, b, c = (int(x) for x in rng.choice(nodes, size=4, replace=False))
            if prefers(inst, i, a, b) and prefers(inst, i, b, c):
                assert prefers(inst, i, a, c)


class TestInstanceValidation:
    def test_rejects_asymmetric_marks(self):
        marks = np.full((3, 3), np.inf)
        marks[0, 1], marks[1, 0] = 0.3, 0.4
        with pytest.raises(ValueError, match="symmetric"):
            explicit_instance(marks, [(1, 2)])

    def test_rejects_nan_marks(self):
        marks = np.full((3, 3), np.inf)
        marks[0, 1] = marks[1, 0] = np.nan
        marks[0, 2] = marks[2, 0] = 0.2
        marks[1, 2] = marks[2, 1] = 0.2
        with pytest.raises(ValueError, match="NaN"):
            explicit_instance(marks, [(1, 2)])

    def test_rejects_self_loops(self):
        with pytest.raises(ValueError, match="self-loops"):
            Adjacency.from_edges(3, np.array([[1, 1]]))

    def test_adjacency_symmetry(self):
        inst = random_instance("acyclic", 20, 0.3, seed=2)
        for i in range(1, 21):
            for j in inst.acceptance.neighbors_of(i):
                assert inst.acceptance.has_edge(int(j), i)

    def test_arrays_frozen(self):
        inst = random_instance("torus", 6, 0.5, seed=1)
        with pytest.raises(ValueError):
            inst.marks[0, 1] = 0.0
        with pytest.raises(ValueError):
            inst.quota[0] = 5
