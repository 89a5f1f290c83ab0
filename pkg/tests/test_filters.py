import itertools
import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corrnet.correlation import DistanceMatrix
from corrnet.errors import MethodError, SizeError
from corrnet.filters import (
    FilteredNetwork, asset_graph, build, canonical_method, mast, mst, tmfg, tmfg_seed, ultrametric,
)

from conftest import distance_from_pairs, random_distance
from oracles import greedy_tmfg_edge_sets, tree_weight_extremes

K3 = distance_from_pairs("ABC", {("A", "B"): 1.0, ("A", "C"): 2.0, ("B", "C"): 3.0})


def named_edges(g):
    return {g.names[i] + g.names[j] for i, j, _ in g.edges}


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from((i, j) for i, j, _ in g.edges)
    return h


class TestSpanningTrees:
    def test_mst_k3(self):
        g = mst(K3)
        assert named_edges(g) == {"AB", "AC"} and g.total_weight() == 3.0
        assert tree_weight_extremes(K3.d)[0] == 3.0

    def test_mast_k3(self):
        g = mast(K3)
        assert named_edges(g) == {"AC", "BC"} and g.total_weight() == 5.0
        assert tree_weight_extremes(K3.d)[1] == 5.0

    def test_two_nodes(self):
        dm = DistanceMatrix(["a", "b"], [[0, 0.4], [0.4, 0]])
        for f in (mst, mast, asset_graph):
            assert f(dm).edges == ((0, 1, 0.4),)

    def test_all_equal_weights_lexicographic(self):
        dm = DistanceMatrix(list("abcd"), np.ones((4, 4)) - np.eye(4))
        assert mast(dm).edge_set() == {(0, 1), (0, 2), (0, 3)}
        assert mst(dm).edge_set() == {(0, 1), (0, 2), (0, 3)}

    def test_seventeen_nodes(self):
        dm = random_distance(np.random.default_rng(0), 17)
        for f in (mst, mast):
            g = f(dm)
            assert g.n_edges == 16 and g.is_spanning_tree()
            assert nx.is_tree(to_nx(g))

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_brute_force_extremes(self, n):
        rng = np.random.default_rng(n)
        for _ in range(10):
            dm = random_distance(rng, n)
            lo, hi = tree_weight_extremes(dm.d)
            assert mst(dm).total_weight() == pytest.approx(lo, abs=1e-12)
            assert mast(dm).total_weight() == pytest.approx(hi, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(3, 12))
    def test_duality(self, seed, n):
        dm = random_distance(np.random.default_rng(seed), n)
        iu = np.triu_indices(n, 1)
        flipped = dm.d[iu].max() + dm.d[iu].min() - dm.d
        np.fill_diagonal(flipped, 0.0)
        assert mst(dm).edge_set() == mast(DistanceMatrix(dm.names, flipped)).edge_set()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(4, 12), st.floats(-0.04, 0.04))
    def test_constant_shift_invariance(self, seed, n, shift):
        dm = random_distance(np.random.default_rng(seed), n)
        shifted = DistanceMatrix(dm.names, dm.d + shift * (1 - np.eye(n)))
        for f in (mst, mast, asset_graph, tmfg):
            assert f(dm).edge_set() == f(shifted).edge_set()


class TestAssetGraph:
    def test_k3(self):
        assert named_edges(asset_graph(K3)) == {"AB", "AC"}

    def test_triangle_isolates_node(self):
        dm = distance_from_pairs("ABCD", {
            ("A", "B"): 0.1, ("A", "C"): 0.2, ("B", "C"): 0.3,
            ("A", "D"): 1.5, ("B", "D"): 1.6, ("C", "D"): 1.7,
        })
        g = asset_graph(dm)
        assert named_edges(g) == {"AB", "AC", "BC"}
        assert g.degrees()[3] == 0
        assert not g.is_connected()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 17))
    def test_lighter_than_mst(self, seed, n):
        dm = random_distance(np.random.default_rng(seed), n)
        ag = asset_graph(dm)
        assert ag.n_edges == n - 1
        assert ag.total_weight() <= mst(dm).total_weight() + 1e-12


class TestTmfg:
    def test_four_nodes_is_complete(self):
        g = tmfg(random_distance(np.random.default_rng(1), 4))
        assert g.edge_set() == set(itertools.combinations(range(4), 2))

    def test_too_small(self):
        with pytest.raises(SizeError):
            tmfg(K3)

    @pytest.mark.parametrize("n", [4, 5, 8, 17, 30])
    def test_edge_count_and_planarity(self, n):
        g = tmfg(random_distance(np.random.default_rng(n), n))
        assert g.n_edges == 3 * (n - 2)
        h = to_nx(g)
        assert nx.check_planarity(h)[0]
        assert nx.is_connected(h)

    def test_seed_is_best_clique(self):
        dm = random_distance(np.random.default_rng(5), 9)
        s = 2 - dm.d
        best = max(itertools.combinations(range(9), 4),
                   key=lambda q: sum(s[a, b] for a, b in itertools.combinations(q, 2)))
        assert tmfg_seed(s) == best

    @pytest.mark.parametrize("n", [5, 6])
    def test_greedy_oracle(self, n):
        rng = np.random.default_rng(100 + n)
        for _ in range(5 if n == 6 else 20):
            dm = random_distance(rng, n)
            greedy, every = greedy_tmfg_edge_sets(dm.d)
            assert len(greedy) == 1
            assert tmfg(dm).edge_set() in every
            assert {tmfg(dm).edge_set()} == greedy


class TestUltrametric:
    def test_path(self):
        tree = FilteredNetwork("ABC", ((0, 1, 1.0), (1, 2, 2.0)), "MST")
        assert ultrametric(tree).d[0, 2] == 2.0

    def test_k3_tree_path(self):
        u = ultrametric(mst(K3))
        assert u.d[1, 2] == 2.0  # B-A-C

    def test_rejects_non_trees(self):
        with pytest.raises(MethodError):
            ultrametric(tmfg(random_distance(np.random.default_rng(0), 5)))
        with pytest.raises(MethodError):
            ultrametric(FilteredNetwork("ABCD", ((0, 1, 1.0), (1, 2, 1.0)), "MST"))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(3, 10))
    def test_subdominant_properties(self, seed, n):
        dm = random_distance(np.random.default_rng(seed), n)
        u = ultrametric(mst(dm)).d
        for i, j, k in itertools.permutations(range(n), 3):
            assert u[i, j] <= max(u[i, k], u[k, j])
        assert np.all(u <= dm.d + 1e-15)


def test_method_names():
    assert canonical_method("tmfg") == "TMFG" and canonical_method("MAST") == "MaST"
    with pytest.raises(MethodError):
        canonical_method("pmfg")
    assert build(K3, "mst").method == "MST"


def test_edge_records_and_json():
    g = mst(K3)
    recs = g.to_records("2020-12-31")
    assert recs[0] == {"source": "A", "target": "B", "distance": 1.0, "method": "MST",
                       "window_end": "2020-12-31"}
    blob = json.loads(g.to_json("2020-12-31"))
    assert blob["method"] == "MST" and blob["window_end"] == "2020-12-31"
    assert blob["edges"][1] == {"source": "A", "target": "C", "distance": 2.0}
