import json

import pytest

from gwprune import distributions as dists
from gwprune import sampler
from gwprune.errors import CapacityError
from gwprune.trees import (
    Tree,
    branch_statistics,
    canonical_form,
    horton_prune,
    horton_prune_with_map,
    hs_order_by_pruning,
    hs_order_recursive,
    series_reduce,
    tree_from_canonical,
)

PERFECT4 = Tree((None, 0, 1, 1, 2, 2, 3, 3))  # perfect binary, 4 leaves


def perfect_binary(depth):
    parents = [None, 0]
    level = [1]
    for _ in range(depth - 1):
        nxt = []
        for v in level:
            for _ in range(2):
                parents.append(v)
                nxt.append(len(parents) - 1)
        level = nxt
    return Tree(tuple(parents))


class TestSeriesReduce:
    def test_chain_collapses_to_single_edge(self):
        t = Tree((None, 0, 1, 2))
        r = series_reduce(t)
        assert len(r) == 2 and r.parents == (None, 0)

    def test_already_reduced_is_identity(self):
        r = series_reduce(PERFECT4)
        assert r == PERFECT4
        assert series_reduce(r).parents == r.parents

    def test_inner_chain_above_branching(self):
        # root - a - b - c with c branching into two leaves: a, b removed
        t = Tree((None, 0, 1, 2, 3, 3))
        r = series_reduce(t)
        assert r == Tree((None, 0, 1, 1))

    def test_capacity_error(self):
        with pytest.raises(CapacityError):
            Tree((None, 0, 1, 2), node_cap=3)


class TestHortonPrune:
    def test_empty_fixed_point(self):
        phi = Tree.empty()
        assert horton_prune(phi) is phi or horton_prune(phi).is_empty

    def test_single_leaf_empties(self):
        assert horton_prune(Tree.single_leaf()).is_empty

    def test_perfect_binary_drops_one_level(self):
        assert horton_prune(PERFECT4) == Tree((None, 0, 1, 1))

    def test_caterpillar_prunes_to_single_leaf(self):
        cat = Tree((None, 0, 1, 1, 2, 2, 4, 4))
        assert horton_prune(cat) == Tree.single_leaf()


class TestOrders:
    def test_trivial_orders(self):
        assert hs_order_by_pruning(Tree.empty()) == 0
        assert hs_order_by_pruning(Tree.single_leaf()) == 1
        assert hs_order_recursive(Tree.single_leaf()).order == 1
        assert hs_order_recursive(Tree.empty()).order == 0

    def test_max_plus_one_on_ties_only(self):
        # parent with child orders {2, 1} keeps order 2; {2, 2} gives 3
        t_mixed = Tree((None, 0, 1, 1, 2, 2, 3))  # node1: children order 2,1
        ordered = hs_order_recursive(t_mixed)
        # node 2 has two leaf children -> order 2; node 3 single leaf child
        # is not reduced, but the rule still applies vertexwise
        assert ordered.vertex_order[2] == 2
        assert ordered.vertex_order[1] == 2
        t_tie = PERFECT4
        assert hs_order_recursive(t_tie).vertex_order[1] == 3

    def test_order_four_tree(self):
        assert hs_order_by_pruning(perfect_binary(4)) == 4
        assert hs_order_recursive(perfect_binary(4)).order == 4

    def test_both_definitions_agree_on_samples(self):
        law = dists.igw(0.75)
        for i in range(150):
            t = sampler.sample_tree(law, seed=2024, max_vertices=4000, index=i)
            if t is None:
                continue
            assert hs_order_by_pruning(t) == hs_order_recursive(t).order


class TestBranchStatistics:
    def test_single_leaf(self):
        bs = branch_statistics(Tree.single_leaf())
        assert bs.order == 1 and list(bs.N[1:]) == [1]
        assert bs.n_side.sum() == 0

    def test_perfect_binary_counts(self):
        bs = branch_statistics(PERFECT4)
        assert list(bs.N[1:]) == [4, 2, 1]
        # every vertex of order i with a parent of order j is counted, so
        # the four leaves attached to the order-2 branches show up here
        assert bs.n_side[1, 2] == 4
        assert bs.n_side[2, 3] == 2
        assert bs.n_side[1, 3] == 0
        assert bs.n_side_regular.sum() == 0

    def test_caterpillar_side_branches(self):
        # order-2 branch of three vertices, two side leaves at the regular
        # vertices, two principal leaves at the terminal vertex
        cat = Tree((None, 0, 1, 1, 2, 2, 4, 4))
        bs = branch_statistics(cat)
        assert list(bs.N[1:]) == [4, 1]
        assert bs.n_side[1, 2] == 4
        assert bs.n_side_regular[1, 2] == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            branch_statistics(Tree.empty())

    def test_partition_of_nonroot_vertices(self):
        law = dists.ExplicitFinite([0.6, 0.0, 0.3, 0.1])
        for i in range(80):
            t = sampler.sample_tree(law, seed=7, max_vertices=4000, index=i)
            if t is None or t.is_empty:
                continue
            bs = branch_statistics(t)
            orders = hs_order_recursive(t).vertex_order
            same = sum(
                1 for v in range(len(t))
                if t.parents[v] is not None
                and orders[t.parents[v]] == orders[v]
                and t.parents[v] != t.root
            )
            assert bs.n_side.sum() + same + 1 == len(t) - 1  # +1: root child
            # every non-root vertex is branch-initial or a continuation
            assert bs.N.sum() + same == len(t) - 1


class TestPruneStructure:
    def test_order_decrements_by_one(self):
        law = dists.critical_binary()
        for i in range(100):
            t = sampler.sample_tree(law, seed=5, max_vertices=4000, index=i)
            if t is None or t.is_empty:
                continue
            k = hs_order_recursive(t).order
            p = horton_prune(t)
            assert hs_order_recursive(p).order == k - 1

    def test_surviving_vertex_orders_shift(self):
        law = dists.igw(0.6)
        checked = 0
        for i in range(60):
            t = sampler.sample_tree(law, seed=17, max_vertices=4000, index=i)
            if t is None or hs_order_recursive(t).order < 2:
                continue
            old = hs_order_recursive(t).vertex_order
            pruned, mapping = horton_prune_with_map(t)
            new = hs_order_recursive(pruned).vertex_order
            for v_new, v_old in mapping.items():
                if v_new == pruned.root:
                    continue
                assert new[v_new] == old[v_old] - 1
            # branch counts shift: N_k(R(T)) == N_{k+1}(T)
            bn, bo = branch_statistics(pruned), branch_statistics(t)
            assert list(bn.N[1:]) == list(bo.N[2:])
            checked += 1
        assert checked > 10


class TestSerialization:
    def test_round_trip_exact(self):
        t = PERFECT4
        doc = t.to_json()
        back = Tree.from_json(doc)
        assert back.parents == t.parents and back.children == t.children
        parsed = json.loads(doc)
        assert parsed["root"] == 0
        assert parsed["nodes"][0]["parent"] is None

    def test_canonical_form_ignores_child_order(self):
        a = Tree((None, 0, 1, 1, 2, 2))
        b = Tree((None, 0, 1, 1, 3, 3))
        assert canonical_form(a) == canonical_form(b)
        assert a == b
        assert tree_from_canonical(canonical_form(a)) == a
