"""Finite rooted planted trees and their Horton-Strahler combinatorics.

Trees are stored index-based: node ``i`` has a parent index (or ``None`` for
the root) and an ordered child list.  The empty tree ("phi") is a root with no
edges.  All operations treat trees as immutable values and return new trees.

Conventions
-----------
* A tree is *planted* if the root has exactly one child (or is empty).
* A tree is *reduced* if no non-root vertex has exactly one child; the root
  is exempt so planted trees stay planted.
* The root's Horton-Strahler order equals the tree order; branches are counted
  over non-root vertices only, so the single maximal branch starts at the
  root's child.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError

DEFAULT_NODE_CAP = 10_000_000


class Tree:
    """A finite rooted tree with index-based node storage.

    Child order is preserved from construction, but every statistic computed
    here is insensitive to it; use :func:`canonical_form` to compare trees as
    unlabeled shapes.
    """

    __slots__ = ("parents", "children", "root")

    def __init__(self, parents, children=None, root=None, node_cap=DEFAULT_NODE_CAP):
        parents = tuple(parents)
        n = len(parents)
        if n == 0:
            raise ValueError("a tree has at least a root node")
        if n > node_cap:
            raise CapacityError(f"{n} nodes exceeds cap {node_cap}")
        roots = [i for i, p in enumerate(parents) if p is None]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        if root is not None and root != roots[0]:
            raise ValueError("root index disagrees with parent table")
        self.root = roots[0]
        self.parents = parents
        if children is None:
            kids = [[] for _ in range(n)]
            for i, p in enumerate(parents):
                if p is not None:
                    if not 0 <= p < n:
                        raise ValueError(f"node {i} has invalid parent {p}")
                    kids[p].append(i)
            children = tuple(tuple(k) for k in kids)
        else:
            children = tuple(tuple(k) for k in children)
            for i, kids in enumerate(children):
                for c in kids:
                    if parents[c] != i:
                        raise ValueError("children table disagrees with parents")
        self.children = children
        self._check_acyclic()

    def _check_acyclic(self):
        n = len(self.parents)
        seen = np.zeros(n, dtype=bool)
        seen[self.root] = True
        stack = [self.root]
        count = 1
        while stack:
            v = stack.pop()
            for c in self.children[v]:
                if seen[c]:
                    raise ValueError("cycle or repeated child detected")
                seen[c] = True
                count += 1
                stack.append(c)
        if count != n:
            raise ValueError("nodes unreachable from root (not a tree)")

    # -- basic queries -----------------------------------------------------

    def __len__(self):
        return len(self.parents)

    @property
    def is_empty(self):
        return len(self.parents) == 1

    @property
    def is_planted(self):
        return self.is_empty or len(self.children[self.root]) == 1

    @property
    def is_reduced(self):
        return all(
            len(self.children[v]) != 1
            for v in range(len(self.parents))
            if v != self.root
        )

    def leaves(self):
        return [v for v in range(len(self.parents)) if not self.children[v]]

    def topological_order(self):
        """Node indices root-first; children always after their parent."""
        out = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children[v]))
        return out

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return canonical_form(self) == canonical_form(other)

    def __hash__(self):
        return hash(canonical_form(self))

    def __repr__(self):
        return f"Tree(n={len(self)}, root={self.root})"

    # -- constructors ------------------------------------------------------

    @staticmethod
    def empty():
        """The empty tree phi: a root vertex and no edges."""
        return Tree((None,))

    @staticmethod
    def single_leaf():
        """The unique order-1 planted tree: root with one leaf child."""
        return Tree((None, 0))

    @staticmethod
    def from_parent_list(parents, node_cap=DEFAULT_NODE_CAP):
        return Tree(tuple(None if p is None or p < 0 else int(p) for p in parents),
                    node_cap=node_cap)

    # -- serialization -----------------------------------------------------

    def to_json(self):
        nodes = [
            {"parent": self.parents[i], "children": list(self.children[i])}
            for i in range(len(self))
        ]
        return json.dumps({"nodes": nodes, "root": self.root})

    @staticmethod
    def from_json(text, node_cap=DEFAULT_NODE_CAP):
        doc = json.loads(text)
        parents = tuple(n["parent"] for n in doc["nodes"])
        children = tuple(tuple(n["children"]) for n in doc["nodes"])
        return Tree(parents, children=children, root=doc["root"], node_cap=node_cap)


@dataclass(frozen=True)
class OrderedTree:
    """A tree together with its per-vertex Horton-Strahler orders."""

    tree: Tree
    vertex_order: tuple

    @property
    def order(self):
        """Tree order: 0 for the empty tree, else the root's order."""
        return self.vertex_order[self.tree.root]


@dataclass(frozen=True)
class BranchStatistics:
    """Branch counts and side-branch merger counts of a single tree.

    ``n_side[i, j]`` counts vertices of order ``i`` whose parent has order
    ``j`` (for ``i < j``); ``n_side_regular`` restricts to parents that are
    non-terminal vertices of their branch.  Arrays are (K+1, K+1) and indexed
    1-based so entries line up with branch orders.
    """

    order: int
    N: np.ndarray
    n_side: np.ndarray
    n_side_regular: np.ndarray


def series_reduce(tree, node_cap=DEFAULT_NODE_CAP):
    """Remove every non-root vertex with exactly one child, merging its edges.

    Leaves and all branching vertices are preserved; the root is exempt so a
    planted root keeps its single edge.  Idempotent.
    """
    n = len(tree)
    if n > node_cap:
        raise CapacityError(f"{n} nodes exceeds cap {node_cap}")
    keep = [v == tree.root or len(tree.children[v]) != 1 for v in range(n)]
    old_to_new = {}
    new_parents = []
    new_children = []
    # Root-first order guarantees each kept node's nearest kept ancestor is
    # already mapped when we reach it.
    nearest_kept = {}
    for v in tree.topological_order():
        p = tree.parents[v]
        if p is None:
            anchor = None
        else:
            anchor = p if keep[p] else nearest_kept[p]
        nearest_kept[v] = v if keep[v] else anchor
        if keep[v]:
            idx = len(new_parents)
            old_to_new[v] = idx
            new_parents.append(None if anchor is None else old_to_new[anchor])
            new_children.append([])
            if anchor is not None:
                new_children[old_to_new[anchor]].append(idx)
    return Tree(tuple(new_parents), children=new_children, node_cap=node_cap)


def horton_prune(tree):
    """One Horton pruning: drop all leaves with their parental edges, then
    series-reduce.  The empty tree is the fixed point."""
    pruned, _ = horton_prune_with_map(tree)
    return pruned


def horton_prune_with_map(tree):
    """As :func:`horton_prune`, also returning {new index: old index}."""
    if tree.is_empty:
        return tree, {tree.root: tree.root}
    keep = [bool(tree.children[v]) for v in range(len(tree))]
    keep[tree.root] = True
    old_idx = [v for v in range(len(tree)) if keep[v]]
    remap = {v: i for i, v in enumerate(old_idx)}
    parents = tuple(
        None if tree.parents[v] is None else remap[tree.parents[v]] for v in old_idx
    )
    stripped = Tree(parents)
    reduced = series_reduce(stripped)
    # Recover the old identity of each surviving node: series_reduce assigns
    # new indices in topological order of kept nodes, which we replay here.
    kept2 = [
        v == stripped.root or len(stripped.children[v]) != 1
        for v in range(len(stripped))
    ]
    mapping = {}
    pos = 0
    for v in stripped.topological_order():
        if kept2[v]:
            mapping[pos] = old_idx[v]
            pos += 1
    return reduced, mapping


def hs_order_by_pruning(tree):
    """Horton-Strahler order as the minimal number of prunings to reach phi."""
    k = 0
    while not tree.is_empty:
        tree = horton_prune(tree)
        k += 1
    return k


def hs_order_recursive(tree):
    """Per-vertex orders by hierarchical counting.

    Each leaf has order 1; a vertex whose children have maximal order r gets
    r if that maximum is unique and r + 1 otherwise.  The root of a planted
    tree inherits its child's order, which equals the tree order; the empty
    tree gets order 0.
    """
    n = len(tree)
    if tree.is_empty:
        return OrderedTree(tree, (0,))
    order = [0] * n
    for v in reversed(tree.topological_order()):
        kids = tree.children[v]
        if not kids:
            order[v] = 1
            continue
        m = 0
        ties = 0
        for c in kids:
            oc = order[c]
            if oc > m:
                m, ties = oc, 1
            elif oc == m:
                ties += 1
        order[v] = m + 1 if ties >= 2 else m
    return OrderedTree(tree, tuple(order))


def branch_statistics(tree):
    """Branch counts N_k and side-branch matrices of a planted reduced tree.

    Branches are maximal same-order chains of non-root vertices; the branch
    vertex farthest from the root is its terminal vertex.  Raises on the
    empty tree, where the statistics are undefined.
    """
    if tree.is_empty:
        raise ValueError("branch statistics are undefined for the empty tree")
    if not (tree.is_planted and tree.is_reduced):
        raise ValueError("branch statistics need a planted reduced tree")
    ordered = hs_order_recursive(tree)
    order = list(ordered.vertex_order)
    K = ordered.order
    N = np.zeros(K + 1, dtype=np.int64)
    n_side = np.zeros((K + 1, K + 1), dtype=np.int64)
    n_reg = np.zeros((K + 1, K + 1), dtype=np.int64)
    has_same_order_child = [False] * len(tree)
    for v in range(len(tree)):
        p = tree.parents[v]
        if p is not None and order[p] == order[v]:
            has_same_order_child[p] = True
    for v in range(len(tree)):
        p = tree.parents[v]
        if p is None:
            continue
        i, j = order[v], order[p]
        if p == tree.root or j != i:
            N[i] += 1
        if i < j:
            n_side[i, j] += 1
            if has_same_order_child[p]:
                n_reg[i, j] += 1
    return BranchStatistics(order=K, N=N, n_side=n_side, n_side_regular=n_reg)


def canonical_form(tree):
    """Canonical encoding of the unlabeled shape: children sorted recursively."""
    enc = [None] * len(tree)
    for v in reversed(tree.topological_order()):
        enc[v] = tuple(sorted(enc[c] for c in tree.children[v]))
    return enc[tree.root]


def tree_from_canonical(enc):
    """Rebuild a Tree from a :func:`canonical_form` encoding."""
    parents = [None]
    stack = [(0, enc)]
    while stack:
        idx, node = stack.pop()
        for child in node:
            parents.append(idx)
            stack.append((len(parents) - 1, child))
    return Tree(tuple(parents))
