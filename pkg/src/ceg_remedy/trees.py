"""Event trees, probability trees and staged trees.

The vertex partition machinery lives here: stage classes (equal
transition vectors up to a permutation of components) and position
classes (probability-isomorphic subtrees).  Everything is immutable
after construction; the partition functions are pure.

Stage and position identifiers are deterministic: classes are numbered
by the first member they contain in the tree's fixed vertex order, so
serialised output is byte-stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

PROB_TOL = 1e-9

# terminal categories a leaf may carry; anything else counts as a plain sink
FAIL = "fail"
NOT_FAIL = "not fail"


@dataclass(frozen=True)
class TreeEdge:
    parent: str
    child: str
    label: str


class EventTree:
    """Rooted tree with labelled edges and categorised leaves.

    Edge labels emanating from a common vertex must be pairwise
    distinct; every non-root vertex has exactly one incoming edge.
    ``leaf_category`` maps a leaf to its terminal category ("fail",
    "not fail" or anything else for a plain sink); missing leaves
    default to "not fail".
    """

    def __init__(self, root: str, edges: Iterable[tuple[str, str, str]],
                 leaf_category: Mapping[str, str] | None = None):
        self.root = root
        self.edges = tuple(TreeEdge(*e) for e in edges)
        self._children: dict[str, list[TreeEdge]] = {}
        parents: dict[str, str] = {}
        vertices = [root]
        seen = {root}
        for e in self.edges:
            if e.parent not in seen:
                raise ValueError(
                    f"edge ({e.parent} -> {e.child}) appears before its parent; "
                    "list edges in top-down order")
            if e.child in parents or e.child == root:
                raise ValueError(f"vertex {e.child} has more than one incoming edge")
            parents[e.child] = e.parent
            sibs = self._children.setdefault(e.parent, [])
            if any(s.label == e.label for s in sibs):
                raise ValueError(
                    f"duplicate edge label {e.label!r} at vertex {e.parent}")
            sibs.append(e)
            vertices.append(e.child)
            seen.add(e.child)
        self.vertices = tuple(vertices)
        self._parent = parents
        self.leaf_category = dict(leaf_category or {})
        for leaf in self.leaves():
            self.leaf_category.setdefault(leaf, NOT_FAIL)

    def children(self, v: str) -> tuple[TreeEdge, ...]:
        return tuple(self._children.get(v, ()))

    def parent(self, v: str) -> str | None:
        return self._parent.get(v)

    def is_leaf(self, v: str) -> bool:
        return v not in self._children

    def leaves(self) -> list[str]:
        return [v for v in self.vertices if self.is_leaf(v)]

    def internal_vertices(self) -> list[str]:
        return [v for v in self.vertices if not self.is_leaf(v)]

    def subtree_vertices(self, v: str) -> list[str]:
        out = [v]
        stack = [v]
        while stack:
            for e in self.children(stack.pop()):
                out.append(e.child)
                stack.append(e.child)
        return out

    def __contains__(self, v: str) -> bool:
        return v in set(self.vertices)


class ProbabilityTree:
    """Event tree whose florets carry transition probability vectors.

    ``theta[v]`` is ordered like ``tree.children(v)``.
    """

    def __init__(self, tree: EventTree, theta: Mapping[str, Sequence[float]]):
        self.tree = tree
        self.theta = {v: tuple(float(p) for p in probs) for v, probs in theta.items()}
        for v in tree.internal_vertices():
            if v not in self.theta:
                raise ValueError(f"no probability vector for vertex {v}")
            if len(self.theta[v]) != len(tree.children(v)):
                raise ValueError(
                    f"vertex {v}: {len(self.theta[v])} probabilities for "
                    f"{len(tree.children(v))} edges")

    def edge_prob(self, edge: TreeEdge) -> float:
        sibs = self.tree.children(edge.parent)
        return self.theta[edge.parent][sibs.index(edge)]


@dataclass(frozen=True)
class Violation:
    vertex: str
    kind: str  # "sum" or "range"
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_probability_tree(ptree: ProbabilityTree,
                              tol: float = PROB_TOL) -> ValidationReport:
    """Check each floret sums to one and sits strictly inside (0, 1).

    Report-style: never raises, lists every violating vertex with the
    violation kind.
    """
    bad = []
    for v in ptree.tree.internal_vertices():
        probs = ptree.theta[v]
        total = sum(probs)
        if abs(total - 1.0) > tol:
            bad.append(Violation(v, "sum", f"components sum to {total!r}"))
        for p in probs:
            if not (0.0 < p < 1.0):
                bad.append(Violation(
                    v, "range", f"component {p!r} outside open interval (0,1)"))
                break
    return ValidationReport(tuple(bad))


def _vectors_match(a: Sequence[float], b: Sequence[float], tol: float) -> bool:
    if len(a) != len(b):
        return False
    return all(abs(x - y) <= tol for x, y in zip(sorted(a), sorted(b)))


class StagedTree:
    """Probability tree plus its stage partition (the colouring)."""

    def __init__(self, ptree: ProbabilityTree, stage_of: Mapping[str, str]):
        self.ptree = ptree
        self.tree = ptree.tree
        self.stage_of = dict(stage_of)

    def theta(self, v: str) -> tuple[float, ...]:
        return self.ptree.theta[v]


def compute_stages(ptree: ProbabilityTree, tol: float = PROB_TOL) -> StagedTree:
    """Partition florets into stages.

    Two vertices share a stage when their probability vectors are equal
    up to a permutation of components.  The comparison is closed
    transitively (union-find over pairwise matches) so the result is a
    genuine equivalence relation even at tolerance boundaries.  Leaves
    get per-category terminal classes.
    """
    tree = ptree.tree
    internal = tree.internal_vertices()
    parent_uf = {v: v for v in internal}

    def find(v):
        while parent_uf[v] != v:
            parent_uf[v] = parent_uf[parent_uf[v]]
            v = parent_uf[v]
        return v

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            # keep the earlier vertex (in tree order) as representative
            order = {v: i for i, v in enumerate(tree.vertices)}
            if order[ra] > order[rb]:
                ra, rb = rb, ra
            parent_uf[rb] = ra

    for i, v in enumerate(internal):
        for w in internal[i + 1:]:
            if _vectors_match(ptree.theta[v], ptree.theta[w], tol):
                union(v, w)

    reps = []
    for v in internal:
        r = find(v)
        if r not in reps:
            reps.append(r)
    stage_of = {v: f"s{reps.index(find(v))}" for v in internal}
    for leaf in tree.leaves():
        stage_of[leaf] = f"leaf-{tree.leaf_category[leaf]}"
    return StagedTree(ptree, stage_of)


@dataclass(frozen=True)
class PositionPartition:
    position_of: Mapping[str, str]
    members: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def classes(self) -> dict[str, tuple[str, ...]]:
        return dict(self.members)


def compute_positions(stree: StagedTree, tol: float = PROB_TOL) -> PositionPartition:
    """Partition vertices into positions by bottom-up refinement.

    Leaves are split by terminal category.  Internal vertices merge iff
    they share a stage and the multisets of (edge label, edge
    probability, child position) triples agree; probabilities within a
    triple are quantised at the comparison tolerance.  Edge labels must
    match because they carry the d-event semantics used downstream.
    """
    tree = stree.tree
    sig: dict[str, tuple] = {}
    for leaf in tree.leaves():
        sig[leaf] = ("leaf", tree.leaf_category[leaf])

    def height(v: str) -> int:
        kids = tree.children(v)
        if not kids:
            return 0
        return 1 + max(height(e.child) for e in kids)

    by_height = sorted(tree.internal_vertices(), key=height)
    canon: dict[tuple, tuple] = {}
    for v in by_height:
        triples = []
        for e in tree.children(v):
            p = stree.ptree.edge_prob(e)
            triples.append((e.label, round(p / tol) if tol else p, sig[e.child]))
        raw = (stree.stage_of[v], tuple(sorted(triples)))
        sig[v] = canon.setdefault(raw, raw)

    position_of: dict[str, str] = {}
    members: dict[str, list[str]] = {}
    index: dict[tuple, str] = {}
    n_internal = n_leaf = 0
    for v in tree.vertices:
        key = sig[v]
        if key not in index:
            if tree.is_leaf(v):
                index[key] = f"t{n_leaf}"
                n_leaf += 1
            else:
                index[key] = f"w{n_internal}"
                n_internal += 1
        pid = index[key]
        position_of[v] = pid
        members.setdefault(pid, []).append(v)
    return PositionPartition(
        position_of, {k: tuple(v) for k, v in members.items()})


def subtree_isomorphic(stree: StagedTree, v: str, w: str,
                       tol: float = PROB_TOL) -> bool:
    """Brute-force oracle: are the subtrees at ``v`` and ``w`` isomorphic
    as edge-labelled trees with equal probabilities?

    Used by tests to validate :func:`compute_positions`; kept
    deliberately independent of the refinement algorithm.
    """
    tree = stree.tree

    def rec(a: str, b: str) -> bool:
        a_leaf, b_leaf = tree.is_leaf(a), tree.is_leaf(b)
        if a_leaf != b_leaf:
            return False
        if a_leaf:
            return tree.leaf_category[a] == tree.leaf_category[b]
        ea, eb = tree.children(a), tree.children(b)
        if len(ea) != len(eb):
            return False
        by_label = {e.label: e for e in eb}
        if set(by_label) != {e.label for e in ea}:
            return False
        for e in ea:
            other = by_label[e.label]
            if abs(stree.ptree.edge_prob(e) - stree.ptree.edge_prob(other)) > tol:
                return False
            if not rec(e.child, other.child):
                return False
        return True

    return rec(v, w)
