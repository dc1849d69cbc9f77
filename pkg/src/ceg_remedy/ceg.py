"""Failure chain event graphs: construction from staged trees and path queries.

A failure CEG has one vertex per position class of the staged tree and
two terminal vertices: every "fail" leaf collapses into ``SINK_FAIL``
and every other leaf into ``SINK_NOFAIL``.  Edges merge tree edges whose
endpoints merge; since position members carry identical florets, the
labels emanating from a CEG position are pairwise distinct and a root-to-
sink path is identified by its label sequence.

Probability queries run by forward message passing; exact path
enumeration is retained as the test oracle for all of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import (
    InconsistentMerge,
    InvalidPath,
    PathExplosion,
    ZeroConditioningSet,
)
from .trees import FAIL, PROB_TOL, PositionPartition, StagedTree, compute_positions

SINK_FAIL = "w_fail"
SINK_NOFAIL = "w_nofail"

DEFAULT_PATH_CAP = 10 ** 6


@dataclass(frozen=True)
class CegEdge:
    src: str
    dst: str
    label: str
    prob: float

    def key(self) -> tuple[str, str]:
        # labels are distinct per source position, so (src, label) is unique
        return (self.src, self.label)


class FailureCEG:
    def __init__(self, root: str, edges: Iterable[CegEdge],
                 stage_of: Mapping[str, str] | None = None):
        self.root = root
        self.edges = tuple(edges)
        self.sink_fail = SINK_FAIL
        self.sink_nofail = SINK_NOFAIL
        self._out: dict[str, list[CegEdge]] = {}
        self._in: dict[str, list[CegEdge]] = {}
        seen = set()
        for e in self.edges:
            if e.key() in seen:
                raise ValueError(f"duplicate edge label {e.label!r} at {e.src}")
            seen.add(e.key())
            self._out.setdefault(e.src, []).append(e)
            self._in.setdefault(e.dst, []).append(e)
        self.positions = tuple(
            dict.fromkeys(
                [root]
                + [e.src for e in self.edges]
                + [e.dst for e in self.edges]
                + [SINK_FAIL, SINK_NOFAIL]))
        self.stage_of = dict(stage_of or {})
        self.topological_order()  # acyclicity is a structural invariant

    # -- structure ---------------------------------------------------------

    def out_edges(self, w: str) -> tuple[CegEdge, ...]:
        return tuple(self._out.get(w, ()))

    def in_edges(self, w: str) -> tuple[CegEdge, ...]:
        return tuple(self._in.get(w, ()))

    def parents(self, w: str) -> tuple[str, ...]:
        return tuple(dict.fromkeys(e.src for e in self.in_edges(w)))

    def children(self, w: str) -> tuple[str, ...]:
        return tuple(dict.fromkeys(e.dst for e in self.out_edges(w)))

    def is_sink(self, w: str) -> bool:
        return w in (self.sink_fail, self.sink_nofail)

    def nonsink_positions(self) -> tuple[str, ...]:
        return tuple(w for w in self.positions if not self.is_sink(w))

    def edge(self, src: str, label: str) -> CegEdge:
        for e in self.out_edges(src):
            if e.label == label:
                return e
        raise KeyError(f"no edge labelled {label!r} at {src}")

    def topological_order(self) -> list[str]:
        indeg = {w: 0 for w in self.positions}
        for e in self.edges:
            indeg[e.dst] += 1
        ready = [w for w in self.positions if indeg[w] == 0]
        order: list[str] = []
        while ready:
            w = ready.pop(0)
            order.append(w)
            for e in self.out_edges(w):
                indeg[e.dst] -= 1
                if indeg[e.dst] == 0:
                    ready.append(e.dst)
        if len(order) != len(self.positions):
            raise ValueError("CEG contains a cycle")
        return order

    def descendants(self, w: str) -> set[str]:
        out: set[str] = set()
        stack = [w]
        while stack:
            for e in self.out_edges(stack.pop()):
                if e.dst not in out:
                    out.add(e.dst)
                    stack.append(e.dst)
        return out

    def validate(self, tol: float = PROB_TOL) -> list[str]:
        """Return human-readable structural problems (empty when valid)."""
        problems = []
        try:
            self.topological_order()
        except ValueError as exc:
            return [str(exc)]
        reachable = {self.root} | self.descendants(self.root)
        for w in self.positions:
            if w not in reachable and not self.is_sink(w):
                # a terminal node may carry zero mass without being an error
                problems.append(f"position {w} unreachable from root")
            if not self.is_sink(w):
                total = sum(e.prob for e in self.out_edges(w))
                if abs(total - 1.0) > tol:
                    problems.append(f"floret at {w} sums to {total!r}")
                if not (set(self.descendants(w)) & {self.sink_fail, self.sink_nofail}):
                    problems.append(f"position {w} reaches no sink")
        return problems

    def topology_signature(self) -> tuple:
        """Hashable topology fingerprint: vertex set plus (src, label, dst)."""
        return (tuple(sorted(self.positions)),
                tuple(sorted((e.src, e.label, e.dst) for e in self.edges)))


@dataclass(frozen=True)
class CegPath:
    edges: tuple[CegEdge, ...]

    def key(self) -> str:
        return " / ".join(e.label for e in self.edges)

    def positions(self) -> tuple[str, ...]:
        return (self.edges[0].src,) + tuple(e.dst for e in self.edges)

    def passes(self, w: str) -> bool:
        return w in self.positions()

    def sink(self) -> str:
        return self.edges[-1].dst


def build_ceg(stree: StagedTree,
              positions: PositionPartition | None = None) -> FailureCEG:
    """Construct the failure CEG of a staged tree.

    One vertex per position class; leaf classes collapse into the two
    sinks by terminal category.  Raises :class:`InconsistentMerge` when
    two tree edges forced to merge carry unequal probabilities, which
    indicates a corrupted upstream partition.
    """
    if positions is None:
        positions = compute_positions(stree)
    tree = stree.tree
    pos_of = dict(positions.position_of)

    def ceg_vertex(v: str) -> str:
        if tree.is_leaf(v):
            return SINK_FAIL if tree.leaf_category[v] == FAIL else SINK_NOFAIL
        return pos_of[v]

    merged: dict[tuple[str, str], tuple[str, float]] = {}
    for v in tree.internal_vertices():
        src = ceg_vertex(v)
        for e in tree.children(v):
            p = stree.ptree.edge_prob(e)
            key = (src, e.label)
            dst = ceg_vertex(e.child)
            if key in merged:
                prev_dst, prev_p = merged[key]
                if prev_dst != dst or abs(prev_p - p) > PROB_TOL:
                    raise InconsistentMerge(
                        f"edges labelled {e.label!r} at position {src} disagree: "
                        f"({prev_dst}, {prev_p}) vs ({dst}, {p})")
            else:
                merged[key] = (dst, p)

    edges = [CegEdge(src, dst, label, p)
             for (src, label), (dst, p) in merged.items()]
    edges.sort(key=lambda e: (e.src, e.label))
    stage_of = {}
    for pid, members in positions.classes().items():
        rep = members[0]
        if not tree.is_leaf(rep):
            stage_of[pid] = stree.stage_of[rep]
    stage_of[SINK_FAIL] = "sink"
    stage_of[SINK_NOFAIL] = "sink"
    return FailureCEG(pos_of[tree.root], edges, stage_of)


def ceg_from_staged_tree(stree: StagedTree) -> tuple[FailureCEG, PositionPartition]:
    positions = compute_positions(stree)
    return build_ceg(stree, positions), positions


def enumerate_paths(ceg: FailureCEG, cap: int = DEFAULT_PATH_CAP) -> list[CegPath]:
    """All root-to-sink paths, depth first, lexicographic by edge label."""
    out: list[CegPath] = []

    def rec(w: str, acc: list[CegEdge]):
        if ceg.is_sink(w):
            if len(out) >= cap:
                raise PathExplosion(f"more than {cap} root-to-sink paths")
            out.append(CegPath(tuple(acc)))
            return
        for e in sorted(ceg.out_edges(w), key=lambda e: (e.label, e.dst)):
            acc.append(e)
            rec(e.dst, acc)
            acc.pop()

    rec(ceg.root, [])
    return out


def path_probability(ceg: FailureCEG, path: CegPath) -> float:
    if not path.edges or path.edges[0].src != ceg.root:
        raise InvalidPath("path must start at the root")
    prob = 1.0
    here = ceg.root
    for e in path.edges:
        if e.src != here:
            raise InvalidPath(f"edge {e.label!r} does not chain at {here}")
        try:
            actual = ceg.edge(e.src, e.label)
        except KeyError as exc:
            raise InvalidPath(str(exc)) from exc
        prob *= actual.prob
        here = actual.dst
    if not ceg.is_sink(here):
        raise InvalidPath(f"path ends at non-sink {here}")
    return prob


def reach_probabilities(ceg: FailureCEG) -> dict[str, float]:
    """Forward pass: probability that a root-to-sink path visits each position."""
    reach = {w: 0.0 for w in ceg.positions}
    reach[ceg.root] = 1.0
    for w in ceg.topological_order():
        for e in ceg.out_edges(w):
            reach[e.dst] += reach[w] * e.prob
    return reach


def event_probability(ceg: FailureCEG, w: str) -> float:
    """Total mass of paths passing through ``w``."""
    if w not in ceg.positions:
        raise KeyError(f"unknown position {w}")
    return reach_probabilities(ceg)[w]


def paths_through(ceg: FailureCEG, vertices: Iterable[str],
                  paths: Sequence[CegPath] | None = None) -> list[CegPath]:
    """Paths visiting at least one of ``vertices``."""
    vs = set(vertices)
    if paths is None:
        paths = enumerate_paths(ceg)
    return [p for p in paths if vs & set(p.positions())]


def path_set_probability(ceg: FailureCEG, paths: Iterable[CegPath]) -> float:
    return sum(path_probability(ceg, p) for p in paths)


def conditional_path_probability(ceg: FailureCEG,
                                 target: Iterable[CegPath],
                                 given: Iterable[CegPath]) -> float:
    """pi(target | given) over root-to-sink path sets."""
    given = list(given)
    given_keys = {p.key() for p in given}
    p_given = 0.0
    seen: set[str] = set()
    for p in given:
        if p.key() not in seen:
            seen.add(p.key())
            p_given += path_probability(ceg, p)
    joint = 0.0
    seen.clear()
    for p in target:
        if p.key() in given_keys and p.key() not in seen:
            seen.add(p.key())
            joint += path_probability(ceg, p)
    if p_given <= 0.0:
        raise ZeroConditioningSet("conditioning path set has zero probability")
    return joint / p_given


def eval_floret_and_incident(ceg: FailureCEG, path: CegPath,
                             w: str) -> tuple[CegEdge | int, int]:
    """Floret value and incident bit of position ``w`` along ``path``.

    Returns the traversed edge out of ``w`` (or 0 when the path avoids
    the floret) and the 0/1 indicator of passing through ``w``.
    """
    incident = 1 if path.passes(w) else 0
    for e in path.edges:
        if e.src == w:
            return e, incident
    return 0, incident


def with_floret_distributions(
        ceg: FailureCEG,
        replacement: Mapping[str, Mapping[str, float]]) -> FailureCEG:
    """New CEG with the outgoing distributions of some positions replaced.

    ``replacement[w]`` maps edge label to new probability; topology is
    untouched.  Stage colouring is dropped (callers recompute it, since
    a manipulation may merge or split stages).
    """
    for w, dist in replacement.items():
        labels = {e.label for e in ceg.out_edges(w)}
        if set(dist) != labels:
            raise InvalidPath(
                f"replacement at {w} must cover labels {sorted(labels)}")
    edges = []
    for e in ceg.edges:
        if e.src in replacement:
            edges.append(CegEdge(e.src, e.dst, e.label,
                                 float(replacement[e.src][e.label])))
        else:
            edges.append(e)
    return FailureCEG(ceg.root, edges, {})


def recompute_stages(ceg: FailureCEG, tol: float = PROB_TOL) -> FailureCEG:
    """Re-colour positions by their current outgoing probability vectors."""
    nonsink = [w for w in ceg.positions if not ceg.is_sink(w)]
    vec = {w: tuple(e.prob for e in ceg.out_edges(w)) for w in nonsink}
    reps: list[str] = []
    stage_of: dict[str, str] = {}
    for w in nonsink:
        assigned = None
        for r in reps:
            a, b = sorted(vec[w]), sorted(vec[r])
            if len(a) == len(b) and all(abs(x - y) <= tol for x, y in zip(a, b)):
                assigned = r
                break
        if assigned is None:
            reps.append(w)
            assigned = w
        stage_of[w] = f"s{reps.index(assigned)}"
    stage_of[ceg.sink_fail] = "sink"
    stage_of[ceg.sink_nofail] = "sink"
    return FailureCEG(ceg.root, ceg.edges, stage_of)


def tree_path_distribution(stree: StagedTree) -> dict[tuple[str, ...], float]:
    """Label-sequence -> probability map of the staged tree's root-to-leaf paths."""
    out: dict[tuple[str, ...], float] = {}

    def rec(v: str, labels: tuple[str, ...], prob: float):
        if stree.tree.is_leaf(v):
            out[labels] = out.get(labels, 0.0) + prob
            return
        for e in stree.tree.children(v):
            rec(e.child, labels + (e.label,), prob * stree.ptree.edge_prob(e))

    rec(stree.tree.root, (), 1.0)
    return out


def ceg_path_distribution(ceg: FailureCEG,
                          cap: int = DEFAULT_PATH_CAP) -> dict[tuple[str, ...], float]:
    out: dict[tuple[str, ...], float] = {}
    for p in enumerate_paths(ceg, cap):
        labels = tuple(e.label for e in p.edges)
        out[labels] = out.get(labels, 0.0) + path_probability(ceg, p)
    return out
