"""The Global Net: a DAG over core event variables.

Extracted core events are clustered into categorical variables; the
witnessed cause/effect pairs become hard edge constraints; a greedy
hill-climbing search with a decomposable BIC score fills in the rest of
the topology, and an expert non-causal list prunes edges the search
added but no one is willing to call causal.  Required edges are causal
by construction and immune to the filter.

Documents map onto the net as induced subgraphs over the variables
their events mention.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .errors import (
    ConflictingConstraints,
    ScoreFailure,
    UnmappedEvent,
)
from .extraction import Document, ExtractionConfig, OrderedEvents, extract_events

ABSENT = "absent"


@dataclass(frozen=True)
class CoreEventVariable:
    id: str
    name: str
    states: tuple[str, ...]

    def __post_init__(self):
        if len(self.states) < 2:
            raise ValueError(f"variable {self.id} needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise ValueError(f"variable {self.id} has duplicate states")


@dataclass(frozen=True)
class VariableMap:
    """Clustering of abstract core events into (variable, state) pairs."""

    assignments: Mapping[str, tuple[str, str]]  # event key -> (variable, state)
    declared_states: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def variable_of(self, event_key: str) -> tuple[str, str] | None:
        return self.assignments.get(event_key)


def build_core_event_variables(
        corpus: Iterable[OrderedEvents],
        var_map: VariableMap) -> tuple[dict[str, CoreEventVariable], list[str]]:
    """Cluster every extracted event into exactly one (variable, state).

    Returns the variable set and the list of event keys that no cluster
    claims (reported, not fatal).  A variable observed with a single
    state becomes a binary indicator by gaining an "absent" state.
    """
    states: dict[str, list[str]] = {}
    for var, declared in var_map.declared_states.items():
        states[var] = list(declared)
    unmapped: list[str] = []
    for events in corpus:
        for key in events.event_keys():
            hit = var_map.variable_of(key)
            if hit is None:
                if key not in unmapped:
                    unmapped.append(key)
                continue
            var, state = hit
            bucket = states.setdefault(var, [])
            if state not in bucket:
                bucket.append(state)
    variables = {}
    for var, sts in states.items():
        if len(sts) == 1:
            sts = sts + [ABSENT]
        variables[var] = CoreEventVariable(var, var, tuple(sts))
    return variables, unmapped


@dataclass(frozen=True)
class EdgeConstraints:
    required: frozenset[tuple[str, str]]
    forbidden: frozenset[tuple[str, str]]

    def __post_init__(self):
        overlap = self.required & self.forbidden
        if overlap:
            raise ConflictingConstraints(
                f"edges both required and forbidden: {sorted(overlap)}")
        g = nx.DiGraph(self.required)
        if not nx.is_directed_acyclic_graph(g):
            raise ConflictingConstraints("required edges contain a cycle")


def derive_constraints(corpus: Iterable[OrderedEvents],
                       var_map: VariableMap,
                       threshold: int = 1) -> EdgeConstraints:
    """Edge constraints from witnessed variable-level cause/effect pairs.

    A pair seen at least ``threshold`` times becomes required; its
    reversal is forbidden (it would violate cause-before-effect).  A
    pair qualifying in both directions is surfaced as a conflict rather
    than silently resolved.
    """
    counts: dict[tuple[str, str], int] = {}
    for events in corpus:
        keys = events.event_keys()
        for (a, b) in events.order:
            va = var_map.variable_of(keys[a])
            vb = var_map.variable_of(keys[b])
            if va is None or vb is None or va[0] == vb[0]:
                continue
            pair = (va[0], vb[0])
            counts[pair] = counts.get(pair, 0) + 1
    required = {p for p, n in counts.items() if n >= threshold}
    both = {p for p in required if (p[1], p[0]) in required}
    if both:
        raise ConflictingConstraints(
            f"cause/effect witnessed in both directions: {sorted(both)}")
    forbidden = {(b, a) for (a, b) in required}
    return EdgeConstraints(frozenset(required), frozenset(forbidden))


class CountTable:
    """Joint state counts; one (possibly partial) observation per document."""

    def __init__(self, variables: Mapping[str, CoreEventVariable],
                 rows: Iterable[tuple[Mapping[str, str], float]]):
        self.variables = dict(variables)
        self.rows = [(dict(assignment), float(n)) for assignment, n in rows]
        for assignment, _ in self.rows:
            for var, state in assignment.items():
                if var not in self.variables:
                    raise ScoreFailure(f"row mentions unknown variable {var}")
                if state not in self.variables[var].states:
                    raise ScoreFailure(f"state {state!r} unknown for {var}")

    @classmethod
    def from_documents(cls, variables: Mapping[str, CoreEventVariable],
                       corpus: Iterable[OrderedEvents],
                       var_map: VariableMap) -> "CountTable":
        rows = []
        for events in corpus:
            assignment: dict[str, str] = {}
            for key in events.event_keys():
                hit = var_map.variable_of(key)
                if hit is not None:
                    assignment[hit[0]] = hit[1]
            if assignment:
                rows.append((assignment, 1.0))
        return cls(variables, rows)

    def complete_on(self, vars_needed: Sequence[str]) -> list[tuple[dict, float]]:
        return [(a, n) for a, n in self.rows
                if all(v in a for v in vars_needed)]


def bic_family_score(table: CountTable, var: str,
                     parents: Sequence[str]) -> float:
    """Decomposable BIC contribution of one variable given its parents."""
    family = [var] + list(parents)
    rows = table.complete_on(family)
    if not rows:
        raise ScoreFailure(f"no complete observations for family {family}")
    joint: dict[tuple, float] = {}
    marginal: dict[tuple, float] = {}
    total = 0.0
    for assignment, n in rows:
        cfg = tuple(assignment[p] for p in parents)
        joint[cfg + (assignment[var],)] = joint.get(cfg + (assignment[var],), 0.0) + n
        marginal[cfg] = marginal.get(cfg, 0.0) + n
        total += n
    loglik = 0.0
    for key, n in joint.items():
        cfg = key[:-1]
        loglik += n * math.log(n / marginal[cfg])
    n_parent_cfgs = 1
    for p in parents:
        n_parent_cfgs *= len(table.variables[p].states)
    n_params = (len(table.variables[var].states) - 1) * n_parent_cfgs
    return loglik - 0.5 * math.log(total) * n_params


class GlobalNet:
    """DAG over core event variables respecting the edge constraints."""

    def __init__(self, variables: Mapping[str, CoreEventVariable],
                 edges: Iterable[tuple[str, str]],
                 constraints: EdgeConstraints | None = None):
        self.variables = dict(variables)
        self.edges = frozenset(edges)
        for (a, b) in self.edges:
            if a not in self.variables or b not in self.variables:
                raise ValueError(f"edge ({a}, {b}) mentions unknown variable")
        g = self.digraph()
        if not nx.is_directed_acyclic_graph(g):
            raise ValueError("global net must be acyclic")
        if constraints is not None:
            missing = constraints.required - self.edges
            banned = constraints.forbidden & self.edges
            if missing or banned:
                raise ValueError(
                    f"constraint violation: missing={sorted(missing)} "
                    f"banned={sorted(banned)}")

    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(sorted(self.variables))
        g.add_edges_from(sorted(self.edges))
        return g

    def parents(self, var: str) -> tuple[str, ...]:
        return tuple(sorted(a for (a, b) in self.edges if b == var))


@dataclass(frozen=True)
class GNSubgraph:
    variables: frozenset[str]
    edges: frozenset[tuple[str, str]]

    def issubgraph_of(self, other: "GNSubgraph") -> bool:
        return self.variables <= other.variables and self.edges <= other.edges


@dataclass(frozen=True)
class ScoreConfig:
    max_parents: int = 4
    restarts: int = 2
    seed: int = 0
    non_causal: frozenset[tuple[str, str]] = frozenset()


def learn_global_net(table: CountTable, constraints: EdgeConstraints,
                     config: ScoreConfig = ScoreConfig()) -> GlobalNet:
    """Greedy hill-climbing over DAGs under hard edge constraints.

    Required edges are fixed in from the start and never removed or
    reversed; forbidden edges are never added.  Deterministic for a
    fixed seed: candidate moves are scanned in sorted order and the
    first strictly best move wins.  After the search, non-required
    edges named in the expert non-causal list are dropped.
    """
    if not table.rows:
        raise ScoreFailure("empty count table")
    variables = sorted(table.variables)
    var_pairs = [(a, b) for a in variables for b in variables if a != b]
    rng = random.Random(config.seed)
    family_cache: dict[tuple[str, tuple[str, ...]], float] = {}

    def family(var: str, edges: set) -> float:
        # a family with no complete observations cannot be scored; such
        # candidates are never selected (partial-observation tables)
        parents = tuple(sorted(x for (x, y) in edges if y == var))
        key = (var, parents)
        if key not in family_cache:
            try:
                family_cache[key] = bic_family_score(table, var, parents)
            except ScoreFailure:
                if not parents:
                    raise
                family_cache[key] = float("-inf")
        return family_cache[key]

    def violates(edges: set, a: str, b: str) -> bool:
        if (a, b) in constraints.forbidden:
            return True
        if sum(1 for (x, y) in edges if y == b) >= config.max_parents:
            return True
        g = nx.DiGraph(list(edges) + [(a, b)])
        return not nx.is_directed_acyclic_graph(g)

    def climb(start: set[tuple[str, str]]) -> tuple[set, float]:
        edges = set(start)
        score = sum(family(v, edges) for v in variables)
        while True:
            best: tuple[float, str, tuple] | None = None
            for (a, b) in var_pairs:
                if (a, b) in edges or violates(edges, a, b):
                    continue
                s = score - family(b, edges) + family(b, edges | {(a, b)})
                if s > score + 1e-9 and (best is None or s > best[0] + 1e-9):
                    best = (s, "add", (a, b))
            for (a, b) in sorted(edges):
                if (a, b) in constraints.required:
                    continue
                s = score - family(b, edges) + family(b, edges - {(a, b)})
                if s > score + 1e-9 and (best is None or s > best[0] + 1e-9):
                    best = (s, "del", (a, b))
            for (a, b) in sorted(edges):
                if (a, b) in constraints.required:
                    continue
                if violates(edges - {(a, b)}, b, a):
                    continue
                cand = (edges - {(a, b)}) | {(b, a)}
                s = (score - family(b, edges) - family(a, edges)
                     + family(b, cand) + family(a, cand))
                if s > score + 1e-9 and (best is None or s > best[0] + 1e-9):
                    best = (s, "rev", (a, b))
            if best is None:
                return edges, score
            score, op, (a, b) = best
            if op == "add":
                edges.add((a, b))
            elif op == "del":
                edges.discard((a, b))
            else:
                edges.discard((a, b))
                edges.add((b, a))

    best_edges, best_score = climb(set(constraints.required))
    for _ in range(config.restarts):
        start = set(constraints.required)
        candidates = [p for p in var_pairs if p not in start]
        rng.shuffle(candidates)
        for (a, b) in candidates[: len(variables)]:
            if not violates(start, a, b):
                start.add((a, b))
        edges, score = climb(start)
        if score > best_score + 1e-9:
            best_edges, best_score = edges, score

    kept = {e for e in best_edges
            if e in constraints.required or e not in config.non_causal}
    vars_obj = {v: table.variables[v] for v in variables}
    return GlobalNet(vars_obj, kept, constraints)


def project_events(events: OrderedEvents, gn: GlobalNet,
                   var_map: VariableMap) -> GNSubgraph:
    """Induced subgraph of the net over the variables the events mention."""
    mentioned: set[str] = set()
    missing: list[str] = []
    for key in events.event_keys():
        hit = var_map.variable_of(key)
        if hit is None:
            missing.append(key)
        else:
            mentioned.add(hit[0])
    if missing:
        raise UnmappedEvent(
            f"events with no variable assignment: {missing}", missing)
    edges = {(a, b) for (a, b) in gn.edges if a in mentioned and b in mentioned}
    return GNSubgraph(frozenset(mentioned), frozenset(edges))


def locate_document(doc: Document, config: ExtractionConfig, gn: GlobalNet,
                    var_map: VariableMap) -> GNSubgraph:
    """Document -> subgraph of the global net (extraction then projection)."""
    return project_events(extract_events(doc, config), gn, var_map)
