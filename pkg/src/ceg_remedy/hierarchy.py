"""Binding of the global net to the CEG: the two-level causal model.

Every CEG edge may carry a sub-community: a set of core event variables
with the net's induced edges among them and conditional probability
tables, interpreted as the emission model of the events that trigger
that transition.  The community of a position is the union over its
emanating edges.  From this binding we derive direct superiors, build
per-assignment flattenings, run d-separation checks for the layered
Markov conditions, map observed subgraphs to latent paths, and evaluate
the effect of forcing a core event.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .ceg import CegEdge, CegPath, FailureCEG, enumerate_paths, path_probability, \
    reach_probabilities
from .errors import (
    AmbiguousPath,
    InconsistentAssignment,
    NoMatchingEdge,
    OrphanVariable,
    UnknownVariable,
    ZeroDenominator,
)
from .globalnet import GlobalNet, GNSubgraph

EdgeKey = tuple[str, str]  # (source position, edge label)


class EmissionModel:
    """Small Bayesian network over one sub-community.

    ``cpts[var]`` maps a tuple of parent states (ordered like
    ``parents[var]``) to a state -> probability row.
    """

    def __init__(self, variables: Sequence[str],
                 parents: Mapping[str, Sequence[str]],
                 cpts: Mapping[str, Mapping[tuple, Mapping[str, float]]],
                 states: Mapping[str, Sequence[str]]):
        self.variables = tuple(variables)
        self.parents = {v: tuple(parents.get(v, ())) for v in self.variables}
        self.states = {v: tuple(states[v]) for v in self.variables}
        self.cpts = {v: {tuple(k): dict(row) for k, row in cpts[v].items()}
                     for v in self.variables}
        order = nx.DiGraph()
        order.add_nodes_from(self.variables)
        for v, ps in self.parents.items():
            for p in ps:
                if p not in self.variables:
                    raise ValueError(f"parent {p} of {v} outside sub-community")
                order.add_edge(p, v)
        self._topo = list(nx.topological_sort(order))
        for v in self.variables:
            for cfg in itertools.product(*(self.states[p] for p in self.parents[v])):
                row = self.cpts[v].get(tuple(cfg))
                if row is None:
                    raise ValueError(f"missing CPT row for {v} given {cfg}")
                if abs(sum(row.values()) - 1.0) > 1e-9:
                    raise ValueError(f"CPT row for {v} given {cfg} does not sum to 1")

    def assignments(self) -> Iterable[dict[str, str]]:
        for states in itertools.product(*(self.states[v] for v in self.variables)):
            yield dict(zip(self.variables, states))

    def joint(self, assignment: Mapping[str, str]) -> float:
        prob = 1.0
        for v in self.variables:
            cfg = tuple(assignment[p] for p in self.parents[v])
            prob *= self.cpts[v][cfg][assignment[v]]
        return prob

    def marginal(self, var: str, state: str) -> float:
        if var not in self.variables:
            return 0.0
        return sum(self.joint(a) for a in self.assignments() if a[var] == state)

    def severed(self, var: str) -> "EmissionModel":
        """Copy with the incoming edges of ``var`` cut.

        The severed variable keeps its context marginal as a parentless
        table, matching the do-style manipulation on the sub-community.
        """
        if var not in self.variables:
            return self
        marg = {s: self.marginal(var, s) for s in self.states[var]}
        parents = dict(self.parents)
        parents[var] = ()
        cpts = {v: self.cpts[v] for v in self.variables}
        cpts[var] = {(): marg}
        return EmissionModel(self.variables, parents, cpts, self.states)


@dataclass(frozen=True)
class SubCommunity:
    emission: EmissionModel
    d_event: str


class CommunityMap:
    """Per-edge sub-communities plus the net they live on.

    Validates the induced-closure rule (a sub-community's internal
    edges are exactly the net's edges among its members) and the
    no-cross-edge condition for overlapping communities.
    """

    def __init__(self, gn: GlobalNet,
                 subcommunities: Mapping[EdgeKey, SubCommunity]):
        self.gn = gn
        self.subcommunities = dict(subcommunities)
        for key, sub in self.subcommunities.items():
            vars_ = set(sub.emission.variables)
            unknown = vars_ - set(gn.variables)
            if unknown:
                raise UnknownVariable(
                    f"sub-community at {key} mentions unknown {sorted(unknown)}")
            induced = {(a, b) for (a, b) in gn.edges
                       if a in vars_ and b in vars_}
            declared = {(p, v) for v, ps in sub.emission.parents.items()
                        for p in ps}
            if declared != induced:
                raise ValueError(
                    f"sub-community at {key} is not induced-closed: "
                    f"declared {sorted(declared)} vs induced {sorted(induced)}")

    def subgraph(self, key: EdgeKey) -> GNSubgraph:
        sub = self.subcommunities[key]
        vars_ = frozenset(sub.emission.variables)
        edges = frozenset((a, b) for (a, b) in self.gn.edges
                          if a in vars_ and b in vars_)
        return GNSubgraph(vars_, edges)

    def community(self, ceg: FailureCEG, w: str) -> frozenset[str]:
        out: set[str] = set()
        for e in ceg.out_edges(w):
            sub = self.subcommunities.get(e.key())
            if sub is not None:
                out.update(sub.emission.variables)
        return frozenset(out)

    def variable_edges(self, var: str) -> list[EdgeKey]:
        return sorted(k for k, sub in self.subcommunities.items()
                      if var in sub.emission.variables)

    def d_event_edges(self, ceg: FailureCEG, d_event: str) -> list[CegEdge]:
        out = []
        for e in ceg.edges:
            sub = self.subcommunities.get(e.key())
            name = sub.d_event if sub is not None else e.label
            if name == d_event or e.label == d_event:
                out.append(e)
        return out


class HierarchicalModel:
    """A CEG whose edges are explained by sub-communities of a global net."""

    def __init__(self, ceg: FailureCEG, cmap: CommunityMap):
        self.ceg = ceg
        self.cmap = cmap
        for key in cmap.subcommunities:
            src, label = key
            try:
                ceg.edge(src, label)
            except KeyError:
                raise ValueError(f"sub-community attached to unknown edge {key}")
        self._check_overlap_assumption()
        self._check_path_disjointness()

    # -- validation ----------------------------------------------------------

    def _check_overlap_assumption(self):
        """Overlapping communities must have no net edge across their
        symmetric difference (collocated florets carry similar
        information and never align on one path)."""
        ws = self.ceg.nonsink_positions()
        comms = {w: self.cmap.community(self.ceg, w) for w in ws}
        for i, wi in enumerate(ws):
            for wj in ws[i + 1:]:
                shared = comms[wi] & comms[wj]
                if not shared:
                    continue
                only_i = comms[wi] - shared
                only_j = comms[wj] - shared
                for a in only_i:
                    for b in only_j:
                        if (a, b) in self.cmap.gn.edges or (b, a) in self.cmap.gn.edges:
                            raise InconsistentAssignment(
                                f"net edge between {a} and {b} crosses the "
                                f"overlapping communities of {wi} and {wj}")

    def _check_path_disjointness(self):
        """No variable may be emitted twice along a single path."""
        for path in enumerate_paths(self.ceg):
            seen: dict[str, str] = {}
            for e in path.edges:
                sub = self.cmap.subcommunities.get(e.key())
                if sub is None:
                    continue
                for var in sub.emission.variables:
                    if var in seen:
                        raise InconsistentAssignment(
                            f"variable {var} active twice on path "
                            f"{path.key()!r} (edges {seen[var]} and {e.key()})")
                    seen[var] = str(e.key())

    # -- structural queries --------------------------------------------------

    def receiving_vertices(self, var: str) -> list[str]:
        """Positions entered by the transitions the variable helps trigger."""
        keys = self.cmap.variable_edges(var)
        out = []
        for (src, label) in keys:
            dst = self.ceg.edge(src, label).dst
            if dst not in out:
                out.append(dst)
        return sorted(out)

    def direct_superiors(self, var: str) -> tuple[tuple[str, ...], tuple[str, ...]]:
        """(positions whose florets are latent for ``var``, their Y-node names)."""
        recv = self.receiving_vertices(var)
        if not recv:
            raise OrphanVariable(f"variable {var} appears in no community")
        supers: list[str] = []
        for w in recv:
            for p in self.ceg.parents(w):
                if p not in supers:
                    supers.append(p)
        supers = sorted(supers)
        return tuple(supers), tuple(f"Y({w})" for w in supers)

    # -- per-path emission machinery ------------------------------------------

    def active_emissions(self, path: CegPath) -> list[tuple[EdgeKey, EmissionModel]]:
        out = []
        for e in path.edges:
            sub = self.cmap.subcommunities.get(e.key())
            if sub is not None:
                out.append((e.key(), sub.emission))
        return out

    def emission_probability(self, w: str, var: str, state: str) -> float:
        """pi(var = state | paths through ``w``), mixing over incoming edges.

        Edges whose sub-community does not carry the variable contribute
        zero (the event is never emitted there).
        """
        reach = reach_probabilities(self.ceg)
        if reach[w] <= 0.0:
            return 0.0
        total = 0.0
        for e in self.ceg.in_edges(w):
            weight = reach[e.src] * e.prob / reach[w]
            sub = self.cmap.subcommunities.get(e.key())
            if sub is not None:
                total += weight * sub.emission.marginal(var, state)
        return total


# -- assignments -------------------------------------------------------------


@dataclass(frozen=True)
class Assignment:
    """Floret values and incident bits induced by one root-to-sink path."""

    floret_values: Mapping[str, str]  # non-terminal position -> taken label or ""
    incident: Mapping[str, int]

    @classmethod
    def from_path(cls, ceg: FailureCEG, path: CegPath) -> "Assignment":
        values = {w: "" for w in ceg.nonsink_positions()}
        bits = {w: 0 for w in ceg.positions}
        for w in path.positions():
            bits[w] = 1
        for e in path.edges:
            values[e.src] = e.label
        return cls(values, bits)

    def to_path(self, ceg: FailureCEG) -> CegPath:
        edges = []
        w = ceg.root
        if not self.incident.get(w, 0):
            raise InconsistentAssignment("root incident bit is 0")
        while not ceg.is_sink(w):
            label = self.floret_values.get(w, "")
            if not label:
                raise InconsistentAssignment(f"no floret value at visited {w}")
            e = ceg.edge(w, label)
            edges.append(e)
            w = e.dst
        path = CegPath(tuple(edges))
        on_path = set(path.positions())
        for w2, bit in self.incident.items():
            if bool(bit) != (w2 in on_path):
                raise InconsistentAssignment(f"incident bit at {w2} inconsistent")
        for w2, label in self.floret_values.items():
            if label and w2 not in on_path:
                raise InconsistentAssignment(f"floret value at unvisited {w2}")
        return path


# -- flattening --------------------------------------------------------------


def y_node(w: str) -> str:
    return f"Y({w})"


def i_node(w: str) -> str:
    return f"I({w})"


class Flattening:
    """Non-recursive DAG over floret, incident, core-event and auxiliary nodes."""

    def __init__(self):
        self.graph = nx.DiGraph()
        self.kind: dict[str, str] = {}
        self.core_parents: dict[str, tuple[str, ...]] = {}
        self.dsup: dict[str, tuple[str, ...]] = {}

    def add_node(self, name: str, kind: str):
        self.graph.add_node(name)
        self.kind[name] = kind

    def add_edge(self, a: str, b: str):
        self.graph.add_edge(a, b)

    def nodes_of_kind(self, kind: str) -> list[str]:
        return sorted(n for n, k in self.kind.items() if k == kind)

    def descendants(self, node: str) -> set[str]:
        return nx.descendants(self.graph, node)


def build_flattening(model: HierarchicalModel, assignment: Assignment,
                     holding_time: Iterable[str] = ()) -> Flattening:
    """Flattening of the two-level model under one assignment.

    Arrows follow the parent / direct-superior rule: the process level
    chains incident and floret nodes along the CEG; each visited floret
    points across to the members of the sub-community its value selects;
    within a sub-community the net's own edges apply.  Optional holding
    time nodes attach to their floret only.
    """
    ceg = model.ceg
    flat = Flattening()
    for w in ceg.positions:
        flat.add_node(i_node(w), "incident")
    for w in ceg.nonsink_positions():
        flat.add_node(y_node(w), "floret")
        flat.add_edge(i_node(w), y_node(w))
    for e in ceg.edges:
        flat.add_edge(i_node(e.src), i_node(e.dst))
        flat.add_edge(y_node(e.src), i_node(e.dst))

    path = assignment.to_path(ceg)
    for e in path.edges:
        sub = model.cmap.subcommunities.get(e.key())
        if sub is None:
            continue
        em = sub.emission
        for var in em.variables:
            if var not in flat.kind:
                flat.add_node(var, "core")
            flat.add_edge(y_node(e.src), var)
            prev = flat.dsup.get(var, ())
            flat.dsup[var] = tuple(dict.fromkeys(prev + (y_node(e.src),)))
        for var in em.variables:
            for p in em.parents[var]:
                flat.add_edge(p, var)
            flat.core_parents[var] = em.parents[var]

    for w in holding_time:
        node = f"T({w})"
        flat.add_node(node, "holding")
        flat.add_edge(y_node(w), node)

    if not nx.is_directed_acyclic_graph(flat.graph):
        raise InconsistentAssignment("flattening is cyclic")
    return flat


def d_separated(flat: Flattening, a: Iterable[str], b: Iterable[str],
                z: Iterable[str]) -> bool:
    """Standard d-separation on the flattening digraph.

    Uses the moralised-ancestral-graph reduction.  Sets may overlap;
    conditioning wins (a node in Z never transmits).
    """
    g = flat.graph
    a, b, z = set(a), set(b), set(z)
    for n in a | b | z:
        if n not in g:
            raise UnknownVariable(f"unknown flattening node {n}")
    a, b = a - z, b - z
    if not a or not b:
        return True
    if a & b:
        return False
    relevant = set(a) | set(b) | set(z)
    for n in list(relevant):
        relevant |= nx.ancestors(g, n)
    moral = nx.Graph()
    moral.add_nodes_from(relevant)
    for n in relevant:
        for p in g.predecessors(n):
            if p in relevant:
                moral.add_edge(p, n)
        preds = [p for p in g.predecessors(n) if p in relevant]
        for p1, p2 in itertools.combinations(preds, 2):
            moral.add_edge(p1, p2)
    moral.remove_nodes_from(z)
    seen = set()
    stack = [n for n in a if n in moral]
    while stack:
        n = stack.pop()
        if n in b:
            return False
        if n in seen:
            continue
        seen.add(n)
        stack.extend(m for m in moral.neighbors(n) if m not in seen)
    return True


@dataclass(frozen=True)
class MarkovCheck:
    variable: str
    condition: str  # "cmc" | "rmc" | "rcmc"
    holds: bool
    detail: str = ""


@dataclass(frozen=True)
class RcmcReport:
    checks: tuple[MarkovCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)

    def violations(self) -> list[MarkovCheck]:
        return [c for c in self.checks if not c.holds]


def check_rcmc(model: HierarchicalModel, flat: Flattening) -> RcmcReport:
    """Verify the layered Markov conditions on a flattening instance.

    For every active core event variable: independence of its
    non-descendants given parents and direct superiors; independence of
    the off-superior florets and all incident indicators given the
    superiors and the non-descendant core variables; and the combined
    statement implied by the two.  Violations are reported per variable
    and condition.
    """
    ceg = model.ceg
    checks: list[MarkovCheck] = []
    all_nodes = set(flat.graph.nodes)
    core_vars = set(flat.nodes_of_kind("core"))
    incident_nodes = set(flat.nodes_of_kind("incident"))
    for var in sorted(core_vars):
        supers, y_names = model.direct_superiors(var)
        y_cond = {y for y in y_names if y in all_nodes}
        pa = set(flat.core_parents.get(var, ()))
        desc = flat.descendants(var)
        nd_all = all_nodes - desc - {var}
        nd_core = core_vars - desc - {var}
        y_bar = {y_node(w) for w in ceg.nonsink_positions()
                 if w not in supers} & all_nodes

        z1 = pa | y_cond
        b1 = nd_all - z1
        ok1 = d_separated(flat, {var}, b1, z1)
        checks.append(MarkovCheck(var, "cmc", ok1))

        z2 = y_cond | nd_core
        b2 = (y_bar | incident_nodes) - z2
        ok2 = d_separated(flat, {var}, b2, z2)
        checks.append(MarkovCheck(var, "rmc", ok2))

        z3 = pa | y_cond
        b3 = (nd_core | y_bar | incident_nodes) - z3
        ok3 = d_separated(flat, {var}, b3, z3)
        detail = "" if (ok1 and ok2) == ok3 else "conjunction does not transfer"
        checks.append(MarkovCheck(var, "rcmc", ok3, detail))
    return RcmcReport(tuple(checks))


# -- latent path map ----------------------------------------------------------


def latent_path(model: HierarchicalModel, observed: GNSubgraph,
                resolve: str = "strict") -> CegPath:
    """Map an observed net subgraph to the latent root-to-sink path.

    At each floret the edges whose sub-community subgraph is contained
    in the observation (vertex and edge containment) are the strong
    candidates; a floret with none is treated as silent and keeps every
    edge open.  A full path must also explain the observation: every
    observed variable belongs to some sub-community active along it.
    Under full observability the selection is unique.  Several surviving
    paths raise :class:`AmbiguousPath` carrying the candidates and their
    normalised prior masses; ``resolve="max_prob"`` opts in to taking
    the heaviest instead.  No surviving path means the observation is
    inconsistent with the model.
    """
    ceg = model.ceg
    matches: list[CegPath] = []

    def candidates(w: str) -> list[CegEdge]:
        out = sorted(ceg.out_edges(w), key=lambda e: (e.label, e.dst))
        strong = [e for e in out
                  if e.key() in model.cmap.subcommunities
                  and model.cmap.subgraph(e.key()).issubgraph_of(observed)]
        return strong if strong else out

    def rec(w: str, acc: list[CegEdge]):
        if ceg.is_sink(w):
            covered: set[str] = set()
            for e in acc:
                sub = model.cmap.subcommunities.get(e.key())
                if sub is not None:
                    covered.update(sub.emission.variables)
            if observed.variables <= covered or not observed.variables:
                matches.append(CegPath(tuple(acc)))
            return
        for e in candidates(w):
            acc.append(e)
            rec(e.dst, acc)
            acc.pop()

    rec(ceg.root, [])
    if not matches:
        raise NoMatchingEdge(
            "no root-to-sink path is compatible with the observation")
    if len(matches) == 1:
        return matches[0]
    masses = [path_probability(ceg, p) for p in matches]
    total = sum(masses) or 1.0
    weighted = sorted(zip(matches, [m / total for m in masses]),
                      key=lambda mw: -mw[1])
    if resolve == "max_prob":
        return weighted[0][0]
    raise AmbiguousPath(
        f"{len(matches)} paths are compatible with the observation", weighted)


def map_document(doc, config, gn: GlobalNet, var_map, model: HierarchicalModel,
                 resolve: str = "strict") -> CegPath:
    """Document -> latent path: extraction, projection, then the latent map."""
    from .globalnet import locate_document

    return latent_path(model, locate_document(doc, config, gn, var_map), resolve)


# -- control of a core event ---------------------------------------------------


def control_core_event(model: HierarchicalModel, var: str, state: str,
                       target: Iterable[str]) -> float:
    """Probability of the target path event when a core event is forced.

    Closed form: both sums range over the receiving vertices of the
    transitions the variable can trigger; the emission terms are
    evaluated with the variable's incoming net edges severed in each
    sub-community (the severed marginal), per the do-style manipulation
    on the surface layer.
    """
    ceg = model.ceg
    recv = model.receiving_vertices(var)
    if not recv:
        raise OrphanVariable(f"variable {var} appears in no community")
    target = set(target)
    paths = enumerate_paths(ceg)
    reach = reach_probabilities(ceg)

    hits = [w for w in recv]
    for p in paths:
        if len(set(p.positions()) & set(hits)) > 1:
            raise InconsistentAssignment(
                f"path {p.key()!r} passes several receiving vertices of {var}")

    def mass_through_and_target(w: str) -> float:
        return sum(path_probability(ceg, p) for p in paths
                   if p.passes(w) and target & set(p.positions()))

    def severed_emission(w: str) -> float:
        if reach[w] <= 0.0:
            return 0.0
        total = 0.0
        for e in ceg.in_edges(w):
            weight = reach[e.src] * e.prob / reach[w]
            sub = model.cmap.subcommunities.get(e.key())
            if sub is not None:
                total += weight * sub.emission.severed(var).marginal(var, state)
        return total

    numerator = 0.0
    denominator = 0.0
    for w in recv:
        p_u = severed_emission(w)
        numerator += mass_through_and_target(w) * p_u
        denominator += p_u * reach[w]
    if denominator <= 0.0:
        raise ZeroDenominator(
            f"forcing {var}={state} has zero probability under the model")
    return numerator / denominator
