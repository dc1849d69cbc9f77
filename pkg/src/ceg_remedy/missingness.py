"""Missingness machinery: indicator florets, M-CEGs and m-adjustment queries.

When a floret's information may be absent from the logs, a two-edge
indicator floret is spliced into the tree above it: the "NM" edge
continues into the guarded floret, the "Missing" edge jumps to a
collapsed outcome floret carrying the terminal-category masses of the
guarded subtree (path semantics are preserved, only the intermediate
question disappears).  The M-CEG classifies its vertices into
unobservable, observable, missing-indicator and terminal classes and
supports complete-case conditioning, which is what the m-adjustment
formulas condition on.

Identification checks run on two levels: path-set structure on the
M-CEG, and d-separation between event nodes and missingness-indicator
nodes on a process-level graph.  Either failure surfaces as
NotIdentifiable with the failing condition named.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .ceg import (
    CegPath,
    FailureCEG,
    build_ceg,
    enumerate_paths,
    path_probability,
    with_floret_distributions,
)
from .errors import (
    BadWeights,
    NotIdentifiable,
    ZeroConditioningSet,
)
from .hierarchy import Flattening, HierarchicalModel, Assignment, build_flattening, \
    d_separated, i_node, y_node
from .trees import (
    EventTree,
    FAIL,
    NOT_FAIL,
    ProbabilityTree,
    StagedTree,
    compute_positions,
    compute_stages,
)

MISSING = "Missing"
NOT_MISSING = "NM"


@dataclass(frozen=True)
class MTreeInfo:
    """Provenance of an M-event tree relative to its fact tree."""

    indicator_vertex: Mapping[str, str]   # fact vertex -> inserted indicator
    missing_root: Mapping[str, str]       # fact vertex -> collapsed branch root
    fact_vertex: Mapping[str, str]        # m-tree vertex -> fact vertex


def _category_masses(stree: StagedTree, v: str) -> dict[str, float]:
    """Terminal-category mass of the subtree rooted at ``v``."""
    tree = stree.tree
    if tree.is_leaf(v):
        return {tree.leaf_category[v]: 1.0}
    out: dict[str, float] = {}
    for e in tree.children(v):
        p = stree.ptree.edge_prob(e)
        for cat, mass in _category_masses(stree, e.child).items():
            out[cat] = out.get(cat, 0.0) + p * mass
    return out


def build_mtree(stree: StagedTree, unobservable: Iterable[str],
                missing_prob: Mapping[str, float] | float,
                collapse_labels: Mapping[str, str] | None = None,
                ) -> tuple[StagedTree, MTreeInfo]:
    """Splice a missing-floret indicator above each unobservable floret.

    ``missing_prob`` is the chance the floret's information is absent,
    either shared or per vertex.  The "Missing" branch collapses the
    guarded subtree to one outcome floret over its terminal categories,
    labelled via ``collapse_labels`` (category -> edge label).  Stages
    are recomputed on the result; fact vertices sharing a stage keep
    sharing one as long as their missing probabilities agree.
    """
    tree = stree.tree
    unobs = list(dict.fromkeys(unobservable))
    for v in unobs:
        if tree.is_leaf(v):
            raise ValueError(f"unobservable vertex {v} has no floret")
    if isinstance(missing_prob, (int, float)):
        probs = {v: float(missing_prob) for v in unobs}
    else:
        probs = {v: float(missing_prob[v]) for v in unobs}
    labels = dict(collapse_labels or {FAIL: FAIL, NOT_FAIL: NOT_FAIL})

    indicator = {v: f"{v}:ind" for v in unobs}
    missing_root = {v: f"{v}:mis" for v in unobs}

    edges: list[tuple[str, str, str]] = []
    theta: dict[str, list[float]] = {}
    leaf_category: dict[str, str] = {}
    fact_vertex: dict[str, str] = {}

    def add_floret(vertex: str, rows: list[tuple[str, str, float]]):
        theta[vertex] = [p for (_, _, p) in rows]
        for (label, child, _) in rows:
            edges.append((vertex, child, label))

    def emit(v: str, alias: str):
        """Copy the fact subtree at ``v`` under the m-tree name ``alias``."""
        fact_vertex[alias] = v
        if tree.is_leaf(v):
            leaf_category[alias] = tree.leaf_category[v]
            return
        rows = []
        todo = []
        for e in tree.children(v):
            child_alias = e.child
            p = stree.ptree.edge_prob(e)
            if e.child in indicator:
                rows.append((e.label, indicator[e.child], p))
            else:
                rows.append((e.label, child_alias, p))
            todo.append(e)
        add_floret(alias, rows)
        for e in todo:
            if e.child in indicator:
                emit_indicator(e.child)
            else:
                emit(e.child, e.child)

    def emit_indicator(v: str):
        ind, mis = indicator[v], missing_root[v]
        m = probs[v]
        fact_vertex[ind] = v
        add_floret(ind, [(MISSING, mis, m), (NOT_MISSING, v, 1.0 - m)])
        fact_vertex[mis] = v
        masses = _category_masses(stree, v)
        rows = []
        for cat in sorted(masses):
            label = labels.get(cat, cat)
            leaf = f"{mis}:{cat.replace(' ', '_')}"
            leaf_category[leaf] = cat
            fact_vertex[leaf] = v
            rows.append((label, leaf, masses[cat]))
        add_floret(mis, rows)
        emit(v, v)

    if tree.root in indicator:
        root = indicator[tree.root]
        emit_indicator(tree.root)
    else:
        root = tree.root
        emit(tree.root, tree.root)

    mtree = EventTree(root, edges, leaf_category)
    m_ptree = ProbabilityTree(mtree, theta)
    m_staged = compute_stages(m_ptree)
    info = MTreeInfo(dict(indicator), dict(missing_root), fact_vertex)
    return m_staged, info


@dataclass(frozen=True)
class BClass:
    """One missing-floret indicator variable: a stage class of indicator
    positions, with the process-graph parents its dependence declares."""

    name: str
    indicator_positions: tuple[str, ...]
    guarded_positions: tuple[str, ...]   # V^M positions it guards
    missing_positions: tuple[str, ...]   # collapsed-branch receiving positions
    extra_parents: tuple[str, ...] = ()


@dataclass
class MCeg:
    """Failure CEG with missing-floret indicators and vertex classes."""

    ceg: FailureCEG
    fact_ceg: FailureCEG
    v_m: frozenset[str]
    v_o: frozenset[str]
    v_mi: frozenset[str]
    v_s: frozenset[str]
    fact_of: Mapping[str, str | None]          # M position -> fact position
    m_of_fact: Mapping[str, tuple[str, ...]]   # fact position -> M positions
    b_classes: tuple[BClass, ...]

    def classes_guarding(self, positions: Iterable[str]) -> list[BClass]:
        wanted = set(positions)
        return [b for b in self.b_classes
                if wanted & set(b.guarded_positions)]

    def complete_case_paths(self, classes: Iterable[BClass],
                            paths: Sequence[CegPath]) -> list[int]:
        """Indices of paths avoiding every Missing branch of the classes."""
        banned: set[str] = set()
        for b in classes:
            banned |= set(b.missing_positions)
        return [i for i, p in enumerate(paths)
                if not banned & set(p.positions())]


def build_mceg(m_staged: StagedTree, info: MTreeInfo, fact_staged: StagedTree,
               b_extra_parents: Mapping[str, Sequence[str]] | None = None,
               ) -> MCeg:
    """Derive the M-CEG and its vertex classification from an M-tree.

    ``b_extra_parents`` maps a guarded fact vertex to extra process-graph
    parent nodes of its missingness indicator (for declaring mechanisms
    where absence depends on other florets, e.g. recording bias).
    """
    m_positions = compute_positions(m_staged)
    m_ceg = build_ceg(m_staged, m_positions)
    fact_positions = compute_positions(fact_staged)
    fact_ceg = build_ceg(fact_staged, fact_positions)

    pos_of = dict(m_positions.position_of)
    fact_pos_of = dict(fact_positions.position_of)
    indicator_vs = set(info.indicator_vertex.values())
    missing_roots = set(info.missing_root.values())
    guarded_vs = set(info.indicator_vertex)

    v_mi: set[str] = set()
    v_m: set[str] = set()
    v_o: set[str] = set()
    fact_of: dict[str, str | None] = {}
    m_of_fact: dict[str, list[str]] = {}
    for pid, members in m_positions.classes().items():
        if m_staged.tree.is_leaf(members[0]):
            continue
        kinds = set()
        facts = set()
        for v in members:
            if v in indicator_vs:
                kinds.add("mi")
            elif v in missing_roots:
                kinds.add("collapsed")
            elif v in guarded_vs:
                kinds.add("m")
            else:
                kinds.add("o")
            fv = info.fact_vertex.get(v, v)
            if fv in fact_pos_of and not m_staged.tree.is_leaf(v):
                if v in indicator_vs or v in missing_roots:
                    continue
                facts.add(fact_pos_of[fv])
        if kinds == {"mi"}:
            v_mi.add(pid)
            fact_of[pid] = None
        elif kinds == {"m"}:
            v_m.add(pid)
        elif kinds <= {"o", "collapsed"}:
            v_o.add(pid)
        else:
            raise ValueError(f"position {pid} mixes vertex classes {kinds}")
        if kinds in ({"m"}, {"o"}):
            if len(facts) == 1:
                f = facts.pop()
                fact_of[pid] = f
                m_of_fact.setdefault(f, []).append(pid)
            else:
                fact_of[pid] = None
        elif pid not in fact_of:
            fact_of[pid] = None
    v_s = frozenset({m_ceg.sink_fail, m_ceg.sink_nofail})

    extra = {k: tuple(v) for k, v in (b_extra_parents or {}).items()}
    by_stage: dict[str, list[str]] = {}
    for pid in sorted(v_mi):
        by_stage.setdefault(m_ceg.stage_of[pid], []).append(pid)
    guard_of_ind: dict[str, str] = {}
    mis_of_ind: dict[str, str] = {}
    for fact_v, ind_v in info.indicator_vertex.items():
        ind_pos = pos_of[ind_v]
        guard_of_ind[ind_pos] = pos_of[fact_v]
        mis_of_ind[ind_pos] = pos_of[info.missing_root[fact_v]]
    b_classes = []
    for k, (stage, inds) in enumerate(sorted(by_stage.items())):
        guarded = tuple(sorted({guard_of_ind[i] for i in inds}))
        missing = tuple(sorted({mis_of_ind[i] for i in inds}))
        extras: list[str] = []
        for fact_v, ind_v in info.indicator_vertex.items():
            if pos_of[ind_v] in inds:
                extras.extend(extra.get(fact_v, ()))
        b_classes.append(BClass(f"B{k}", tuple(sorted(inds)), guarded, missing,
                                tuple(dict.fromkeys(extras))))
    return MCeg(m_ceg, fact_ceg, frozenset(v_m), frozenset(v_o),
                frozenset(v_mi), v_s, fact_of,
                {k: tuple(v) for k, v in m_of_fact.items()}, tuple(b_classes))


# -- engineer heterogeneity ----------------------------------------------------


@dataclass(frozen=True)
class HeterogeneityModel:
    """Finite engineer clusters with additive hyperparameter offsets."""

    weights: Mapping[str, float]                      # cluster -> p(eta)
    offsets: Mapping[str, Mapping[str, float]]        # cluster -> label -> offset

    def __post_init__(self):
        if not self.weights:
            raise BadWeights("at least one cluster is required")
        total = sum(self.weights.values())
        if abs(total - 1.0) > 1e-9 or any(p < 0 for p in self.weights.values()):
            raise BadWeights(f"cluster weights sum to {total!r}")


def mix_heterogeneity(het: HeterogeneityModel,
                      alphas: Mapping[str, float]) -> dict[str, float]:
    """Mixture mean of the per-cluster Dirichlet-role means."""
    out = {label: 0.0 for label in alphas}
    for cluster, p in het.weights.items():
        offs = het.offsets.get(cluster, {})
        adjusted = {label: alphas[label] + offs.get(label, 0.0)
                    for label in alphas}
        if any(a <= 0 for a in adjusted.values()):
            raise BadWeights(f"cluster {cluster} drives a hyperparameter below 0")
        total = sum(adjusted.values())
        for label in alphas:
            out[label] += p * adjusted[label] / total
    return out


# -- missing event indicators on the flattening ---------------------------------


@dataclass(frozen=True)
class MissingEventIndicators:
    """N-event-dependent missingness of the core events along a path."""

    depth: int

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("dependence depth must be at least 1")


def extend_flattening_with_missingness(
        model: HierarchicalModel, assignment: Assignment,
        spec: MissingEventIndicators) -> Flattening:
    """Add a missing-event indicator per active core event.

    Each indicator shares its floret variable as direct superior and
    takes the N preceding core events of the path-ordered sequence as
    parents; when the window reaches past the start of the current
    community it continues into the preceding one.
    """
    flat = build_flattening(model, assignment)
    path = assignment.to_path(model.ceg)
    sequence: list[tuple[str, str]] = []  # (var, floret position)
    for e in path.edges:
        sub = model.cmap.subcommunities.get(e.key())
        if sub is None:
            continue
        for var in sub.emission.variables:
            sequence.append((var, e.src))
    for k, (var, w) in enumerate(sequence):
        node = f"B({var})"
        flat.add_node(node, "missing")
        flat.add_edge(y_node(w), node)
        for prev, _ in sequence[max(0, k - spec.depth):k]:
            flat.add_edge(prev, node)
        flat.add_edge(node, var)
    return flat


def check_missing_indicator_markov(model: HierarchicalModel,
                                   flat: Flattening) -> list[str]:
    """RCMC instances for every missing-event indicator; returns violations."""
    bad = []
    for node in flat.nodes_of_kind("missing"):
        parents = set(flat.graph.predecessors(node))
        desc = flat.descendants(node)
        nd = set(flat.graph.nodes) - desc - {node}
        if not d_separated(flat, {node}, nd - parents, parents):
            bad.append(node)
    return bad


# -- m-adjustment checks ---------------------------------------------------------


def _process_graph(mceg: MCeg) -> Flattening:
    """Fact-process graph with one node per missingness indicator class.

    An indicator class whose stage covers every indicator guarding its
    fact florets is position-independent and enters parentless; a split
    family declares dependence on where the process is, so each class
    gains the incident nodes of the fact positions it guards.  Declared
    extra parents (recording-bias mechanisms) are added verbatim.
    """
    ceg = mceg.fact_ceg
    flat = Flattening()
    for w in ceg.positions:
        flat.add_node(i_node(w), "incident")
    for w in ceg.nonsink_positions():
        flat.add_node(y_node(w), "floret")
        flat.add_edge(i_node(w), y_node(w))
    for e in ceg.edges:
        flat.add_edge(i_node(e.src), i_node(e.dst))
        flat.add_edge(y_node(e.src), i_node(e.dst))

    def fact_stage(m_pos: str) -> str | None:
        f = mceg.fact_of.get(m_pos)
        return None if f is None else ceg.stage_of.get(f)

    guards_by_stage: dict[str, set[str]] = {}
    for b in mceg.b_classes:
        for g in b.guarded_positions:
            s = fact_stage(g)
            if s is not None:
                guards_by_stage.setdefault(s, set()).add(b.name)
    for b in mceg.b_classes:
        flat.add_node(b.name, "missing")
        stages = {fact_stage(g) for g in b.guarded_positions}
        stages.discard(None)
        family = {name for s in stages for name in guards_by_stage.get(s, set())}
        if len(family) > 1:
            # the stage family splits across indicator classes: absence
            # depends on which floret instance the process reached
            for g in sorted(b.guarded_positions):
                f = mceg.fact_of.get(g)
                if f is not None:
                    flat.add_edge(i_node(f), b.name)
        for p in b.extra_parents:
            if p not in flat.graph:
                flat.add_node(p, "floret")
            flat.add_edge(p, b.name)
    return flat


def _event_node(flat: Flattening, name: str, fact_vertices: Iterable[str]):
    flat.add_node(name, "event")
    for w in fact_vertices:
        flat.add_edge(i_node(w), name)


def _fact_vertices_of(mceg: MCeg, m_vertices: Iterable[str]) -> list[str]:
    out = []
    for w in m_vertices:
        f = mceg.fact_of.get(w)
        if f is None:
            g = [b for b in mceg.b_classes if w in b.indicator_positions]
            if g:
                f = mceg.fact_of.get(g[0].guarded_positions[0])
        if f is not None and f not in out:
            out.append(f)
    return out


def check_m_adjustment(mceg: MCeg, w_x: Sequence[str], w_y: Sequence[str],
                       z_classes: Sequence[Sequence[str]],
                       b_w: Sequence[BClass]) -> None:
    """The two m-adjustment conditions as d-separation statements.

    Condition (a): the effect event is independent of the relevant
    missingness indicators given the controlled event and the partition.
    Condition (b): the partition is independent of those indicators.
    Raises NotIdentifiable naming the failing condition.
    """
    flat = _process_graph(mceg)
    _event_node(flat, "X*", _fact_vertices_of(mceg, w_x))
    _event_node(flat, "Y*", _fact_vertices_of(mceg, w_y))
    z_fact: list[str] = []
    for cls in z_classes:
        z_fact.extend(_fact_vertices_of(mceg, cls))
    _event_node(flat, "Z*", z_fact)
    b_nodes = {b.name for b in b_w}
    if not b_nodes:
        return
    if not d_separated(flat, {"Z*"}, b_nodes, set()):
        raise NotIdentifiable(
            "back-door partition is not independent of the missingness "
            "indicators", condition="Z indep B_W")
    if not d_separated(flat, {"Y*"}, b_nodes, {"X*", "Z*"}):
        raise NotIdentifiable(
            "effect depends on the missingness indicators given the "
            "controlled event and the partition", condition="Y indep B_W | X, Z")


# -- m-back-door queries ----------------------------------------------------------


def _path_sets(ceg: FailureCEG, paths: Sequence[CegPath]):
    by_vertex: dict[str, set[int]] = {}
    for i, p in enumerate(paths):
        for w in p.positions():
            by_vertex.setdefault(w, set()).add(i)

    def of(vertices: Iterable[str]) -> set[int]:
        out: set[int] = set()
        for w in vertices:
            out |= by_vertex.get(w, set())
        return out

    return of


def m_backdoor_singular(mceg: MCeg, x_label: str, y_label: str,
                        z_labels: Sequence[str]) -> float:
    """Singular-manipulation effect recovered from complete cases.

    ``x_label`` / ``y_label`` / ``z_labels`` are d-event edge labels on
    the M-CEG.  The conditioning set restricts to paths whose relevant
    missing-floret indicators all read "non-missing".
    """
    ceg = mceg.ceg
    w_x = sorted({e.dst for e in ceg.edges if e.label == x_label})
    w_y = sorted({e.dst for e in ceg.edges if e.label == y_label})
    z_classes = [sorted({e.dst for e in ceg.edges if e.label == z})
                 for z in z_labels]
    if not w_x or not w_y or any(not cls for cls in z_classes):
        raise ZeroConditioningSet("unknown d-event label")

    relevant = set()
    for w in w_x + w_y:
        relevant.update(ceg.parents(w))
    for cls in z_classes:
        for w in cls:
            relevant.update(ceg.parents(w))
    w_set = sorted(relevant & mceg.v_m)
    b_w = mceg.classes_guarding(w_set)
    check_m_adjustment(mceg, w_x, w_y, z_classes, b_w)

    paths = enumerate_paths(ceg)
    of = _path_sets(ceg, paths)
    complete = set(mceg.complete_case_paths(b_w, paths))

    def mass(idx: set[int]) -> float:
        return sum(path_probability(ceg, paths[i]) for i in idx)

    forceable = {e.src for e in ceg.edges if e.label == x_label}
    if not complete <= of(forceable):
        raise NotIdentifiable(
            "the controlled event is not forceable on every complete case",
            condition="forceable")
    x_idx, y_idx = of(w_x), of(w_y)
    b0_mass = mass(complete)
    if b0_mass <= 0.0:
        raise ZeroConditioningSet("no complete cases")
    total = 0.0
    for cls in z_classes:
        z_idx = of(cls)
        denom = mass(x_idx & z_idx & complete)
        if denom <= 0.0:
            raise ZeroConditioningSet(
                f"no complete-case mass through {sorted(cls)} and the "
                "controlled event")
        cond = mass(x_idx & z_idx & y_idx & complete) / denom
        total += cond * (mass(z_idx & complete) / b0_mass)
    return total


def m_backdoor_remedial(mceg: MCeg, root_causes_fact: Sequence[str],
                        pi_star_fact: Mapping[str, Mapping[str, float]],
                        y_label: str,
                        z_labels: Sequence[str] | None = None) -> float:
    """Remedial-intervention effect on the M-CEG (complete-case form).

    ``pi_star_fact`` is keyed by fact positions; it is transported onto
    the M-CEG through the position provenance map.  The affected term
    conditions every probability on the relevant indicators reading
    "non-missing" and weighs by the manipulated complete-case reach; the
    unaffected term conditions on the indicators guarding the effect's
    and the root cause's parents.
    """
    ceg = mceg.ceg
    pi_star_m: dict[str, dict[str, float]] = {}
    for fact_pos, dist in pi_star_fact.items():
        for m_pos in mceg.m_of_fact.get(fact_pos, ()):
            pi_star_m[m_pos] = dict(dist)
    if not pi_star_m:
        raise ZeroConditioningSet(
            "no manipulated fact floret appears on the M-CEG")
    parents = sorted(pi_star_m)
    w_x = sorted({e.dst for p in parents for e in ceg.out_edges(p)
                  if not ceg.is_sink(e.dst)})
    w_y = sorted({e.dst for e in ceg.edges if e.label == y_label})
    if not w_y:
        raise ZeroConditioningSet(f"unknown effect d-event label {y_label!r}")
    if z_labels is None:
        z_classes: list[list[str]] = [[ceg.root]]
    else:
        z_classes = [sorted({e.dst for e in ceg.edges if e.label == z})
                     for z in z_labels]
    w_bar = []
    for f in root_causes_fact:
        for m_pos in mceg.m_of_fact.get(f, (f,)):
            if m_pos not in w_x and m_pos in ceg.positions:
                w_bar.append(m_pos)

    relevant = set()
    for w in list(w_x) + list(w_y):
        relevant.update(ceg.parents(w))
    for cls in z_classes:
        for w in cls:
            relevant.update(ceg.parents(w))
    w_set = sorted(relevant & mceg.v_m)
    b_w = mceg.classes_guarding(w_set)
    check_m_adjustment(mceg, w_x, w_y, z_classes, b_w)

    paths = enumerate_paths(ceg)
    of = _path_sets(ceg, paths)
    complete = set(mceg.complete_case_paths(b_w, paths))
    manipulated = with_floret_distributions(ceg, pi_star_m)

    def mass(idx: set[int], graph: FailureCEG = ceg) -> float:
        return sum(path_probability(graph, paths[i]) for i in idx)

    y_idx = of(w_y)
    b0 = mass(complete)
    if b0 <= 0.0:
        raise ZeroConditioningSet("no complete cases")
    star_b0 = mass(complete, manipulated)
    if star_b0 <= 0.0:
        raise ZeroConditioningSet("no complete cases under the manipulation")
    affected = 0.0
    y_set = set(w_y)
    for p in parents:
        for e in ceg.out_edges(p):
            if ceg.is_sink(e.dst) and e.dst in y_set:
                direct = {i for i in complete
                          if e in paths[i].edges}
                affected += mass(direct, manipulated) / star_b0
    for w in w_x:
        w_idx = of([w])
        star = mass(w_idx & complete, manipulated) / star_b0
        if star <= 0.0:
            continue
        for cls in z_classes:
            z_idx = of(cls)
            denom = mass(w_idx & z_idx & complete)
            if denom <= 0.0:
                raise ZeroConditioningSet(
                    f"no complete-case mass through {w} and {sorted(cls)}")
            cond = mass(w_idx & z_idx & y_idx & complete) / denom
            affected += cond * (mass(z_idx & complete) / b0) * star
    unaffected = 0.0
    for w in w_bar:
        w_idx = of([w])
        b_y = mceg.classes_guarding(sorted(
            set().union(*(ceg.parents(v) for v in w_y)) & mceg.v_m))
        b_wp = mceg.classes_guarding(sorted(set(ceg.parents(w)) & mceg.v_m))
        cc_y = set(mceg.complete_case_paths(b_y + b_wp, paths))
        cc_w = set(mceg.complete_case_paths(b_wp, paths))
        denom = mass(w_idx & cc_y)
        base = mass(cc_w)
        if denom <= 0.0 or base <= 0.0:
            continue
        cond = mass(w_idx & y_idx & cc_y) / denom
        unaffected += cond * (mass(w_idx & cc_w) / base)
    return affected + unaffected
