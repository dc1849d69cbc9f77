"""Shared random-model generators for the test suite.

The staged-tree generator draws continuous probabilities, so stage
collisions only happen where a test plants them on purpose; the layered
remedial generator builds component -> root cause -> (symptom ->)
outcome systems whose root-cause positions are guaranteed pairwise
path-disjoint and failure-covering.
"""

from __future__ import annotations

import random

from ceg_remedy.ceg import FailureCEG, build_ceg
from ceg_remedy.globalnet import CoreEventVariable, GlobalNet
from ceg_remedy.hierarchy import (
    CommunityMap,
    EmissionModel,
    HierarchicalModel,
    SubCommunity,
)
from ceg_remedy.trees import (
    EventTree,
    ProbabilityTree,
    StagedTree,
    compute_positions,
    compute_stages,
)


def dirichlet_like(rng: random.Random, k: int) -> tuple[float, ...]:
    raw = [rng.uniform(0.05, 1.0) for _ in range(k)]
    total = sum(raw)
    return tuple(r / total for r in raw)


def canonical_adjacency(root, edges, sinks):
    """Relabel positions by BFS over sorted edge labels; return edge set.

    ``edges`` maps src -> list of (label, dst, prob); sink names map to
    fixed class labels so the terminal nodes always align.  Two graphs
    are structurally identical iff their canonical edge sets are equal.
    """
    name = {root: "c0"}
    for kind, s in sinks.items():
        name[s] = kind
    order = [root]
    i = 0
    counter = 1
    while i < len(order):
        src = order[i]
        i += 1
        for label, dst, _ in sorted(edges.get(src, [])):
            if dst not in name:
                name[dst] = f"c{counter}"
                counter += 1
                order.append(dst)
    out = set()
    for src, lst in edges.items():
        for label, dst, prob in lst:
            out.add((name[src], label, name[dst], round(prob, 9)))
    return out


def ceg_adjacency(ceg: FailureCEG):
    edges: dict[str, list] = {}
    for e in ceg.edges:
        edges.setdefault(e.src, []).append((e.label, e.dst, e.prob))
    return canonical_adjacency(ceg.root, edges,
                               {"FAIL": ceg.sink_fail, "OK": ceg.sink_nofail})


def random_staged_tree(rng: random.Random, max_vertices: int = 15,
                       share_stages: bool = True) -> StagedTree:
    """Random staged tree with a few planted stage/position merges."""
    edges: list[tuple[str, str, str]] = []
    cats: dict[str, str] = {}
    theta: dict[str, tuple[float, ...]] = {}
    counter = [0]
    vertices = 1
    shared_vec = dirichlet_like(rng, 2)

    def fresh() -> str:
        counter[0] += 1
        return f"n{counter[0]}"

    def grow(v: str, depth: int):
        nonlocal vertices
        if depth >= 4 or vertices >= max_vertices or rng.random() < 0.3 * depth:
            # leaf coin: fail / not fail / plain
            cats[v] = rng.choice(["fail", "not fail", "sink"])
            return
        k = rng.randint(2, 3)
        if vertices + k > max_vertices:
            cats[v] = rng.choice(["fail", "not fail"])
            return
        if share_stages and rng.random() < 0.3 and k == 2:
            theta[v] = shared_vec
        else:
            theta[v] = dirichlet_like(rng, k)
        labels = rng.sample(["alpha", "beta", "gamma", "delta"], k)
        for label in labels:
            child = fresh()
            edges.append((v, child, label))
            vertices += 1
        for (parent, child, label) in list(edges):
            if parent == v:
                grow(child, depth + 1)

    grow("n0", 0)
    if not edges:  # degenerate draw: force one floret
        theta["n0"] = dirichlet_like(rng, 2)
        for label in ("alpha", "beta"):
            child = fresh()
            edges.append(("n0", child, label))
            cats[child] = "fail" if label == "alpha" else "not fail"
        cats.pop("n0", None)
    tree = EventTree("n0", edges, cats)
    return compute_stages(ProbabilityTree(tree, theta))


def random_remedial_fixture(rng: random.Random, max_components: int = 3,
                            max_causes: int = 3):
    """Layered failure system with declared root-cause positions.

    Returns (staged tree, partition, ceg, root cause positions).  Every
    failure path passes exactly one root cause and root causes never
    share a path, which is what the remedial identification needs.
    """
    edges: list[tuple[str, str, str]] = []
    cats: dict[str, str] = {}
    theta: dict[str, tuple[float, ...]] = {}
    rc_vertices: list[str] = []
    ncomp = rng.randint(2, max_components)
    for ci in range(ncomp):
        comp = f"c{ci}"
        edges.append(("root", comp, f"component-{ci}"))
        nrc = rng.randint(2, max_causes)
        theta[comp] = dirichlet_like(rng, nrc)
        for ri in range(nrc):
            rc = f"{comp}rc{ri}"
            rc_vertices.append(rc)
            edges.append((comp, rc, f"cause-{ci}-{ri}"))
            if rng.random() < 0.5:
                p = rng.uniform(0.1, 0.9)
                theta[rc] = (p, 1.0 - p)
                edges.append((rc, rc + "F", "fail"))
                edges.append((rc, rc + "N", "not fail"))
                cats[rc + "F"] = "fail"
                cats[rc + "N"] = "not fail"
            else:
                theta[rc] = dirichlet_like(rng, 2)
                for si in range(2):
                    s = f"{rc}s{si}"
                    edges.append((rc, s, f"symptom-{si}"))
                    p = rng.uniform(0.1, 0.9)
                    theta[s] = (p, 1.0 - p)
                    edges.append((s, s + "F", "fail"))
                    edges.append((s, s + "N", "not fail"))
                    cats[s + "F"] = "fail"
                    cats[s + "N"] = "not fail"
    theta["root"] = dirichlet_like(rng, ncomp)
    stree = compute_stages(ProbabilityTree(EventTree("root", edges, cats), theta))
    positions = compute_positions(stree)
    ceg = build_ceg(stree, positions)
    rc_positions = sorted({positions.position_of[v] for v in rc_vertices})
    return stree, positions, ceg, rc_positions


def random_two_level_model(rng: random.Random) -> HierarchicalModel:
    """Random CEG bound to a random net through per-edge sub-communities.

    Shapes follow the demo binding: the root floret's values carry
    chain-shaped initiation communities, downstream florets carry
    single-symptom ones.
    """
    n_init = rng.randint(2, 3)
    init_vars = [f"g{k}" for k in range(n_init)]
    chain = ["mid", "grief"]
    symptom_pool = [f"s{k}" for k in range(6)]
    variables = {v: CoreEventVariable(v, v, ("yes", "no"))
                 for v in init_vars + chain + symptom_pool}
    gn_edges = {(g, "mid") for g in init_vars} | {("mid", "grief")}
    gn_edges |= {("grief", s) for s in symptom_pool}
    gn = GlobalNet(variables, gn_edges)

    edges = []
    cats = {}
    theta = {"r": dirichlet_like(rng, n_init)}
    for k in range(n_init):
        mid = f"m{k}"
        edges.append(("r", mid, f"onset-{k}"))
        theta[mid] = (rng.uniform(0.15, 0.85),)
        theta[mid] = (theta[mid][0], 1.0 - theta[mid][0])
        edges.append((mid, f"{mid}F", "fail"))
        edges.append((mid, f"{mid}N", "not fail"))
        cats[f"{mid}F"] = "fail"
        cats[f"{mid}N"] = "not fail"
    stree = compute_stages(ProbabilityTree(EventTree("r", edges, cats), theta))
    positions = compute_positions(stree)
    ceg = build_ceg(stree, positions)

    states = {v: ("yes", "no") for v in variables}

    def chain_emission(vars_):
        parents = {}
        cpts = {}
        prev = None
        for v in vars_:
            if prev is None:
                parents[v] = ()
                cpts[v] = {(): {"yes": rng.uniform(0.2, 0.8)}}
            else:
                parents[v] = (prev,)
                cpts[v] = {("yes",): {"yes": rng.uniform(0.2, 0.9)},
                           ("no",): {"yes": rng.uniform(0.05, 0.5)}}
            for key, row in cpts[v].items():
                row["no"] = 1.0 - row["yes"]
            prev = v
        return EmissionModel(vars_, parents,
                             cpts, {v: states[v] for v in vars_})

    subs = {}
    pos_of = positions.position_of
    symptoms = rng.sample(symptom_pool, 2 * n_init)
    for k in range(n_init):
        onset_edge = (pos_of["r"], f"onset-{k}")
        subs[onset_edge] = SubCommunity(
            chain_emission((init_vars[k], "mid", "grief")), f"onset-{k}")
        mid_pos = pos_of[f"m{k}"]
        for j, label in enumerate(("fail", "not fail")):
            var = symptoms[2 * k + j]
            p = rng.uniform(0.2, 0.8)
            em = EmissionModel((var,), {var: ()},
                               {var: {(): {"yes": p, "no": 1.0 - p}}},
                               {var: states[var]})
            subs[(mid_pos, label)] = SubCommunity(em, f"{label}-{k}")
    return HierarchicalModel(ceg, CommunityMap(gn, subs))
