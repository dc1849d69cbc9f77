"""Reference models: a transformer-bushing failure system, a two-warning-
lights system, a small two-level net/CEG binding, and a matching
extraction configuration.

These are demonstration models for tests, the CLI and the docs.  The
bushing probabilities are chosen so that exactly the intended florets
share stages (every other floret vector is unique up to permutation);
the warning-lights system keeps its two second-light florets on one
stage and its two final fault florets on another.
"""

from __future__ import annotations

import random

from .ceg import FailureCEG, build_ceg
from .extraction import (
    AbstractionLexicons,
    CausalPattern,
    CAUSE_FIRST,
    EFFECT_FIRST,
    ExtractionConfig,
    GrammarRules,
)
from .globalnet import CoreEventVariable, CountTable, EdgeConstraints, GlobalNet, \
    VariableMap
from .hierarchy import CommunityMap, EmissionModel, HierarchicalModel, SubCommunity
from .trees import EventTree, ProbabilityTree, StagedTree, compute_positions, \
    compute_stages

FAIL_LEAF = "fail"
OK_LEAF = "not fail"


def _with_outcome_leaves(edges, cats, florets):
    """Append fail / not-fail leaf edges for the listed outcome florets."""
    for v, p_fail in florets:
        edges.append((v, f"{v}_f", "fail"))
        edges.append((v, f"{v}_n", "not fail"))
        cats[f"{v}_f"] = FAIL_LEAF
        cats[f"{v}_n"] = OK_LEAF
    return edges, cats


def bushing_staged_tree() -> StagedTree:
    """Failure modes of a transformer bushing (asymmetric, 22 positions).

    Outcome florets deliberately share stages across branches: the
    leak-type symptoms, the pollution and glazing checks, repeated
    worn-out inspections, and the cracked / clamp-defect pair.
    """
    edges = [
        ("v0", "v1", "exogenous"), ("v0", "v2", "endogenous"),
        ("v1", "v3", "paint"), ("v1", "v4", "bushing"),
        ("v2", "v5", "bushing"),
        ("v2", "v6", "insulators/paint/primary connections"),
        ("v3", "v7", "abnormal function"), ("v3", "v8", "leak"),
        ("v4", "v9", "pollution/coating"),
        ("v4", "v10", "porcelain glazing defect"),
        ("v4", "v11", "leak"),
        ("v5", "v12", "worn out"), ("v5", "v13", "not worn out"),
        ("v6", "v14", "worn out"), ("v6", "v15", "not worn out"),
        ("v12", "v16", "fan defect"), ("v12", "v17", "water pump defect"),
        ("v13", "v18", "corrosion/coating"), ("v13", "v19", "loose fixing"),
        ("v15", "v20", "corrosion/coating"), ("v15", "v21", "clamp"),
        ("v18", "v22", "leak"),
        ("v18", "v23", "pollution/coating"),
        ("v18", "v24", "porcelain glazing defect"),
        ("v19", "v25", "leak"), ("v19", "v26", "breather defect"),
        ("v19", "v27a", "arcing/corona"), ("v19", "v27b", "ring defect"),
        ("v20", "v28", "cracked"), ("v20", "v29", "high resistance"),
        ("v21", "v30", "clamp defect"),
        ("v21", "v31", "high RFI/Thermovision"),
    ]
    cats: dict[str, str] = {}
    outcome = [
        ("v7", 0.2), ("v8", 0.45), ("v9", 0.3), ("v10", 0.62), ("v11", 0.45),
        ("v14", 0.5), ("v16", 0.5), ("v17", 0.5),
        ("v22", 0.45), ("v23", 0.3), ("v24", 0.62), ("v25", 0.45),
        ("v26", 0.15), ("v27a", 0.12), ("v27b", 0.12),
        ("v28", 0.25), ("v29", 0.35), ("v30", 0.25), ("v31", 0.35),
    ]
    edges, cats = _with_outcome_leaves(edges, cats, outcome)
    theta = {
        "v0": (0.58, 0.42), "v1": (0.4, 0.6), "v2": (0.32, 0.68),
        "v3": (0.26, 0.74), "v4": (0.3, 0.2, 0.5),
        "v5": (0.18, 0.82), "v6": (0.22, 0.78),
        "v12": (0.53, 0.47), "v13": (0.66, 0.34), "v15": (0.72, 0.28),
        "v18": (0.5, 0.3, 0.2), "v19": (0.4, 0.3, 0.2, 0.1),
        "v20": (0.48, 0.52), "v21": (0.41, 0.59),
    }
    for v, p in outcome:
        theta[v] = (p, 1.0 - p)
    tree = EventTree("v0", edges, cats)
    return compute_stages(ProbabilityTree(tree, theta))


def bushing_ceg() -> FailureCEG:
    stree = bushing_staged_tree()
    return build_ceg(stree, compute_positions(stree))


def warning_lights_staged_tree(p_first_off: float = 0.55,
                               p_second_off: float = 0.4,
                               p_fault_on: float = 0.3,
                               p_fault_off: float = 0.25) -> StagedTree:
    """Two warning lights, then a possible fault.

    With the first light off and the second off too the machine is
    normal; otherwise a final fault check decides the outcome.  The two
    second-light florets share a stage, as do the two fault florets
    after "2 on".
    """
    edges = [
        ("v0", "v1", "1 off"), ("v0", "v2", "1 on"),
        ("v1", "ok", "2 off"), ("v1", "v3", "2 on"),
        ("v2", "v4", "2 off"), ("v2", "v5", "2 on"),
    ]
    cats = {"ok": OK_LEAF}
    outcome = [("v3", p_fault_on), ("v4", p_fault_off), ("v5", p_fault_on)]
    for v, p in outcome:
        edges.append((v, f"{v}_n", "no fault"))
        edges.append((v, f"{v}_f", "fault"))
        cats[f"{v}_n"] = OK_LEAF
        cats[f"{v}_f"] = FAIL_LEAF
    theta = {
        "v0": (p_first_off, 1.0 - p_first_off),
        "v1": (p_second_off, 1.0 - p_second_off),
        "v2": (p_second_off, 1.0 - p_second_off),
    }
    for v, p in outcome:
        theta[v] = (1.0 - p, p)
    tree = EventTree("v0", edges, cats)
    return compute_stages(ProbabilityTree(tree, theta))


# -- two-level binding ----------------------------------------------------------


def _binary(var: str) -> CoreEventVariable:
    return CoreEventVariable(var, var, ("yes", "no"))


def demo_global_net() -> GlobalNet:
    variables = {v: _binary(v) for v in
                 ("corrosion", "humidity", "seal_decay", "oil_leak",
                  "overheat", "noise", "tripping")}
    edges = {
        ("corrosion", "seal_decay"), ("humidity", "seal_decay"),
        ("seal_decay", "oil_leak"),
        ("oil_leak", "overheat"), ("oil_leak", "noise"),
        ("oil_leak", "tripping"),
    }
    return GlobalNet(variables, edges)


def _chain_emission(variables, cpts):
    states = {v: ("yes", "no") for v in variables}
    parents = {}
    prev = None
    for v in variables:
        parents[v] = (prev,) if prev is not None else ()
        prev = v
    return EmissionModel(variables, parents, cpts, states)


def _root_cpt(p):
    return {(): {"yes": p, "no": 1.0 - p}}


def _cond_cpt(p_yes, p_no):
    return {("yes",): {"yes": p_yes, "no": 1.0 - p_yes},
            ("no",): {"yes": p_no, "no": 1.0 - p_no}}


def two_level_staged_tree() -> StagedTree:
    edges = [
        ("r", "a", "deterioration"), ("r", "b", "contamination"),
        ("a", "a_f", "fail"), ("a", "a_n", "not fail"),
        ("b", "b_f", "fail"), ("b", "b_n", "not fail"),
    ]
    cats = {"a_f": FAIL_LEAF, "a_n": OK_LEAF, "b_f": FAIL_LEAF, "b_n": OK_LEAF}
    theta = {"r": (0.65, 0.35), "a": (0.3, 0.7), "b": (0.25, 0.75)}
    return compute_stages(ProbabilityTree(EventTree("r", edges, cats), theta))


def two_level_model() -> HierarchicalModel:
    """A CEG with two intermediate positions bound to the demo net.

    The root floret's two values select overlapping failure-initiation
    sub-communities (corrosion-driven vs humidity-driven decay into an
    oil leak); the downstream florets carry single-symptom
    sub-communities, with the shared "survive" symptom on both
    not-fail edges.
    """
    stree = two_level_staged_tree()
    ceg = build_ceg(stree, compute_positions(stree))
    gn = demo_global_net()
    states = {v: ("yes", "no") for v in gn.variables}

    deter = _chain_emission(
        ("corrosion", "seal_decay", "oil_leak"),
        {"corrosion": _root_cpt(0.6),
         "seal_decay": _cond_cpt(0.7, 0.2),
         "oil_leak": _cond_cpt(0.5, 0.1)})
    contam = _chain_emission(
        ("humidity", "seal_decay", "oil_leak"),
        {"humidity": _root_cpt(0.3),
         "seal_decay": _cond_cpt(0.8, 0.4),
         "oil_leak": _cond_cpt(0.45, 0.15)})

    def single(var, p):
        return EmissionModel((var,), {var: ()}, {var: _root_cpt(p)},
                             {var: states[var]})

    root = ceg.root
    w_a = ceg.edge(root, "deterioration").dst
    w_b = ceg.edge(root, "contamination").dst
    subs = {
        (root, "deterioration"): SubCommunity(deter, "decay-onset"),
        (root, "contamination"): SubCommunity(contam, "ingress-onset"),
        (w_a, "fail"): SubCommunity(single("overheat", 0.55), "overheat-fail"),
        (w_a, "not fail"): SubCommunity(single("noise", 0.5), "survive"),
        (w_b, "not fail"): SubCommunity(single("noise", 0.5), "survive"),
        (w_b, "fail"): SubCommunity(single("tripping", 0.35), "trip-fail"),
    }
    return HierarchicalModel(ceg, CommunityMap(gn, subs))


# -- constrained-search fixture ---------------------------------------------------


FIG_NET_EDGES = frozenset({
    ("environment", "loose_fix"), ("corrosion", "loose_fix"),
    ("corrosion", "oil_leak"), ("loose_fix", "oil_leak"),
    ("loose_fix", "glazing"), ("loose_fix", "connection"),
    ("connection", "maintenance"), ("environment", "phase"),
    ("phase", "maintenance"),
})

FIG_NET_REQUIRED = frozenset({
    ("corrosion", "loose_fix"), ("corrosion", "oil_leak"),
    ("loose_fix", "oil_leak"), ("loose_fix", "glazing"),
    ("loose_fix", "connection"), ("connection", "maintenance"),
    ("phase", "maintenance"),
})

FIG_NET_NON_CAUSAL = frozenset({("environment", "phase")})


def constrained_search_variables() -> dict[str, CoreEventVariable]:
    out = {v: _binary(v) for v in
           ("environment", "corrosion", "loose_fix", "oil_leak",
            "glazing", "connection", "maintenance")}
    out["environment"] = CoreEventVariable("environment", "environment",
                                           ("harsh", "mild"))
    out["phase"] = CoreEventVariable("phase", "phase", ("red", "yellow", "blue"))
    return out


def sample_constrained_search_counts(n: int = 4000, seed: int = 7) -> CountTable:
    """Forward-sample the bushing-subsystem net with strong dependencies."""
    rng = random.Random(seed)
    variables = constrained_search_variables()

    def flip(p):
        return "yes" if rng.random() < p else "no"

    rows = []
    for _ in range(n):
        env = "harsh" if rng.random() < 0.5 else "mild"
        corr = flip(0.45)
        p_loose = {("harsh", "yes"): 0.9, ("harsh", "no"): 0.6,
                   ("mild", "yes"): 0.5, ("mild", "no"): 0.05}[(env, corr)]
        loose = flip(p_loose)
        p_leak = {("yes", "yes"): 0.95, ("yes", "no"): 0.6,
                  ("no", "yes"): 0.55, ("no", "no"): 0.05}[(corr, loose)]
        leak = flip(p_leak)
        glaz = flip(0.7 if loose == "yes" else 0.1)
        conn = flip(0.8 if loose == "yes" else 0.15)
        r = rng.random()
        if env == "harsh":
            phase = "red" if r < 0.7 else ("yellow" if r < 0.9 else "blue")
        else:
            phase = "red" if r < 0.1 else ("yellow" if r < 0.4 else "blue")
        p_maint = {("yes", "red"): 0.95, ("yes", "yellow"): 0.7,
                   ("yes", "blue"): 0.5, ("no", "red"): 0.5,
                   ("no", "yellow"): 0.2, ("no", "blue"): 0.05}[(conn, phase)]
        maint = flip(p_maint)
        rows.append(({"environment": env, "corrosion": corr,
                      "loose_fix": loose, "oil_leak": leak, "glazing": glaz,
                      "connection": conn, "phase": phase,
                      "maintenance": maint}, 1.0))
    return CountTable(variables, rows)


def constrained_search_constraints() -> EdgeConstraints:
    forbidden = frozenset((b, a) for (a, b) in FIG_NET_REQUIRED)
    return EdgeConstraints(FIG_NET_REQUIRED, forbidden)


# -- extraction configuration -----------------------------------------------------


MOTIVATING_LOG = ("the seal deterioration caused oil leak in the "
                  "conservator - topping up oil")


def reliability_extraction_config() -> ExtractionConfig:
    grammar = GrammarRules(
        tag_lexicon={
            "the": "DET", "a": "DET", "an": "DET",
            "seal": "NOUN", "deterioration": "NOUN", "oil": "NOUN",
            "leak": "NOUN", "conservator": "NOUN", "corrosion": "NOUN",
            "fixing": "NOUN", "breather": "NOUN", "pump": "NOUN",
            "loose": "ADJ", "worn": "ADJ",
            "caused": "VERB", "topping": "VERB", "tripped": "VERB",
            "leaked": "VERB", "replaced": "VERB",
            "in": "ADP", "of": "ADP", "on": "ADP", "up": "PRT",
        },
        chunk_rules=(
            (("NOUN", "NOUN"), "NP"),
            (("ADJ", "NOUN"), "NP"),
        ),
    )
    patterns = (
        CausalPattern(("caused",), CAUSE_FIRST, "cause"),
        CausalPattern(("led", "to"), CAUSE_FIRST, "cause"),
        CausalPattern(("due", "to"), EFFECT_FIRST, "cause"),
        CausalPattern(("because", "of"), EFFECT_FIRST, "cause"),
    )
    lexicons = AbstractionLexicons(
        noun_map={"deterioration": "decay", "rust": "corrosion"},
        verb_map={"topping": "top", "tripped": "trip", "leaked": "leak",
                  "replaced": "replace"},
        stopwords=frozenset({"the", "a", "an", "in", "of", "on", "up",
                             "conservator"}),
    )
    temporal = {"after": "reverse", "before": "forward", "then": "forward"}
    return ExtractionConfig(grammar, patterns, lexicons, temporal)


def reliability_variable_map() -> VariableMap:
    return VariableMap(
        assignments={
            "seal decay": ("seal_decay", "yes"),
            "oil leak": ("oil_leak", "yes"),
            "corrosion": ("corrosion", "yes"),
            "loose fixing": ("loose_fix", "yes"),
            "top": ("maintenance", "topup"),
            "replace": ("maintenance", "replace"),
            "trip": ("tripping", "yes"),
        },
        declared_states={"maintenance": ("topup", "replace", "none")},
    )


def demo_bundle(name: str):
    """Packaged example bundles for the CLI and the docs."""
    from .bundle import ModelBundle, MissingnessConfig
    from .remedy import FloretPrior, RemedyRecord
    from .trees import compute_positions as _positions

    if name == "bushing":
        stree = bushing_staged_tree()
        bundle = ModelBundle(staged_tree=stree)
        bundle.require_ceg()
        pos = _positions(stree).position_of
        cracked = pos["v28"]
        outcome_positions = tuple(sorted({
            pos[v] for v in ("v7", "v8", "v9", "v10", "v11", "v14", "v16",
                             "v17", "v22", "v23", "v24", "v25", "v26",
                             "v27a", "v27b", "v28", "v29", "v30", "v31")}))
        bits = tuple(1 if w == cracked else 0 for w in outcome_positions)
        rec = RemedyRecord(
            r="crack repair", action_space=("tighten", "replace"), q=1.0,
            root_causes=outcome_positions, p_ind_perfect={bits: 1.0},
            recovery_notes={"recovery": "cracked part renewed to AGAN"})
        priors = FloretPrior(
            alphas={pos["v20"]: {"cracked": 2.0, "high resistance": 3.0},
                    pos["v21"]: {"clamp defect": 2.0,
                                 "high RFI/Thermovision": 3.0}},
            omega=5.0)
        bundle.remedies[rec.r] = (rec, priors)
        bundle.extraction = reliability_extraction_config()
        bundle.variable_map = reliability_variable_map()
        return bundle
    if name == "warning-lights":
        stree = warning_lights_staged_tree()
        bundle = ModelBundle(staged_tree=stree)
        bundle.require_ceg()
        pos = _positions(stree).position_of
        roots = (pos["v3"], pos["v4"])
        rec = RemedyRecord(
            r="light repair", action_space=("inspect", "overhaul"), q=0.6,
            root_causes=roots, p_ind_perfect={(1, 1): 1.0},
            p_ind_action={
                "inspect": {(1, 0): 0.7, (0, 0): 0.3},
                "overhaul": {(1, 1): 0.8, (0, 1): 0.2},
            },
            p_action_given_path={
                "1 off / 2 on / fault": {"inspect": 0.5, "overhaul": 0.5},
                "1 on / 2 off / fault": {"inspect": 0.8, "overhaul": 0.2},
                "1 on / 2 on / fault": {"inspect": 0.3, "overhaul": 0.7},
            },
            p_path={"1 off / 2 on / fault": 0.4,
                    "1 on / 2 off / fault": 0.3,
                    "1 on / 2 on / fault": 0.3})
        priors = FloretPrior(
            alphas={pos["v1"]: {"2 off": 4.0, "2 on": 6.0},
                    pos["v2"]: {"2 off": 4.0, "2 on": 6.0}},
            omega=5.0)
        bundle.remedies[rec.r] = (rec, priors)
        from .missingness import HeterogeneityModel

        bundle.missingness = MissingnessConfig(
            unobservable=("v1", "v2"),
            missing_prob={"v1": 0.1, "v2": 0.1},
            collapse_labels={FAIL_LEAF: "fault", OK_LEAF: "no fault"},
            heterogeneity=HeterogeneityModel(
                {"trained": 0.7, "new": 0.3},
                {"new": {"2 off": 1.5}}),
            event_depth=1)
        return bundle
    if name == "two-level":
        model = two_level_model()
        bundle = ModelBundle(staged_tree=two_level_staged_tree())
        bundle.ceg = model.ceg
        bundle.global_net = model.cmap.gn
        bundle.community_map = model.cmap
        bundle.extraction = reliability_extraction_config()
        bundle.variable_map = reliability_variable_map()
        return bundle
    raise ValueError(f"unknown demo model {name!r}")
