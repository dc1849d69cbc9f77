"""Versioned JSON bundle tying a whole model together.

One document holds the staged tree, optionally the derived CEG, the
global net with its constraints, the per-edge sub-communities, the
extraction tables, remedy records with their floret priors, and the
missingness configuration.  All probabilities are serialised as decimal
strings so output never depends on platform float formatting; loading
parses them back to binary floats.

Validation reports failures as :class:`SchemaError` with a JSON-pointer
style location.  A floret that does not sum to one is fatal; components
on the closed boundary {0, 1} are collected as warnings because
degenerate-probability models (for example zero missingness) are
legitimate query inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .ceg import CegEdge, FailureCEG, build_ceg
from .errors import SchemaError
from .extraction import (
    AbstractionLexicons,
    CausalPattern,
    ExtractionConfig,
    GrammarRules,
)
from .globalnet import (
    CoreEventVariable,
    CountTable,
    EdgeConstraints,
    GlobalNet,
    VariableMap,
)
from .hierarchy import CommunityMap, EmissionModel, HierarchicalModel, SubCommunity
from .missingness import HeterogeneityModel
from .remedy import FloretPrior, RemedyRecord
from .trees import (
    EventTree,
    ProbabilityTree,
    StagedTree,
    compute_positions,
    compute_stages,
    validate_probability_tree,
)

BUNDLE_VERSION = 1


def _fmt(x: float) -> str:
    return repr(float(x))


def _prob(value: Any, ptr: str) -> float:
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise SchemaError(f"not a decimal probability: {value!r}", ptr)
    if isinstance(value, (int, float)):
        return float(value)
    raise SchemaError(f"probability must be a decimal string, got {type(value).__name__}", ptr)


def _need(obj: Mapping, key: str, kind, ptr: str):
    if key not in obj:
        raise SchemaError(f"missing required key {key!r}", ptr)
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(
            f"{key!r} must be {getattr(kind, '__name__', kind)}", f"{ptr}/{key}")
    return value


@dataclass
class MissingnessConfig:
    unobservable: tuple[str, ...]
    missing_prob: Mapping[str, float]
    collapse_labels: Mapping[str, str] = field(default_factory=dict)
    b_extra_parents: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    heterogeneity: HeterogeneityModel | None = None
    event_depth: int = 1


@dataclass
class ModelBundle:
    staged_tree: StagedTree
    ceg: FailureCEG | None = None
    global_net: GlobalNet | None = None
    constraints: EdgeConstraints | None = None
    non_causal: frozenset = frozenset()
    community_map: CommunityMap | None = None
    extraction: ExtractionConfig | None = None
    variable_map: VariableMap | None = None
    counts: CountTable | None = None
    remedies: dict[str, tuple[RemedyRecord, FloretPrior | None]] = field(
        default_factory=dict)
    missingness: MissingnessConfig | None = None
    warnings: list[str] = field(default_factory=list)

    def require_ceg(self) -> FailureCEG:
        if self.ceg is None:
            self.ceg = build_ceg(self.staged_tree,
                                 compute_positions(self.staged_tree))
        return self.ceg

    def hierarchical_model(self) -> HierarchicalModel:
        if self.community_map is None:
            raise SchemaError("bundle has no community_map section", "/community_map")
        return HierarchicalModel(self.require_ceg(), self.community_map)


# -- staged tree ---------------------------------------------------------------


def _load_staged_tree(obj: Mapping, ptr: str) -> tuple[StagedTree, list[str]]:
    root = _need(obj, "root", str, ptr)
    raw_edges = _need(obj, "edges", list, ptr)
    edges = []
    theta_rows: dict[str, list[float]] = {}
    for i, e in enumerate(raw_edges):
        eptr = f"{ptr}/edges/{i}"
        parent = _need(e, "parent", str, eptr)
        child = _need(e, "child", str, eptr)
        label = _need(e, "label", str, eptr)
        prob = _prob(_need(e, "prob", None, eptr), f"{eptr}/prob")
        edges.append((parent, child, label))
        theta_rows.setdefault(parent, []).append(prob)
    cats = {str(k): str(v)
            for k, v in obj.get("leaf_categories", {}).items()}
    try:
        tree = EventTree(root, edges, cats)
        ptree = ProbabilityTree(tree, theta_rows)
    except ValueError as exc:
        raise SchemaError(str(exc), ptr)
    report = validate_probability_tree(ptree)
    warnings = []
    for v in report.violations:
        if v.kind == "sum":
            raise SchemaError(
                f"floret at {v.vertex}: {v.detail}", f"{ptr}/edges")
        warnings.append(f"floret at {v.vertex}: {v.detail}")
    return compute_stages(ptree), warnings


def _dump_staged_tree(stree: StagedTree) -> dict:
    tree = stree.tree
    edges = []
    for v in tree.internal_vertices():
        for e in tree.children(v):
            edges.append({"parent": e.parent, "child": e.child,
                          "label": e.label,
                          "prob": _fmt(stree.ptree.edge_prob(e))})
    return {"root": tree.root, "edges": edges,
            "leaf_categories": dict(sorted(tree.leaf_category.items()))}


# -- ceg ------------------------------------------------------------------------


def _load_ceg(obj: Mapping, ptr: str) -> FailureCEG:
    root = _need(obj, "root", str, ptr)
    edges = []
    for i, e in enumerate(_need(obj, "edges", list, ptr)):
        eptr = f"{ptr}/edges/{i}"
        edges.append(CegEdge(
            _need(e, "src", str, eptr), _need(e, "dst", str, eptr),
            _need(e, "label", str, eptr),
            _prob(_need(e, "prob", None, eptr), f"{eptr}/prob")))
    stage_of = {str(k): str(v) for k, v in obj.get("stage_of", {}).items()}
    try:
        return FailureCEG(root, edges, stage_of)
    except ValueError as exc:
        raise SchemaError(str(exc), ptr)


def _dump_ceg(ceg: FailureCEG) -> dict:
    return {
        "root": ceg.root,
        "edges": [{"src": e.src, "dst": e.dst, "label": e.label,
                   "prob": _fmt(e.prob)}
                  for e in sorted(ceg.edges, key=lambda e: (e.src, e.label))],
        "stage_of": dict(sorted(ceg.stage_of.items())),
    }


# -- global net -------------------------------------------------------------------


def _load_global_net(obj: Mapping, ptr: str):
    variables = {}
    for i, v in enumerate(_need(obj, "variables", list, ptr)):
        vptr = f"{ptr}/variables/{i}"
        vid = _need(v, "id", str, vptr)
        states = tuple(_need(v, "states", list, vptr))
        try:
            variables[vid] = CoreEventVariable(vid, v.get("name", vid), states)
        except ValueError as exc:
            raise SchemaError(str(exc), vptr)
    edges = {tuple(e) for e in obj.get("edges", [])}
    for e in edges:
        if len(e) != 2 or e[0] not in variables or e[1] not in variables:
            raise SchemaError(f"bad edge {e!r}", f"{ptr}/edges")
    required = frozenset(tuple(e) for e in obj.get("required", []))
    forbidden = frozenset(tuple(e) for e in obj.get("forbidden", []))
    non_causal = frozenset(tuple(e) for e in obj.get("non_causal", []))
    constraints = EdgeConstraints(required, forbidden) if (required or forbidden) \
        else None
    try:
        gn = GlobalNet(variables, edges) if edges or variables else None
    except ValueError as exc:
        raise SchemaError(str(exc), ptr)
    return gn, constraints, non_causal


def _dump_global_net(gn: GlobalNet | None, constraints: EdgeConstraints | None,
                     non_causal) -> dict:
    out: dict[str, Any] = {"variables": [], "edges": []}
    if gn is not None:
        out["variables"] = [
            {"id": v.id, "name": v.name, "states": list(v.states)}
            for v in (gn.variables[k] for k in sorted(gn.variables))]
        out["edges"] = sorted([list(e) for e in gn.edges])
    if constraints is not None:
        out["required"] = sorted([list(e) for e in constraints.required])
        out["forbidden"] = sorted([list(e) for e in constraints.forbidden])
    if non_causal:
        out["non_causal"] = sorted([list(e) for e in non_causal])
    return out


# -- community map ------------------------------------------------------------------


def _load_community_map(obj: Mapping, gn: GlobalNet | None,
                        ptr: str) -> CommunityMap:
    if gn is None:
        raise SchemaError("community_map requires a global_net", ptr)
    subs = {}
    for i, s in enumerate(_need(obj, "subcommunities", list, ptr)):
        sptr = f"{ptr}/subcommunities/{i}"
        edge = _need(s, "edge", list, sptr)
        if len(edge) != 2:
            raise SchemaError("edge must be [position, label]", f"{sptr}/edge")
        variables = [str(v) for v in _need(s, "variables", list, sptr)]
        parents = {v: tuple(ps) for v, ps in s.get("parents", {}).items()}
        cpts: dict[str, dict[tuple, dict[str, float]]] = {}
        for var, rows in _need(s, "cpts", dict, sptr).items():
            table = {}
            for j, row in enumerate(rows):
                rptr = f"{sptr}/cpts/{var}/{j}"
                given = tuple(row.get("given", []))
                probs = {state: _prob(p, f"{rptr}/probs/{state}")
                         for state, p in _need(row, "probs", dict, rptr).items()}
                table[given] = probs
            cpts[var] = table
        states = {}
        for v in variables:
            if v not in gn.variables:
                raise SchemaError(f"unknown variable {v}", f"{sptr}/variables")
            states[v] = gn.variables[v].states
        try:
            emission = EmissionModel(variables, parents, cpts, states)
            sub = SubCommunity(emission, str(s.get("d_event", edge[1])))
        except ValueError as exc:
            raise SchemaError(str(exc), sptr)
        subs[(str(edge[0]), str(edge[1]))] = sub
    try:
        return CommunityMap(gn, subs)
    except Exception as exc:
        raise SchemaError(str(exc), ptr)


def _dump_community_map(cmap: CommunityMap | None) -> dict | None:
    if cmap is None:
        return None
    subs = []
    for (src, label), sub in sorted(cmap.subcommunities.items()):
        em = sub.emission
        cpts = {}
        for var in em.variables:
            rows = []
            for given, probs in sorted(em.cpts[var].items()):
                rows.append({"given": list(given),
                             "probs": {s: _fmt(p)
                                       for s, p in sorted(probs.items())}})
            cpts[var] = rows
        subs.append({
            "edge": [src, label],
            "d_event": sub.d_event,
            "variables": list(em.variables),
            "parents": {v: list(em.parents[v]) for v in em.variables
                        if em.parents[v]},
            "cpts": cpts,
        })
    return {"subcommunities": subs}


# -- extraction tables ----------------------------------------------------------------


def _load_extraction(obj: Mapping, ptr: str) -> ExtractionConfig:
    grammar_obj = _need(obj, "grammar", dict, ptr)
    grammar = GrammarRules(
        tag_lexicon={str(k): str(v)
                     for k, v in grammar_obj.get("tag_lexicon", {}).items()},
        chunk_rules=tuple(
            (tuple(r["tags"]), str(r["phrase_type"]))
            for r in grammar_obj.get("chunk_rules", [])),
    )
    patterns = tuple(
        CausalPattern(tuple(p["connective"]), str(p["slot_order"]),
                      str(p.get("relation", "cause")))
        for p in obj.get("patterns", []))
    for i, p in enumerate(patterns):
        if p.slot_order not in ("cause-first", "effect-first"):
            raise SchemaError(f"bad slot_order {p.slot_order!r}",
                              f"{ptr}/patterns/{i}")
        if not p.connective:
            raise SchemaError("empty connective", f"{ptr}/patterns/{i}")
    lex_obj = obj.get("lexicons", {})
    lexicons = AbstractionLexicons(
        noun_map={str(k): str(v) for k, v in lex_obj.get("noun_map", {}).items()},
        verb_map={str(k): str(v) for k, v in lex_obj.get("verb_map", {}).items()},
        stopwords=frozenset(lex_obj.get("stopwords", [])),
    )
    temporal = {str(k): str(v) for k, v in obj.get("temporal_rules", {}).items()}
    for word, direction in temporal.items():
        if direction not in ("forward", "reverse"):
            raise SchemaError(f"temporal rule {word!r} must be forward or reverse",
                              f"{ptr}/temporal_rules/{word}")
    return ExtractionConfig(grammar, patterns, lexicons, temporal)


def _dump_extraction(cfg: ExtractionConfig | None) -> dict | None:
    if cfg is None:
        return None
    return {
        "grammar": {
            "tag_lexicon": dict(sorted(cfg.grammar.tag_lexicon.items())),
            "chunk_rules": [{"tags": list(tags), "phrase_type": pt}
                            for tags, pt in cfg.grammar.chunk_rules],
        },
        "patterns": [{"connective": list(p.connective),
                      "slot_order": p.slot_order, "relation": p.relation}
                     for p in cfg.patterns],
        "lexicons": {
            "noun_map": dict(sorted(cfg.lexicons.noun_map.items())),
            "verb_map": dict(sorted(cfg.lexicons.verb_map.items())),
            "stopwords": sorted(cfg.lexicons.stopwords),
        },
        "temporal_rules": dict(sorted(cfg.temporal_rules.items())),
    }


def _load_variable_map(obj: Mapping, ptr: str) -> VariableMap:
    assignments = {}
    for key, pair in _need(obj, "assignments", dict, ptr).items():
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError("assignment must be [variable, state]",
                              f"{ptr}/assignments/{key}")
        assignments[str(key)] = (str(pair[0]), str(pair[1]))
    declared = {str(k): tuple(v)
                for k, v in obj.get("declared_states", {}).items()}
    return VariableMap(assignments, declared)


def _dump_variable_map(vm: VariableMap | None) -> dict | None:
    if vm is None:
        return None
    return {
        "assignments": {k: list(v)
                        for k, v in sorted(vm.assignments.items())},
        "declared_states": {k: list(v)
                            for k, v in sorted(vm.declared_states.items())},
    }


def _load_counts(obj: Mapping, gn: GlobalNet | None, ptr: str) -> CountTable:
    variables: dict[str, CoreEventVariable] = {}
    if gn is not None:
        variables.update(gn.variables)
    for i, v in enumerate(obj.get("variables", [])):
        vid = _need(v, "id", str, f"{ptr}/variables/{i}")
        variables[vid] = CoreEventVariable(vid, v.get("name", vid),
                                           tuple(v["states"]))
    rows = []
    for i, row in enumerate(_need(obj, "rows", list, ptr)):
        rptr = f"{ptr}/rows/{i}"
        assignment = {str(k): str(v)
                      for k, v in _need(row, "assignment", dict, rptr).items()}
        rows.append((assignment, float(row.get("n", 1))))
    try:
        return CountTable(variables, rows)
    except Exception as exc:
        raise SchemaError(str(exc), ptr)


def _dump_counts(table: CountTable | None) -> dict | None:
    if table is None:
        return None
    return {
        "variables": [{"id": v.id, "states": list(v.states)}
                      for v in (table.variables[k]
                                for k in sorted(table.variables))],
        "rows": [{"assignment": dict(sorted(a.items())), "n": n}
                 for a, n in table.rows],
    }


# -- remedies ----------------------------------------------------------------------


def _indicator_key(vec) -> tuple[int, ...]:
    return tuple(int(b) for b in vec)


def _load_remedy(obj: Mapping, ptr: str) -> tuple[RemedyRecord, FloretPrior | None]:
    def ind_table(rows, tptr):
        out = {}
        for i, row in enumerate(rows):
            out[_indicator_key(_need(row, "indicator", list, f"{tptr}/{i}"))] = \
                _prob(_need(row, "prob", None, f"{tptr}/{i}"), f"{tptr}/{i}/prob")
        return out

    try:
        rec = RemedyRecord(
            r=_need(obj, "r", str, ptr),
            action_space=tuple(obj.get("action_space", [])),
            q=_prob(_need(obj, "q", None, ptr), f"{ptr}/q"),
            root_causes=tuple(_need(obj, "root_causes", list, ptr)),
            p_ind_perfect=ind_table(_need(obj, "p_ind_perfect", list, ptr),
                                    f"{ptr}/p_ind_perfect"),
            p_ind_action={a: ind_table(rows, f"{ptr}/p_ind_action/{a}")
                          for a, rows in obj.get("p_ind_action", {}).items()},
            p_action_given_path={
                key: {a: _prob(p, f"{ptr}/p_action_given_path/{key}/{a}")
                      for a, p in row.items()}
                for key, row in obj.get("p_action_given_path", {}).items()},
            p_path={key: _prob(p, f"{ptr}/p_path/{key}")
                    for key, p in obj.get("p_path", {}).items()},
            recovery_notes=dict(obj.get("recovery_notes", {})),
        )
    except SchemaError:
        raise
    except Exception as exc:
        raise SchemaError(str(exc), ptr)
    priors = None
    if "priors" in obj:
        pptr = f"{ptr}/priors"
        pobj = obj["priors"]
        try:
            priors = FloretPrior(
                alphas={w: {label: _prob(a, f"{pptr}/alphas/{w}/{label}")
                            for label, a in row.items()}
                        for w, row in _need(pobj, "alphas", dict, pptr).items()},
                omega=_prob(_need(pobj, "omega", None, pptr), f"{pptr}/omega"))
        except SchemaError:
            raise
        except Exception as exc:
            raise SchemaError(str(exc), pptr)
    return rec, priors


def _dump_remedy(rec: RemedyRecord, priors: FloretPrior | None) -> dict:
    def ind_rows(table):
        return [{"indicator": list(vec), "prob": _fmt(p)}
                for vec, p in sorted(table.items())]

    out: dict[str, Any] = {
        "r": rec.r,
        "action_space": list(rec.action_space),
        "q": _fmt(rec.q),
        "root_causes": list(rec.root_causes),
        "p_ind_perfect": ind_rows(rec.p_ind_perfect),
    }
    if rec.p_ind_action:
        out["p_ind_action"] = {a: ind_rows(t)
                               for a, t in sorted(rec.p_ind_action.items())}
    if rec.p_action_given_path:
        out["p_action_given_path"] = {
            key: {a: _fmt(p) for a, p in sorted(row.items())}
            for key, row in sorted(rec.p_action_given_path.items())}
    if rec.p_path:
        out["p_path"] = {key: _fmt(p)
                         for key, p in sorted(rec.p_path.items())}
    if rec.recovery_notes:
        out["recovery_notes"] = dict(sorted(rec.recovery_notes.items()))
    if priors is not None:
        out["priors"] = {
            "alphas": {w: {label: _fmt(a) for label, a in sorted(row.items())}
                       for w, row in sorted(priors.alphas.items())},
            "omega": _fmt(priors.omega),
        }
    return out


# -- missingness -----------------------------------------------------------------------


def _load_missingness(obj: Mapping, ptr: str) -> MissingnessConfig:
    unobs = tuple(_need(obj, "unobservable", list, ptr))
    raw_prob = _need(obj, "missing_prob", None, ptr)
    if isinstance(raw_prob, dict):
        probs = {str(k): _prob(v, f"{ptr}/missing_prob/{k}")
                 for k, v in raw_prob.items()}
    else:
        shared = _prob(raw_prob, f"{ptr}/missing_prob")
        probs = {v: shared for v in unobs}
    for v in unobs:
        if v not in probs:
            raise SchemaError(f"no missing probability for {v}",
                              f"{ptr}/missing_prob")
    het = None
    if "heterogeneity" in obj:
        hptr = f"{ptr}/heterogeneity"
        hobj = obj["heterogeneity"]
        try:
            het = HeterogeneityModel(
                weights={str(k): _prob(v, f"{hptr}/weights/{k}")
                         for k, v in _need(hobj, "weights", dict, hptr).items()},
                offsets={str(c): {str(l): float(o) for l, o in row.items()}
                         for c, row in hobj.get("offsets", {}).items()})
        except SchemaError:
            raise
        except Exception as exc:
            raise SchemaError(str(exc), hptr)
    depth = int(obj.get("event_depth", 1))
    if depth < 1:
        raise SchemaError("event_depth must be at least 1", f"{ptr}/event_depth")
    return MissingnessConfig(
        unobservable=unobs,
        missing_prob=probs,
        collapse_labels={str(k): str(v)
                         for k, v in obj.get("collapse_labels", {}).items()},
        b_extra_parents={str(k): tuple(v)
                         for k, v in obj.get("b_extra_parents", {}).items()},
        heterogeneity=het,
        event_depth=depth,
    )


def _dump_missingness(cfg: MissingnessConfig | None) -> dict | None:
    if cfg is None:
        return None
    out: dict[str, Any] = {
        "unobservable": list(cfg.unobservable),
        "missing_prob": {k: _fmt(v)
                         for k, v in sorted(cfg.missing_prob.items())},
        "event_depth": cfg.event_depth,
    }
    if cfg.collapse_labels:
        out["collapse_labels"] = dict(sorted(cfg.collapse_labels.items()))
    if cfg.b_extra_parents:
        out["b_extra_parents"] = {k: list(v)
                                  for k, v in sorted(cfg.b_extra_parents.items())}
    if cfg.heterogeneity is not None:
        out["heterogeneity"] = {
            "weights": {k: _fmt(v)
                        for k, v in sorted(cfg.heterogeneity.weights.items())},
            "offsets": {c: {l: o for l, o in sorted(row.items())}
                        for c, row in sorted(cfg.heterogeneity.offsets.items())},
        }
    return out


# -- top level ----------------------------------------------------------------------


def bundle_from_dict(doc: Mapping) -> ModelBundle:
    if not isinstance(doc, Mapping):
        raise SchemaError("bundle must be an object", "/")
    version = _need(doc, "version", int, "")
    if version != BUNDLE_VERSION:
        raise SchemaError(f"unsupported version {version}", "/version")
    stree, warnings = _load_staged_tree(
        _need(doc, "staged_tree", dict, ""), "/staged_tree")
    bundle = ModelBundle(staged_tree=stree, warnings=warnings)
    if doc.get("ceg"):
        bundle.ceg = _load_ceg(doc["ceg"], "/ceg")
    if doc.get("global_net"):
        gn, constraints, non_causal = _load_global_net(
            doc["global_net"], "/global_net")
        bundle.global_net = gn
        bundle.constraints = constraints
        bundle.non_causal = non_causal
    if doc.get("community_map"):
        bundle.community_map = _load_community_map(
            doc["community_map"], bundle.global_net, "/community_map")
    tables = doc.get("tables") or {}
    if tables.get("extraction"):
        bundle.extraction = _load_extraction(tables["extraction"],
                                             "/tables/extraction")
    if tables.get("variable_map"):
        bundle.variable_map = _load_variable_map(tables["variable_map"],
                                                 "/tables/variable_map")
    if tables.get("counts"):
        bundle.counts = _load_counts(tables["counts"], bundle.global_net,
                                     "/tables/counts")
    for i, robj in enumerate(doc.get("remedies", [])):
        rec, priors = _load_remedy(robj, f"/remedies/{i}")
        bundle.remedies[rec.r] = (rec, priors)
    if doc.get("missingness"):
        bundle.missingness = _load_missingness(doc["missingness"], "/missingness")
    return bundle


def bundle_to_dict(bundle: ModelBundle) -> dict:
    out: dict[str, Any] = {
        "version": BUNDLE_VERSION,
        "staged_tree": _dump_staged_tree(bundle.staged_tree),
    }
    if bundle.ceg is not None:
        out["ceg"] = _dump_ceg(bundle.ceg)
    if bundle.global_net is not None or bundle.constraints is not None:
        out["global_net"] = _dump_global_net(bundle.global_net,
                                             bundle.constraints,
                                             bundle.non_causal)
    cm = _dump_community_map(bundle.community_map)
    if cm is not None:
        out["community_map"] = cm
    tables = {}
    ext = _dump_extraction(bundle.extraction)
    if ext is not None:
        tables["extraction"] = ext
    vm = _dump_variable_map(bundle.variable_map)
    if vm is not None:
        tables["variable_map"] = vm
    counts = _dump_counts(bundle.counts)
    if counts is not None:
        tables["counts"] = counts
    if tables:
        out["tables"] = tables
    if bundle.remedies:
        out["remedies"] = [_dump_remedy(rec, priors)
                           for rec, priors in bundle.remedies.values()]
    miss = _dump_missingness(bundle.missingness)
    if miss is not None:
        out["missingness"] = miss
    return out


def load_bundle(path: str | Path) -> ModelBundle:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", "")
    return bundle_from_dict(doc)


def save_bundle(bundle: ModelBundle, path: str | Path) -> None:
    Path(path).write_text(canonical_json(bundle_to_dict(bundle)))


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_extraction_tables(doc: Mapping) -> ExtractionConfig:
    """Parse a standalone extraction-table document (same schema as
    the bundle's tables/extraction section)."""
    return _load_extraction(doc, "/extraction")


def dump_extraction_tables(cfg: ExtractionConfig) -> dict:
    out = _dump_extraction(cfg)
    assert out is not None
    return out
