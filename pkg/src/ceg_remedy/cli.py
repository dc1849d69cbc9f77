"""Command line front end.

Subcommands: validate, build-ceg, build-gn, extract, map-path, do-query,
backdoor, mceg-query, oracle-check, export-dot, report, demo-bundle.
Every command reads a model bundle (JSON) unless noted; errors exit
nonzero, as machine-readable JSON under --json.  The environment
variable CEG_REMEDY_CONFIG names a default directory with extraction
tables for `extract`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import fixtures
from .bundle import ModelBundle, load_bundle, save_bundle
from .ceg import (
    enumerate_paths,
    path_probability,
    with_floret_distributions,
)
from .dot import export_dot
from .errors import CegRemedyError, SchemaError
from .extraction import Document, extract_events
from .globalnet import ScoreConfig, learn_global_net, locate_document
from .hierarchy import control_core_event, latent_path
from .missingness import build_mceg, build_mtree, m_backdoor_remedial, \
    m_backdoor_singular
from .oracle import oracle_enumerate, singular_manipulation
from .remedy import (
    backdoor_remedial_effect,
    post_intervention_distribution,
    receiving_vertices,
)


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _fail(args, exc: CegRemedyError) -> int:
    if args.json:
        print(json.dumps(exc.payload(), sort_keys=True), file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return 1


def _target_vertices(bundle: ModelBundle, target: str) -> list[str]:
    ceg = bundle.require_ceg()
    if target in ("failure", "fail-sink"):
        return [ceg.sink_fail]
    if target in ("survival", "nofail-sink"):
        return [ceg.sink_nofail]
    if target.startswith("label:"):
        return list(receiving_vertices(ceg, target[len("label:"):]))
    vertices = list(receiving_vertices(ceg, target))
    if not vertices:
        raise SchemaError(f"no edge carries d-event label {target!r}", "")
    return vertices


def _indicator(arg: str) -> tuple[int, ...]:
    return tuple(int(b) for b in arg.replace(" ", "").split(","))


def _remedy(bundle: ModelBundle, name: str):
    if name not in bundle.remedies:
        raise SchemaError(f"bundle has no remedy {name!r}", "/remedies")
    rec, priors = bundle.remedies[name]
    if priors is None:
        raise SchemaError(f"remedy {name!r} carries no floret priors",
                          "/remedies")
    return rec, priors


def _mceg(bundle: ModelBundle):
    if bundle.missingness is None:
        raise SchemaError("bundle has no missingness section", "/missingness")
    cfg = bundle.missingness
    m_staged, info = build_mtree(bundle.staged_tree, cfg.unobservable,
                                 cfg.missing_prob, cfg.collapse_labels or None)
    return build_mceg(m_staged, info, bundle.staged_tree, cfg.b_extra_parents)


def _z_classes(args) -> list[str] | None:
    return list(args.z_label) if args.z_label else None


def _fact_z_partition(bundle: ModelBundle, labels) -> list[list[str]] | None:
    if not labels:
        return None
    ceg = bundle.require_ceg()
    return [list(receiving_vertices(ceg, z)) for z in labels]


# -- commands -------------------------------------------------------------------


def cmd_validate(args) -> int:
    bundle = load_bundle(args.input)
    ceg = bundle.require_ceg()
    problems = ceg.validate()
    payload = {
        "positions": len(ceg.nonsink_positions()),
        "sinks": 2,
        "warnings": bundle.warnings,
        "problems": problems,
        "sections": sorted(k for k, v in (
            ("global_net", bundle.global_net),
            ("community_map", bundle.community_map),
            ("extraction", bundle.extraction),
            ("remedies", bundle.remedies or None),
            ("missingness", bundle.missingness)) if v is not None),
    }
    lines = [f"bundle ok: {payload['positions']} positions + 2 sinks"]
    for w in bundle.warnings:
        lines.append(f"warning: {w}")
    for p in problems:
        lines.append(f"problem: {p}")
    _emit(args, payload, "\n".join(lines))
    return 1 if problems else 0


def cmd_build_ceg(args) -> int:
    bundle = load_bundle(args.input)
    ceg = bundle.require_ceg()
    if args.output:
        save_bundle(bundle, args.output)
    _emit(args, {"positions": len(ceg.nonsink_positions()), "sinks": 2,
                 "edges": len(ceg.edges),
                 "output": args.output or None},
          f"{len(ceg.nonsink_positions())} positions + 2 sinks, "
          f"{len(ceg.edges)} edges")
    return 0


def cmd_build_gn(args) -> int:
    bundle = load_bundle(args.input)
    if bundle.counts is None:
        raise SchemaError("bundle has no tables/counts section", "/tables/counts")
    if bundle.constraints is None:
        raise SchemaError("bundle has no edge constraints", "/global_net")
    config = ScoreConfig(max_parents=args.max_parents, restarts=args.restarts,
                         seed=args.seed, non_causal=bundle.non_causal)
    gn = learn_global_net(bundle.counts, bundle.constraints, config)
    bundle.global_net = gn
    if args.output:
        save_bundle(bundle, args.output)
    _emit(args, {"edges": sorted(list(e) for e in gn.edges),
                 "output": args.output or None},
          "learned edges:\n" + "\n".join(
              f"  {a} -> {b}" for a, b in sorted(gn.edges)))
    return 0


def cmd_extract(args) -> int:
    config = None
    if args.config:
        path = Path(args.config)
    else:
        env = os.environ.get("CEG_REMEDY_CONFIG")
        if not env:
            raise SchemaError(
                "no --config given and CEG_REMEDY_CONFIG is not set", "")
        path = Path(env)
    if path.is_dir():
        from .bundle import load_extraction_tables
        doc = json.loads((path / "extraction.json").read_text())
        config = load_extraction_tables(doc)
    else:
        config = load_bundle(path).extraction
        if config is None:
            raise SchemaError("config bundle has no extraction tables",
                              "/tables/extraction")
    lines = Path(args.input).read_text().splitlines()
    results = []
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        doc = Document.from_text(line, f"doc-{i}")
        events = extract_events(doc, config)
        results.append({
            "doc_id": doc.doc_id,
            "events": [list(e) for e in events.events],
            "order": sorted(list(p) for p in events.order),
        })
    text = json.dumps(results, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
    _emit(args, {"documents": len(results), "output": args.output or None},
          text if not args.output else f"extracted {len(results)} documents")
    return 0


def cmd_map_path(args) -> int:
    bundle = load_bundle(args.input)
    if bundle.extraction is None or bundle.variable_map is None:
        raise SchemaError("bundle lacks extraction tables", "/tables")
    if bundle.global_net is None:
        raise SchemaError("bundle lacks a global net", "/global_net")
    model = bundle.hierarchical_model()
    doc = Document.from_text(args.text, "cli-doc")
    subgraph = locate_document(doc, bundle.extraction, bundle.global_net,
                               bundle.variable_map)
    path = latent_path(model, subgraph,
                       resolve="max_prob" if args.resolve_max_prob else "strict")
    payload = {"path": path.key(), "positions": list(path.positions()),
               "sink": path.sink(),
               "variables": sorted(subgraph.variables)}
    _emit(args, payload, f"path: {path.key()}  (ends at {path.sink()})")
    return 0


def cmd_do_query(args) -> int:
    bundle = load_bundle(args.input)
    model = bundle.hierarchical_model()
    target = _target_vertices(bundle, args.target)
    value = control_core_event(model, args.variable, args.state, target)
    _emit(args, {"value": value},
          f"pi({args.target} || {args.variable}={args.state}) = {value!r}")
    return 0


def cmd_backdoor(args) -> int:
    from .remedy import action_conditional_setup, random_effect

    bundle = load_bundle(args.input)
    ceg = bundle.require_ceg()
    rec, priors = _remedy(bundle, args.remedy)
    y = _target_vertices(bundle, args.y)
    z = _fact_z_partition(bundle, args.z_label)
    if args.mode == "random":
        pi_by_action, weights = action_conditional_setup(ceg, priors, rec)
        value = random_effect(ceg, rec, pi_by_action, weights, y, z)
        payload = {"value": value, "mode": "random",
                   "action_weights": weights}
    else:
        if not args.indicator:
            raise SchemaError("perfect mode needs --indicator", "")
        indicator = _indicator(args.indicator)
        pi_star = post_intervention_distribution(ceg, priors, rec, indicator)
        value = backdoor_remedial_effect(ceg, rec, pi_star, y, z)
        payload = {"value": value, "mode": "perfect", "pi_star": pi_star,
                   "indicator": list(indicator)}
    _emit(args, payload,
          f"pi({args.y} | do({rec.r})) = {value!r}")
    return 0


def cmd_mceg_query(args) -> int:
    bundle = load_bundle(args.input)
    mceg = _mceg(bundle)
    if args.mode == "singular":
        value = m_backdoor_singular(mceg, args.x, args.y,
                                    list(args.z_label or ()))
    else:
        rec, priors = _remedy(bundle, args.remedy)
        indicator = _indicator(args.indicator)
        pi_star = post_intervention_distribution(bundle.require_ceg(), priors,
                                                 rec, indicator)
        value = m_backdoor_remedial(mceg, list(rec.root_causes), pi_star,
                                    args.y, _z_classes(args))
    _emit(args, {"value": value}, f"recovered effect = {value!r}")
    return 0


def cmd_oracle_check(args) -> int:
    bundle = load_bundle(args.input)
    ceg = bundle.require_ceg()
    checks = []
    if args.query == "control":
        model = bundle.hierarchical_model()
        target = _target_vertices(bundle, args.target)
        value = control_core_event(model, args.variable, args.state, target)
        joint = oracle_enumerate(model, sever=args.variable,
                                 force=(args.variable, args.state),
                                 cap=args.cap)
        truth = joint.mass(lambda r: set(target) & set(r.positions))
        checks.append(("control", value, truth))
    elif args.query == "backdoor":
        rec, priors = _remedy(bundle, args.remedy)
        indicator = _indicator(args.indicator)
        y = _target_vertices(bundle, args.y)
        pi_star = post_intervention_distribution(ceg, priors, rec, indicator)
        value = backdoor_remedial_effect(ceg, rec, pi_star, y,
                                         _fact_z_partition(bundle, args.z_label))
        manipulated = with_floret_distributions(ceg, pi_star)
        truth = sum(path_probability(manipulated, p)
                    for p in enumerate_paths(manipulated, args.cap)
                    if set(y) & set(p.positions()))
        checks.append(("backdoor", value, truth))
    else:  # mceg
        mceg = _mceg(bundle)
        value = m_backdoor_singular(mceg, args.x, args.y,
                                    list(args.z_label or ()))
        fact = mceg.fact_ceg
        w_x = receiving_vertices(fact, args.x)
        forced = singular_manipulation(fact, w_x)
        y_fact = receiving_vertices(fact, args.y) or (
            [fact.sink_fail] if args.y in ("failure", "fail-sink") else [])
        truth = sum(path_probability(forced, p)
                    for p in enumerate_paths(forced, args.cap)
                    if set(y_fact) & set(p.positions()))
        checks.append(("mceg", value, truth))
    worst = max(abs(v - t) for _, v, t in checks)
    payload = {"checks": [{"query": q, "value": v, "oracle": t,
                           "abs_diff": abs(v - t)} for q, v, t in checks],
               "max_abs_diff": worst, "tolerance": args.tolerance}
    text = "\n".join(f"{q}: formula={v!r} oracle={t!r} diff={abs(v - t):.3e}"
                     for q, v, t in checks)
    _emit(args, payload, text + f"\nmax abs diff {worst:.3e}"
          f" ({'within' if worst < args.tolerance else 'EXCEEDS'}"
          f" tolerance {args.tolerance:g})")
    return 0 if worst < args.tolerance else 1


def cmd_export_dot(args) -> int:
    bundle = load_bundle(args.input)
    if args.graph == "ceg":
        text = export_dot(bundle.require_ceg())
    elif args.graph == "tree":
        text = export_dot(bundle.staged_tree)
    elif args.graph == "gn":
        if bundle.global_net is None:
            raise SchemaError("bundle has no global net", "/global_net")
        text = export_dot(bundle.global_net)
    else:
        raise SchemaError(f"unknown graph kind {args.graph!r}", "")
    if args.output:
        Path(args.output).write_text(text)
        _emit(args, {"output": args.output}, f"wrote {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_report(args) -> int:
    from .report import write_report

    bundle = load_bundle(args.input)
    files = write_report(bundle, args.output)
    _emit(args, {"files": [str(f) for f in files]},
          "\n".join(f"wrote {f}" for f in files))
    return 0


def cmd_demo_bundle(args) -> int:
    bundle = fixtures.demo_bundle(args.model)
    save_bundle(bundle, args.output)
    _emit(args, {"output": args.output, "model": args.model},
          f"wrote {args.model} bundle to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ceg-remedy",
        description="Causal intervention calculus for system reliability "
                    "on chain event graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", "-i", required=True,
                           help="model bundle JSON")
        p.add_argument("--output", "-o", help="output file or directory")
        p.add_argument("--json", action="store_true",
                       help="machine-readable output")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--cap", type=int, default=10 ** 6,
                       help="path / outcome enumeration cap")
        p.add_argument("--tolerance", type=float, default=1e-10)
        return p

    common(sub.add_parser("validate", help="schema-check a bundle"))
    common(sub.add_parser("build-ceg", help="derive the CEG from the tree"))

    p = common(sub.add_parser("build-gn", help="constrained structure search"))
    p.add_argument("--max-parents", type=int, default=4)
    p.add_argument("--restarts", type=int, default=2)

    p = common(sub.add_parser("extract", help="logs -> ordered events JSON"),
               needs_input=False)
    p.add_argument("--input", "-i", required=True,
                   help="text file, one log per line")
    p.add_argument("--config", help="bundle JSON or directory with "
                                    "extraction.json (default "
                                    "$CEG_REMEDY_CONFIG)")

    p = common(sub.add_parser("map-path", help="document -> latent path"))
    p.add_argument("--text", required=True, help="log text")
    p.add_argument("--resolve-max-prob", action="store_true",
                   help="break ties by prior path mass instead of failing")

    p = common(sub.add_parser("do-query", help="effect of forcing a core event"))
    p.add_argument("--variable", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--target", default="failure",
                   help="failure | survival | a d-event label")

    p = common(sub.add_parser("backdoor", help="remedial intervention effect"))
    p.add_argument("--remedy", required=True)
    p.add_argument("--mode", choices=["perfect", "random"], default="perfect")
    p.add_argument("--indicator", help="bits, e.g. 1,0 (perfect mode)")
    p.add_argument("--y", default="failure")
    p.add_argument("--z-label", action="append", default=[],
                   help="back-door partition d-event label (repeatable)")

    p = common(sub.add_parser("mceg-query", help="identification on the M-CEG"))
    p.add_argument("--mode", choices=["singular", "remedial"],
                   default="singular")
    p.add_argument("--x", help="controlled d-event label (singular mode)")
    p.add_argument("--y", required=True, help="effect d-event label")
    p.add_argument("--z-label", action="append", default=[])
    p.add_argument("--remedy")
    p.add_argument("--indicator")

    p = common(sub.add_parser("oracle-check",
                              help="formula vs enumeration oracle"))
    p.add_argument("--query", choices=["control", "backdoor", "mceg"],
                   required=True)
    p.add_argument("--variable")
    p.add_argument("--state")
    p.add_argument("--target", default="failure")
    p.add_argument("--remedy")
    p.add_argument("--indicator")
    p.add_argument("--x")
    p.add_argument("--y", default="failure")
    p.add_argument("--z-label", action="append", default=[])

    p = common(sub.add_parser("export-dot", help="graph to DOT text"))
    p.add_argument("--graph", choices=["ceg", "tree", "gn"], default="ceg")

    p = common(sub.add_parser("report",
                              help="figures + CSV tables for a bundle"))
    p.set_defaults(needs_output=True)

    p = common(sub.add_parser("demo-bundle", help="write a packaged example"),
               needs_input=False)
    p.add_argument("--model", choices=["bushing", "warning-lights",
                                       "two-level"], default="bushing")
    return parser


_HANDLERS = {
    "validate": cmd_validate,
    "build-ceg": cmd_build_ceg,
    "build-gn": cmd_build_gn,
    "extract": cmd_extract,
    "map-path": cmd_map_path,
    "do-query": cmd_do_query,
    "backdoor": cmd_backdoor,
    "mceg-query": cmd_mceg_query,
    "oracle-check": cmd_oracle_check,
    "export-dot": cmd_export_dot,
    "report": cmd_report,
    "demo-bundle": cmd_demo_bundle,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("report", "demo-bundle") and not args.output:
        parser.error(f"{args.command} requires --output")
    try:
        return _HANDLERS[args.command](args)
    except CegRemedyError as exc:
        return _fail(args, exc)


if __name__ == "__main__":
    sys.exit(main())
