"""Deterministic DOT export for the package's graph types.

Vertices are emitted in sorted order and stage classes are encoded as
fill colours, so the same model always produces byte-identical output.
"""

from __future__ import annotations

from .ceg import FailureCEG
from .globalnet import GlobalNet
from .hierarchy import Flattening
from .trees import StagedTree

_PALETTE = (
    "#a6cee3", "#b2df8a", "#fb9a99", "#fdbf6f", "#cab2d6",
    "#ffff99", "#1f78b4", "#33a02c", "#e31a1c", "#ff7f00",
    "#6a3d9a", "#b15928", "#8dd3c7", "#bebada", "#fccde5",
)


def _quote(s: str) -> str:
    return '"' + s.replace('"', r'\"') + '"'


def _stage_colours(stages: dict[str, str]) -> dict[str, str]:
    order = sorted(set(stages.values()))
    return {s: _PALETTE[i % len(_PALETTE)] for i, s in enumerate(order)}


def _ceg_dot(ceg: FailureCEG) -> str:
    colours = _stage_colours(ceg.stage_of) if ceg.stage_of else {}
    lines = ["digraph ceg {", "  rankdir=LR;",
             "  node [style=filled, fillcolor=white];"]
    for w in sorted(ceg.positions):
        attrs = []
        stage = ceg.stage_of.get(w)
        if stage is not None:
            attrs.append(f"stage={_quote(stage)}")
            if stage in colours and not ceg.is_sink(w):
                attrs.append(f'fillcolor="{colours[stage]}"')
        if ceg.is_sink(w):
            attrs.append("shape=doublecircle")
        lines.append(f"  {_quote(w)} [{', '.join(attrs)}];"
                     if attrs else f"  {_quote(w)};")
    for e in sorted(ceg.edges, key=lambda e: (e.src, e.label, e.dst)):
        lines.append(f"  {_quote(e.src)} -> {_quote(e.dst)} "
                     f"[label={_quote(f'{e.label} ({e.prob:g})')}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _gn_dot(gn: GlobalNet) -> str:
    lines = ["digraph global_net {", "  node [shape=ellipse];"]
    for v in sorted(gn.variables):
        var = gn.variables[v]
        lines.append(
            f"  {_quote(v)} [label={_quote(v + chr(10) + '|'.join(var.states))}];")
    for a, b in sorted(gn.edges):
        lines.append(f"  {_quote(a)} -> {_quote(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _flattening_dot(flat: Flattening) -> str:
    shapes = {"core": "ellipse", "floret": "box", "incident": "diamond",
              "holding": "hexagon", "missing": "octagon", "event": "cds"}
    lines = ["digraph flattening {"]
    for n in sorted(flat.graph.nodes):
        shape = shapes.get(flat.kind.get(n, ""), "ellipse")
        lines.append(f"  {_quote(n)} [shape={shape}];")
    for a, b in sorted(flat.graph.edges):
        lines.append(f"  {_quote(a)} -> {_quote(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _tree_dot(stree: StagedTree) -> str:
    tree = stree.tree
    colours = _stage_colours({v: s for v, s in stree.stage_of.items()
                              if not tree.is_leaf(v)})
    lines = ["digraph staged_tree {", "  rankdir=LR;",
             "  node [style=filled, fillcolor=white];"]
    for v in sorted(tree.vertices):
        if tree.is_leaf(v):
            lines.append(
                f"  {_quote(v)} [shape=point, "
                f"stage={_quote('leaf-' + tree.leaf_category[v])}];")
        else:
            stage = stree.stage_of[v]
            lines.append(f"  {_quote(v)} [stage={_quote(stage)}, "
                         f'fillcolor="{colours[stage]}"];')
    for v in sorted(tree.internal_vertices()):
        for e in tree.children(v):
            p = stree.ptree.edge_prob(e)
            lines.append(f"  {_quote(e.parent)} -> {_quote(e.child)} "
                         f"[label={_quote(f'{e.label} ({p:g})')}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dot(graph) -> str:
    """Render a CEG, global net, flattening or staged tree to DOT text."""
    if isinstance(graph, FailureCEG):
        return _ceg_dot(graph)
    if isinstance(graph, GlobalNet):
        return _gn_dot(graph)
    if isinstance(graph, Flattening):
        return _flattening_dot(graph)
    if isinstance(graph, StagedTree):
        return _tree_dot(graph)
    raise TypeError(f"cannot export {type(graph).__name__} to DOT")
