"""Model reports: rendered figures plus delimited summaries.

The report path writes PNG figures (CEG layout, global net, path mass
spectrum) next to CSV tables (positions with reach probabilities, path
probabilities, optional query results) so a model can be reviewed
without running code.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import networkx as nx

from .bundle import ModelBundle
from .ceg import FailureCEG, enumerate_paths, path_probability, \
    reach_probabilities
from .globalnet import GlobalNet


def _ceg_layout(ceg: FailureCEG) -> dict[str, tuple[float, float]]:
    g = nx.DiGraph()
    g.add_nodes_from(ceg.positions)
    g.add_edges_from({(e.src, e.dst) for e in ceg.edges})
    depth = {w: 0 for w in ceg.positions}
    for w in ceg.topological_order():
        for e in ceg.out_edges(w):
            depth[e.dst] = max(depth[e.dst], depth[w] + 1)
    max_depth = max(depth.values()) or 1
    for s in (ceg.sink_fail, ceg.sink_nofail):
        depth[s] = max_depth
    pos = {}
    by_depth: dict[int, list[str]] = {}
    for w in sorted(ceg.positions):
        by_depth.setdefault(depth[w], []).append(w)
    for d, column in by_depth.items():
        for i, w in enumerate(column):
            pos[w] = (d, -(i - (len(column) - 1) / 2.0))
    return pos


def _draw_ceg(ceg: FailureCEG, path: Path) -> None:
    pos = _ceg_layout(ceg)
    fig, ax = plt.subplots(figsize=(11, 7))
    g = nx.MultiDiGraph()
    g.add_nodes_from(ceg.positions)
    stages = sorted({ceg.stage_of.get(w, "") for w in ceg.positions})
    cmap = plt.get_cmap("tab20")
    colour_of = {s: cmap(i % 20) for i, s in enumerate(stages)}
    node_colours = [colour_of[ceg.stage_of.get(w, "")] for w in g.nodes]
    nx.draw_networkx_nodes(g, pos, node_color=node_colours, node_size=650,
                           edgecolors="black", ax=ax)
    nx.draw_networkx_labels(g, pos, font_size=7, ax=ax)
    for e in ceg.edges:
        rad = 0.15 if sum(1 for f in ceg.edges
                          if (f.src, f.dst) == (e.src, e.dst)) > 1 else 0.0
        ax.annotate(
            "", xy=pos[e.dst], xytext=pos[e.src],
            arrowprops=dict(arrowstyle="-|>", lw=0.8, color="dimgray",
                            connectionstyle=f"arc3,rad={rad}",
                            shrinkA=14, shrinkB=14))
        mid = ((pos[e.src][0] + pos[e.dst][0]) / 2,
               (pos[e.src][1] + pos[e.dst][1]) / 2 + rad)
        ax.text(*mid, f"{e.label}\n{e.prob:.3g}", fontsize=5.5,
                ha="center", va="center", color="tab:blue")
    ax.set_title("failure CEG (colours are stages)")
    ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _draw_gn(gn: GlobalNet, path: Path) -> None:
    g = gn.digraph()
    pos = nx.spring_layout(g, seed=11)
    fig, ax = plt.subplots(figsize=(8, 6))
    nx.draw_networkx(g, pos, ax=ax, node_color="#a6cee3", node_size=1600,
                     font_size=8, edgecolors="black", arrowsize=16)
    ax.set_title("global net over core event variables")
    ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _draw_path_mass(ceg: FailureCEG, path: Path, top: int = 20) -> None:
    paths = enumerate_paths(ceg)
    masses = sorted(((path_probability(ceg, p), p) for p in paths),
                    key=lambda t: -t[0])[:top]
    fig, ax = plt.subplots(figsize=(9, 5))
    labels = [p.key() if len(p.key()) < 48 else p.key()[:45] + "..."
              for _, p in masses]
    colours = ["tab:red" if p.sink() == ceg.sink_fail else "tab:green"
               for _, p in masses]
    ax.barh(range(len(masses)), [m for m, _ in masses], color=colours)
    ax.set_yticks(range(len(masses)), labels, fontsize=6)
    ax.invert_yaxis()
    ax.set_xlabel("path probability")
    ax.set_title(f"top {len(masses)} root-to-sink paths "
                 "(red = failure, green = no failure)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report(bundle: ModelBundle, outdir: str | Path,
                 queries: list[dict] | None = None) -> list[Path]:
    """Render figures and CSV tables for a model bundle; returns the files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ceg = bundle.require_ceg()
    written: list[Path] = []

    fig_path = outdir / "ceg.png"
    _draw_ceg(ceg, fig_path)
    written.append(fig_path)
    if bundle.global_net is not None:
        gn_path = outdir / "global_net.png"
        _draw_gn(bundle.global_net, gn_path)
        written.append(gn_path)
    mass_path = outdir / "path_mass.png"
    _draw_path_mass(ceg, mass_path)
    written.append(mass_path)

    reach = reach_probabilities(ceg)
    pos_path = outdir / "positions.csv"
    with pos_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["position", "stage", "reach_probability",
                         "n_out_edges", "is_sink"])
        for w in sorted(ceg.positions):
            writer.writerow([w, ceg.stage_of.get(w, ""), repr(reach[w]),
                             len(ceg.out_edges(w)), int(ceg.is_sink(w))])
    written.append(pos_path)

    paths_path = outdir / "paths.csv"
    with paths_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "probability", "sink"])
        for p in enumerate_paths(ceg):
            writer.writerow([p.key(), repr(path_probability(ceg, p)), p.sink()])
    written.append(paths_path)

    if queries:
        q_path = outdir / "queries.csv"
        with q_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["query", "value", "oracle", "abs_diff"])
            for q in queries:
                writer.writerow([q["query"], repr(q["value"]),
                                 repr(q.get("oracle", "")),
                                 repr(q.get("abs_diff", ""))])
        written.append(q_path)
    return written
