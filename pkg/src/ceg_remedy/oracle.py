"""Exhaustive ground-truth enumeration for every identification formula.

The oracle builds the full joint table over (root-to-sink path, core
event assignment) outcomes by multiplying path probabilities with the
emission factors active along each path.  Manipulations are applied
before summation: floret replacement (stochastic manipulation), severed
incoming edges on a core variable (surface-level do), forcing a core
event (truncate and renormalise), and complete-case filtering.  Closed
formulas elsewhere in the package are tested against these tables and
never share code with them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .ceg import FailureCEG, enumerate_paths, path_probability, \
    with_floret_distributions
from .errors import PathExplosion, ZeroConditioningSet
from .hierarchy import HierarchicalModel

DEFAULT_CAP = 10 ** 6


@dataclass(frozen=True)
class OracleRow:
    path_key: str
    positions: tuple[str, ...]
    assignment: tuple[tuple[str, str], ...]
    prob: float

    def state(self, var: str) -> str | None:
        for v, s in self.assignment:
            if v == var:
                return s
        return None


class OracleJoint:
    def __init__(self, rows: Sequence[OracleRow]):
        self.rows = list(rows)

    def total_mass(self) -> float:
        return sum(r.prob for r in self.rows)

    def mass(self, predicate: Callable[[OracleRow], bool]) -> float:
        return sum(r.prob for r in self.rows if predicate(r))

    def conditional(self, target: Callable[[OracleRow], bool],
                    given: Callable[[OracleRow], bool]) -> float:
        denom = self.mass(given)
        if denom <= 0.0:
            raise ZeroConditioningSet("oracle conditioning event has zero mass")
        return self.mass(lambda r: target(r) and given(r)) / denom

    def renormalized(self, predicate: Callable[[OracleRow], bool]) -> "OracleJoint":
        kept = [r for r in self.rows if predicate(r)]
        total = sum(r.prob for r in kept)
        if total <= 0.0:
            raise ZeroConditioningSet("no mass left after truncation")
        return OracleJoint([
            OracleRow(r.path_key, r.positions, r.assignment, r.prob / total)
            for r in kept])


def oracle_enumerate(model: HierarchicalModel,
                     pi_star: Mapping[str, Mapping[str, float]] | None = None,
                     sever: str | None = None,
                     force: tuple[str, str] | None = None,
                     complete_case_avoiding: Iterable[str] = (),
                     cap: int = DEFAULT_CAP) -> OracleJoint:
    """Exact joint over paths and emitted core events, manipulated first.

    ``pi_star`` replaces floret distributions; ``sever`` cuts the
    incoming sub-community edges of one variable everywhere; ``force``
    truncates to outcomes where a variable took a state and
    renormalises; ``complete_case_avoiding`` drops paths through the
    given vertices and renormalises.
    """
    ceg = model.ceg
    if pi_star:
        ceg = with_floret_distributions(ceg, pi_star)
    rows: list[OracleRow] = []
    for path in enumerate_paths(ceg, cap):
        base = path_probability(ceg, path)
        emissions = []
        for e in path.edges:
            sub = model.cmap.subcommunities.get(e.key())
            if sub is None:
                continue
            em = sub.emission
            if sever is not None:
                em = em.severed(sever)
            emissions.append(em)
        combos = [list(em.assignments()) for em in emissions]
        n_rows = 1
        for c in combos:
            n_rows *= len(c)
        if len(rows) + n_rows > cap:
            raise PathExplosion(f"joint outcome count exceeds cap {cap}")
        for choice in itertools.product(*combos):
            prob = base
            merged: dict[str, str] = {}
            for em, assignment in zip(emissions, choice):
                prob *= em.joint(assignment)
                merged.update(assignment)
            rows.append(OracleRow(path.key(), path.positions(),
                                  tuple(sorted(merged.items())), prob))
    joint = OracleJoint(rows)
    banned = set(complete_case_avoiding)
    if banned:
        joint = joint.renormalized(lambda r: not banned & set(r.positions))
    if force is not None:
        var, state = force
        joint = joint.renormalized(lambda r: r.state(var) == state)
    return joint


def singular_manipulation(ceg: FailureCEG,
                          x_vertices: Sequence[str]) -> FailureCEG:
    """Force every floret with a transition into w(x) to take it.

    Mass moves proportionally onto the x-edges of each such floret;
    florets without one are untouched.  Test-side ground truth for the
    singular back-door formula.
    """
    xs = set(x_vertices)
    replacement: dict[str, dict[str, float]] = {}
    for w in ceg.nonsink_positions():
        out = ceg.out_edges(w)
        hit = [e for e in out if e.dst in xs]
        if not hit:
            continue
        total = sum(e.prob for e in hit)
        dist = {}
        for e in out:
            if e.dst in xs:
                dist[e.label] = e.prob / total if total > 0 else 1.0 / len(hit)
            else:
                dist[e.label] = 0.0
        replacement[w] = dist
    return with_floret_distributions(ceg, replacement)
