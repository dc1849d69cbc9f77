"""Remedial interventions on a failure CEG.

A remedy is an observed maintenance state plus a model of what it may
have fixed: a two-component mixture over intervention indicators (the
repair either restored the part to as-good-as-new, or a latent follow-up
action decides which root causes were actually corrected).  Indicators
drive a linear update of the Dirichlet-role floret priors, whose
posterior means define the post-intervention transition distribution;
the back-door formulas then identify the effect of that stochastic
manipulation from idle-system path probabilities.

Recovery paths are metadata on the record: the manipulation acts on
probabilities only, never on topology.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .ceg import (
    CegPath,
    FailureCEG,
    enumerate_paths,
    path_probability,
    reach_probabilities,
    recompute_stages,
    with_floret_distributions,
)
from .errors import (
    InvalidPartition,
    MisalignedIndicator,
    MissingTable,
    WeightsNotNormalized,
    ZeroConditioningSet,
)

PERFECT = "perfect"
IMPERFECT = "imperfect"
UNCERTAIN = "uncertain"

ROW_TOL = 1e-9


def classify_remedy(evidence: Mapping[str, bool]) -> str:
    """Perfect when the root cause was identified and corrected; imperfect
    when only secondary faults were touched but a recovery was recorded;
    uncertain when the remedial action could not be extracted at all."""
    identified = bool(evidence.get("root_cause_identified"))
    corrected = bool(evidence.get("root_cause_corrected"))
    recovered = bool(evidence.get("recovery_observed"))
    if identified and corrected:
        return PERFECT
    if recovered:
        return IMPERFECT
    return UNCERTAIN


def _check_dist(dist: Mapping, what: str):
    total = sum(dist.values())
    if abs(total - 1.0) > ROW_TOL:
        raise MissingTable(f"{what} sums to {total!r}, expected 1")
    for v in dist.values():
        if v < 0:
            raise MissingTable(f"{what} has a negative entry")


@dataclass(frozen=True)
class RemedyRecord:
    """Observed maintenance state with its intervention-indicator model.

    Indicator vectors are 0/1 tuples aligned to ``root_causes``; path
    keys refer to :meth:`CegPath.key` strings.
    """

    r: str
    action_space: tuple[str, ...]
    q: float
    root_causes: tuple[str, ...]
    p_ind_perfect: Mapping[tuple[int, ...], float]
    p_ind_action: Mapping[str, Mapping[tuple[int, ...], float]] = field(
        default_factory=dict)
    p_action_given_path: Mapping[str, Mapping[str, float]] = field(
        default_factory=dict)
    p_path: Mapping[str, float] = field(default_factory=dict)
    recovery_notes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.q <= 1.0):
            raise MissingTable(f"q={self.q} outside [0, 1]")
        n = len(self.root_causes)
        for vec in self.p_ind_perfect:
            if len(vec) != n:
                raise MisalignedIndicator(
                    f"indicator {vec} does not align with {n} root causes")
        _check_dist(self.p_ind_perfect, "p(I | r, delta=1)")
        for a, dist in self.p_ind_action.items():
            _check_dist(dist, f"p(I | r, a={a})")
        for key, dist in self.p_action_given_path.items():
            _check_dist(dist, f"p(a | path={key!r}, r, delta=0)")
        if self.p_path:
            _check_dist(self.p_path, "p(path | r, delta=0)")


def indicator_distribution(rec: RemedyRecord) -> dict[tuple[int, ...], float]:
    """Mixture over intervention indicators for an observed maintenance.

    The perfect branch is the stated table; the random branch marginalises
    the latent follow-up action against the path distribution and
    renormalises.
    """
    if rec.q == 1.0:
        return dict(rec.p_ind_perfect)
    if not rec.p_ind_action or not rec.p_path or not rec.p_action_given_path:
        raise MissingTable(
            f"remedy {rec.r!r}: the delta=0 branch needs p(I|r,a), "
            "p(a|path,r) and p(path|r)")
    raw: dict[tuple[int, ...], float] = {}
    for path_key, p_lambda in rec.p_path.items():
        actions = rec.p_action_given_path.get(path_key)
        if actions is None:
            raise MissingTable(f"no action table for path {path_key!r}")
        for a, p_a in actions.items():
            table = rec.p_ind_action.get(a)
            if table is None:
                raise MissingTable(f"no indicator table for action {a!r}")
            for vec, p_i in table.items():
                raw[vec] = raw.get(vec, 0.0) + p_i * p_a * p_lambda
    total = sum(raw.values())
    if total <= 0.0:
        raise MissingTable("delta=0 branch carries no probability mass")
    random_branch = {vec: p / total for vec, p in raw.items()}
    out: dict[tuple[int, ...], float] = {}
    for vec, p in rec.p_ind_perfect.items():
        out[vec] = out.get(vec, 0.0) + rec.q * p
    for vec, p in random_branch.items():
        out[vec] = out.get(vec, 0.0) + (1.0 - rec.q) * p
    return out


# -- floret priors and the hyperparameter update -------------------------------


@dataclass(frozen=True)
class FloretPrior:
    """Dirichlet-role hyperparameters per floret, plus the update weight."""

    alphas: Mapping[str, Mapping[str, float]]  # position -> edge label -> alpha
    omega: float

    def __post_init__(self):
        if self.omega <= 0:
            raise MisalignedIndicator(f"omega={self.omega} must be positive")
        for w, row in self.alphas.items():
            for label, a in row.items():
                if a <= 0:
                    raise MisalignedIndicator(
                        f"alpha[{w}][{label}]={a} must be positive")


def update_hyperparameters(alpha: Sequence[float], indicator: Sequence[int],
                           omega: float) -> tuple[float, ...]:
    """alpha_hat = alpha + omega * (1 - I), componentwise."""
    if omega <= 0:
        raise MisalignedIndicator(f"omega={omega} must be positive")
    if len(alpha) != len(indicator):
        raise MisalignedIndicator(
            f"{len(indicator)} indicator bits for {len(alpha)} components")
    if any(b not in (0, 1) for b in indicator):
        raise MisalignedIndicator("indicator bits must be 0 or 1")
    return tuple(a + omega * (1 - b) for a, b in zip(alpha, indicator))


def corrected_positions(rec: RemedyRecord,
                        indicator: Sequence[int]) -> tuple[str, ...]:
    if len(indicator) != len(rec.root_causes):
        raise MisalignedIndicator(
            f"{len(indicator)} bits for {len(rec.root_causes)} root causes")
    return tuple(w for w, bit in zip(rec.root_causes, indicator) if bit)


def manipulated_parents(ceg: FailureCEG, rec: RemedyRecord,
                        indicator: Sequence[int]) -> tuple[str, ...]:
    """pa(w(r)): parents of the root causes the maintenance corrected."""
    out: list[str] = []
    for w in corrected_positions(rec, indicator):
        for p in ceg.parents(w):
            if p not in out:
                out.append(p)
    return tuple(sorted(out))


def _edge_bits(ceg: FailureCEG, parent: str, rec: RemedyRecord,
               indicator: Sequence[int]) -> dict[str, int]:
    """Explicit edge <-> root-cause bit alignment for one parent floret.

    Edges entering a root cause carry its indicator bit; edges to
    non-root-cause children count as uncorrected (bit 0), so their
    hyperparameters absorb the update weight as well.
    """
    bit_of = dict(zip(rec.root_causes, indicator))
    return {e.label: bit_of.get(e.dst, 0) for e in ceg.out_edges(parent)}


def updated_priors(ceg: FailureCEG, priors: FloretPrior, rec: RemedyRecord,
                   indicator: Sequence[int]) -> dict[str, dict[str, float]]:
    """alpha_hat at every manipulated parent floret."""
    out: dict[str, dict[str, float]] = {}
    for parent in manipulated_parents(ceg, rec, indicator):
        row = priors.alphas.get(parent)
        if row is None:
            raise MisalignedIndicator(f"no prior for floret at {parent}")
        labels = [e.label for e in ceg.out_edges(parent)]
        if set(row) != set(labels):
            raise MisalignedIndicator(
                f"prior at {parent} covers {sorted(row)}, edges are {sorted(labels)}")
        bits = _edge_bits(ceg, parent, rec, indicator)
        alpha = [row[label] for label in labels]
        hat = update_hyperparameters(alpha, [bits[label] for label in labels],
                                     priors.omega)
        out[parent] = dict(zip(labels, hat))
    return out


def post_intervention_distribution(
        ceg: FailureCEG, priors: FloretPrior, rec: RemedyRecord,
        indicator: Sequence[int]) -> dict[str, dict[str, float]]:
    """pi*(pa(w(r)) | r): posterior means of the updated priors."""
    out = {}
    for parent, row in updated_priors(ceg, priors, rec, indicator).items():
        total = sum(row.values())
        out[parent] = {label: a / total for label, a in row.items()}
    return out


def apply_remedy(ceg: FailureCEG, priors: FloretPrior, rec: RemedyRecord,
                 indicator: Sequence[int]) -> FailureCEG:
    """The stochastic manipulation: same topology, updated floret
    distributions at the manipulated parents, stages recomputed."""
    pi_star = post_intervention_distribution(ceg, priors, rec, indicator)
    return recompute_stages(with_floret_distributions(ceg, pi_star))


# -- back-door identification ---------------------------------------------------


def receiving_vertices(ceg: FailureCEG, label: str) -> tuple[str, ...]:
    """w(x): the positions entered by edges carrying a d-event label."""
    return tuple(sorted({e.dst for e in ceg.edges if e.label == label}))


def _path_index(paths: Sequence[CegPath]) -> dict[str, set[int]]:
    """position -> indices of paths passing through it."""
    by_vertex: dict[str, set[int]] = {}
    for i, p in enumerate(paths):
        for w in p.positions():
            by_vertex.setdefault(w, set()).add(i)
    return by_vertex


def _mass(ceg: FailureCEG, paths: Sequence[CegPath], idx: Iterable[int]) -> float:
    return sum(path_probability(ceg, paths[i]) for i in idx)


def check_backdoor_partition(ceg: FailureCEG, parents: Sequence[str],
                             w_x: Sequence[str], w_bar: Sequence[str],
                             y_vertices: Sequence[str],
                             z_partition: Sequence[Sequence[str]]) -> None:
    """Structural validity of a remedial back-door configuration.

    Conservative: every condition that the identification argument leans
    on is checked explicitly, and any failure raises
    :class:`InvalidPartition` naming the condition, rather than letting
    an unidentifiable query return a number.
    """
    paths = enumerate_paths(ceg)
    by_vertex = _path_index(paths)

    def path_set(vertices: Iterable[str]) -> set[int]:
        out: set[int] = set()
        for w in vertices:
            out |= by_vertex.get(w, set())
        return out

    lam_p = path_set(parents)
    for i, a in enumerate(parents):
        for b in parents[i + 1:]:
            if by_vertex.get(a, set()) & by_vertex.get(b, set()):
                raise InvalidPartition(
                    f"manipulated parents {a} and {b} share a path")
    for w in w_x:
        srcs = {e.src for e in ceg.in_edges(w)}
        if not srcs <= set(parents):
            raise InvalidPartition(
                f"controlled position {w} is reachable outside the "
                f"manipulated florets (parents {sorted(srcs)})")
    roots = list(w_x) + list(w_bar)
    for i, a in enumerate(roots):
        for b in roots[i + 1:]:
            if by_vertex.get(a, set()) & by_vertex.get(b, set()):
                raise InvalidPartition(f"root causes {a} and {b} share a path")
    for w in w_bar:
        if by_vertex.get(w, set()) & lam_p:
            raise InvalidPartition(
                f"unaffected root cause {w} shares a path with the "
                "manipulated florets")
    y_paths = path_set(y_vertices)
    if not y_paths <= (path_set(roots) | lam_p):
        raise InvalidPartition(
            "some path to the effect passes no declared root cause")
    if not (y_paths - lam_p) <= path_set(w_bar):
        raise InvalidPartition(
            "an effect path outside the manipulated region passes no "
            "unaffected root cause")
    desc_p: set[str] = set()
    for p in parents:
        desc_p |= ceg.descendants(p)
    for cls in z_partition:
        for zv in cls:
            if zv in desc_p:
                raise InvalidPartition(
                    f"back-door vertex {zv} lies downstream of a manipulated floret")
    all_idx = set(range(len(paths)))
    seen: set[int] = set()
    for cls in z_partition:
        s = path_set(cls)
        if s & seen:
            raise InvalidPartition("back-door classes overlap")
        seen |= s
    if seen != all_idx:
        raise InvalidPartition("back-door classes do not cover the path space")
    for cls in z_partition:
        for w in w_x:
            if not (path_set(cls) & by_vertex.get(w, set())):
                raise InvalidPartition(
                    f"back-door class {sorted(cls)} is incompatible with "
                    f"controlled position {w}")
    for w in roots:
        desc_w = ceg.descendants(w) | {w}
        for yv in y_vertices:
            if yv in desc_w:
                continue
            if by_vertex.get(yv, set()) & by_vertex.get(w, set()):
                raise InvalidPartition(
                    f"effect vertex {yv} is neither downstream of nor "
                    f"path-disjoint from root cause {w}")


def backdoor_singular(ceg: FailureCEG, x_vertices: Sequence[str],
                      y_vertices: Sequence[str],
                      z_partition: Sequence[Sequence[str]]) -> float:
    """Effect of forcing passage through w(x), by back-door adjustment:
    sum over z of pi(y | x, z) pi(z).

    Forcing redirects every floret that carries a transition into w(x);
    a path visiting no such floret cannot be redirected, so the formula
    requires the controlled event to be forceable on every path.
    """
    paths = enumerate_paths(ceg)
    by_vertex = _path_index(paths)

    def path_set(vertices: Iterable[str]) -> set[int]:
        out: set[int] = set()
        for w in vertices:
            out |= by_vertex.get(w, set())
        return out

    forceable = {e.src for e in ceg.edges if e.dst in set(x_vertices)}
    if path_set(forceable) != set(range(len(paths))):
        raise InvalidPartition(
            "the controlled event is not forceable on every path")
    x_idx = path_set(x_vertices)
    y_idx = path_set(y_vertices)
    total = 0.0
    for cls in z_partition:
        z_idx = path_set(cls)
        denom = _mass(ceg, paths, x_idx & z_idx)
        if denom <= 0.0:
            raise InvalidPartition(
                f"class {sorted(cls)} never co-occurs with the controlled event")
        cond = _mass(ceg, paths, x_idx & z_idx & y_idx) / denom
        total += cond * _mass(ceg, paths, z_idx)
    return total


def backdoor_remedial_effect(ceg: FailureCEG, rec: RemedyRecord,
                             pi_star: Mapping[str, Mapping[str, float]],
                             y_vertices: Sequence[str],
                             z_partition: Sequence[Sequence[str]] | None = None,
                             ) -> float:
    """Identified effect of the stochastic manipulation pi*(pa(w(r)) | r).

    Splits the path space into the florets the remedy touched and the
    rest: the touched part is adjusted through the back-door partition
    with post-intervention reach masses, the untouched part keeps its
    idle probabilities.  All conditionals are idle-system quantities.
    """
    parents = tuple(sorted(pi_star))
    for p in parents:
        labels = {e.label for e in ceg.out_edges(p)}
        if set(pi_star[p]) != labels:
            raise InvalidPartition(
                f"pi* at {p} must cover edge labels {sorted(labels)}")
        total = sum(pi_star[p].values())
        if abs(total - 1.0) > ROW_TOL:
            raise WeightsNotNormalized(f"pi* at {p} sums to {total!r}")
    children = sorted({e.dst for p in parents for e in ceg.out_edges(p)})
    w_x = tuple(w for w in children if not ceg.is_sink(w))
    w_bar = tuple(w for w in rec.root_causes
                  if w not in w_x and not ceg.is_sink(w))
    if z_partition is None:
        z_partition = [[ceg.root]]
    check_backdoor_partition(ceg, parents, w_x, w_bar, y_vertices, z_partition)

    paths = enumerate_paths(ceg)
    by_vertex = _path_index(paths)
    reach = reach_probabilities(ceg)

    def path_set(vertices: Iterable[str]) -> set[int]:
        out: set[int] = set()
        for w in vertices:
            out |= by_vertex.get(w, set())
        return out

    y_idx = path_set(y_vertices)

    def pi_star_reach(w: str) -> float:
        total = 0.0
        for e in ceg.in_edges(w):
            if e.src in pi_star:
                total += reach[e.src] * pi_star[e.src][e.label]
        return total

    affected = 0.0
    # manipulated mass sent straight into a terminal node never mixes
    # with the back-door terms: it reaches the effect iff the sink is it
    y_set = set(y_vertices)
    for p in parents:
        for e in ceg.out_edges(p):
            if ceg.is_sink(e.dst) and e.dst in y_set:
                affected += reach[p] * pi_star[p][e.label]
    for w in w_x:
        w_idx = by_vertex.get(w, set())
        star = pi_star_reach(w)
        if star <= 0.0:
            continue
        for cls in z_partition:
            z_idx = path_set(cls)
            denom = _mass(ceg, paths, w_idx & z_idx)
            if denom <= 0.0:
                raise ZeroConditioningSet(
                    f"no idle mass through {w} and class {sorted(cls)}")
            cond = _mass(ceg, paths, w_idx & z_idx & y_idx) / denom
            affected += cond * _mass(ceg, paths, z_idx) * star
    unaffected = 0.0
    for w in w_bar:
        w_idx = by_vertex.get(w, set())
        mass = _mass(ceg, paths, w_idx)
        if mass <= 0.0:
            continue
        unaffected += (_mass(ceg, paths, w_idx & y_idx) / mass) * mass
    return affected + unaffected


def perfect_effect(ceg: FailureCEG, priors: FloretPrior, rec: RemedyRecord,
                   indicator: Sequence[int], y_vertices: Sequence[str],
                   z_partition: Sequence[Sequence[str]] | None = None) -> float:
    """Effect of a perfect remedial intervention: the post-intervention
    distribution comes from the updated priors, then back-door applies."""
    pi_star = post_intervention_distribution(ceg, priors, rec, indicator)
    return backdoor_remedial_effect(ceg, rec, pi_star, y_vertices, z_partition)


def action_conditional_setup(
        ceg: FailureCEG, priors: FloretPrior, rec: RemedyRecord,
) -> tuple[dict[str, dict[str, dict[str, float]]], dict[str, float]]:
    """Per-action post-intervention distributions and action weights.

    The action's distribution mixes the posterior means over its
    indicator table; a parent floret untouched by a particular indicator
    vector contributes its idle distribution.  Action weights come from
    marginalising the record's path-conditional action table.
    """
    if not rec.p_ind_action or not rec.p_path or not rec.p_action_given_path:
        raise MissingTable(
            f"remedy {rec.r!r}: the random regime needs p(I|r,a), "
            "p(a|path,r) and p(path|r)")
    idle = {w: {e.label: e.prob for e in ceg.out_edges(w)}
            for w in ceg.nonsink_positions()}
    pi_by_action: dict[str, dict[str, dict[str, float]]] = {}
    for a, table in rec.p_ind_action.items():
        parents: set[str] = set()
        for vec, p in table.items():
            if p > 0:
                parents.update(manipulated_parents(ceg, rec, vec))
        mixed = {p: {label: 0.0 for label in idle[p]} for p in parents}
        for vec, weight in table.items():
            if weight <= 0:
                continue
            star = post_intervention_distribution(ceg, priors, rec, vec)
            for p in parents:
                dist = star.get(p, idle[p])
                for label, value in dist.items():
                    mixed[p][label] += weight * value
        pi_by_action[a] = mixed
    weights: dict[str, float] = {a: 0.0 for a in rec.action_space}
    for path_key, p_lambda in rec.p_path.items():
        for a, p_a in rec.p_action_given_path.get(path_key, {}).items():
            weights[a] = weights.get(a, 0.0) + p_a * p_lambda
    return pi_by_action, weights


def random_effect(ceg: FailureCEG, rec: RemedyRecord,
                  pi_star_by_action: Mapping[str, Mapping[str, Mapping[str, float]]],
                  p_action: Mapping[str, float],
                  y_vertices: Sequence[str],
                  z_partition: Sequence[Sequence[str]] | None = None) -> float:
    """Action-weighted mixture of per-action back-door effects."""
    if set(p_action) != set(rec.action_space):
        raise WeightsNotNormalized(
            f"action weights cover {sorted(p_action)}, "
            f"space is {sorted(rec.action_space)}")
    total = sum(p_action.values())
    if abs(total - 1.0) > ROW_TOL:
        raise WeightsNotNormalized(f"action weights sum to {total!r}")
    value = 0.0
    for a in rec.action_space:
        if a not in pi_star_by_action:
            raise MissingTable(f"no post-intervention distribution for action {a!r}")
        value += p_action[a] * backdoor_remedial_effect(
            ceg, rec, pi_star_by_action[a], y_vertices, z_partition)
    return value
