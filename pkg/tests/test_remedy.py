"""Remedy classification, the indicator mixture, the hyperparameter
update and back-door identification, all checked against direct
manipulation of the CEG."""

import random

import pytest

from ceg_remedy.ceg import (
    enumerate_paths,
    path_probability,
    with_floret_distributions,
)
from ceg_remedy.errors import (
    InvalidPartition,
    MisalignedIndicator,
    MissingTable,
    WeightsNotNormalized,
)
from ceg_remedy.remedy import (
    FloretPrior,
    IMPERFECT,
    PERFECT,
    RemedyRecord,
    UNCERTAIN,
    apply_remedy,
    backdoor_remedial_effect,
    backdoor_singular,
    classify_remedy,
    indicator_distribution,
    perfect_effect,
    post_intervention_distribution,
    random_effect,
    update_hyperparameters,
    updated_priors,
)

from util import dirichlet_like, random_remedial_fixture


def fail_mass(ceg) -> float:
    return sum(path_probability(ceg, p) for p in enumerate_paths(ceg)
               if p.sink() == ceg.sink_fail)


class TestClassification:
    def test_replaced_part_is_perfect(self):
        assert classify_remedy({"root_cause_identified": True,
                                "root_cause_corrected": True,
                                "recovery_observed": True}) == PERFECT

    def test_symptom_patch_is_imperfect(self):
        assert classify_remedy({"root_cause_identified": True,
                                "root_cause_corrected": False,
                                "recovery_observed": True}) == IMPERFECT

    def test_unextractable_action_is_uncertain(self):
        assert classify_remedy({"root_cause_identified": False,
                                "root_cause_corrected": False,
                                "recovery_observed": False}) == UNCERTAIN


def two_indicator_record(q):
    return RemedyRecord(
        r="service", action_space=("tighten", "replace"), q=q,
        root_causes=("wa", "wb"),
        p_ind_perfect={(1, 1): 1.0},
        p_ind_action={"tighten": {(1, 0): 0.7, (0, 1): 0.3},
                      "replace": {(1, 1): 0.9, (0, 0): 0.1}},
        p_action_given_path={"p1": {"tighten": 0.6, "replace": 0.4},
                             "p2": {"tighten": 0.2, "replace": 0.8}},
        p_path={"p1": 0.5, "p2": 0.5},
    )


class TestIndicatorMixture:
    def test_degenerate_perfect(self):
        rec = two_indicator_record(1.0)
        assert indicator_distribution(rec) == {(1, 1): 1.0}

    def test_pure_random_branch(self):
        rec = two_indicator_record(0.0)
        dist = indicator_distribution(rec)
        # hand computation over actions and paths
        p_tighten = 0.5 * 0.6 + 0.5 * 0.2
        p_replace = 0.5 * 0.4 + 0.5 * 0.8
        assert dist[(1, 0)] == pytest.approx(p_tighten * 0.7)
        assert dist[(0, 1)] == pytest.approx(p_tighten * 0.3)
        assert dist[(1, 1)] == pytest.approx(p_replace * 0.9)
        assert dist[(0, 0)] == pytest.approx(p_replace * 0.1)

    def test_convex_blend(self):
        half = indicator_distribution(two_indicator_record(0.5))
        pure = indicator_distribution(two_indicator_record(0.0))
        for vec, p in pure.items():
            expected = 0.5 * p + (0.5 if vec == (1, 1) else 0.0)
            assert half[vec] == pytest.approx(expected)
        assert sum(half.values()) == pytest.approx(1.0)

    def test_mixture_rows_always_normalised(self):
        rng = random.Random(12)
        for _ in range(50):
            n = rng.randint(1, 3)
            vecs = list({tuple(rng.randint(0, 1) for _ in range(n))
                         for _ in range(3)})
            def dist(keys):
                raw = [rng.uniform(0.1, 1.0) for _ in keys]
                s = sum(raw)
                return {k: r / s for k, r in zip(keys, raw)}
            paths = ["pa", "pb"]
            rec = RemedyRecord(
                "r", ("x", "y"), rng.uniform(0.0, 1.0), tuple(f"w{i}" for i in range(n)),
                p_ind_perfect=dist(vecs),
                p_ind_action={"x": dist(vecs), "y": dist(vecs)},
                p_action_given_path={k: dist(["x", "y"]) for k in paths},
                p_path=dist(paths))
            mix = indicator_distribution(rec)
            assert sum(mix.values()) == pytest.approx(1.0, abs=1e-12)
            assert all(v >= 0 for v in mix.values())

    def test_missing_tables(self):
        rec = RemedyRecord("r", ("a",), 0.5, ("w",), {(1,): 1.0})
        with pytest.raises(MissingTable):
            indicator_distribution(rec)


class TestHyperparameterUpdate:
    def test_linear_form(self):
        assert update_hyperparameters((2, 3), (1, 0), 5.0) == (2.0, 8.0)

    def test_all_corrected_is_identity(self):
        assert update_hyperparameters((2, 3), (1, 1), 5.0) == (2.0, 3.0)

    def test_monotone_and_pinned(self):
        rng = random.Random(4)
        for _ in range(200):
            k = rng.randint(1, 5)
            alpha = [rng.uniform(0.1, 9) for _ in range(k)]
            bits = [rng.randint(0, 1) for _ in range(k)]
            omega = rng.uniform(0.01, 10)
            hat = update_hyperparameters(alpha, bits, omega)
            for a, b, h in zip(alpha, bits, hat):
                assert h >= a
                assert (h == a) == (b == 1)

    def test_bad_omega(self):
        with pytest.raises(MisalignedIndicator):
            update_hyperparameters((1.0,), (1,), 0.0)

    def test_misaligned(self):
        with pytest.raises(MisalignedIndicator):
            update_hyperparameters((1.0, 2.0), (1,), 1.0)


@pytest.fixture
def lights_remedy(warning_lights):
    stree, positions, ceg = warning_lights
    pos = positions.position_of
    roots = (pos["v3"], pos["v4"])
    rec = RemedyRecord("light service", ("check",), 1.0, roots,
                       {(1, 1): 1.0})
    priors = FloretPrior(
        alphas={pos["v1"]: {"2 off": 2.0, "2 on": 3.0},
                pos["v2"]: {"2 off": 2.0, "2 on": 3.0}},
        omega=5.0)
    return ceg, pos, rec, priors


class TestStochasticManipulation:
    def test_posterior_mean(self, lights_remedy):
        ceg, pos, rec, priors = lights_remedy
        pi_star = post_intervention_distribution(ceg, priors, rec, (1, 0))
        # v3 corrected: its "2 on" edges keep alpha, the rest gain omega
        assert pi_star[pos["v1"]]["2 on"] == pytest.approx(3.0 / 10.0)
        assert pi_star[pos["v1"]]["2 off"] == pytest.approx(7.0 / 10.0)

    def test_all_corrected_normalises_alpha(self, lights_remedy):
        ceg, pos, rec, priors = lights_remedy
        pi_star = post_intervention_distribution(ceg, priors, rec, (1, 1))
        # both children corrected: every edge of v2's floret enters a
        # root cause, so alpha passes through untouched
        assert pi_star[pos["v2"]]["2 off"] == pytest.approx(0.4)
        assert pi_star[pos["v2"]]["2 on"] == pytest.approx(0.6)

    def test_topology_preserved_and_mass_conserved(self, lights_remedy):
        ceg, pos, rec, priors = lights_remedy
        new = apply_remedy(ceg, priors, rec, (1, 0))
        assert new.topology_signature() == ceg.topology_signature()
        total = sum(path_probability(new, p) for p in enumerate_paths(new))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_missing_prior_detected(self, lights_remedy):
        ceg, pos, rec, _ = lights_remedy
        thin = FloretPrior(alphas={pos["v1"]: {"2 off": 2.0, "2 on": 3.0}},
                           omega=5.0)
        with pytest.raises(MisalignedIndicator):
            updated_priors(ceg, thin, rec, (1, 1))


class TestBackdoorRemedial:
    def test_noop_intervention_returns_idle(self, lights_remedy):
        ceg, pos, rec, priors = lights_remedy
        idle = {pos["v1"]: {"2 off": 0.4, "2 on": 0.6},
                pos["v2"]: {"2 off": 0.4, "2 on": 0.6}}
        value = backdoor_remedial_effect(ceg, rec, idle, [ceg.sink_fail])
        assert value == pytest.approx(fail_mass(ceg), abs=1e-12)

    def test_untouched_region_keeps_idle_value(self):
        rng = random.Random(77)
        stree, positions, ceg, rc_pos = random_remedial_fixture(rng)
        # effect: failures under the second component only
        comp_pos = positions.position_of["c1"]
        y = [w for w in rc_pos
             if comp_pos in {e.src for e in ceg.in_edges(w)}]
        # remedy corrects causes under the first component
        corrected = [w for w in rc_pos
                     if positions.position_of["c0"]
                     in {e.src for e in ceg.in_edges(w)}]
        parents = {positions.position_of["c0"]}
        pi_star = {}
        for p in parents:
            labels = [e.label for e in ceg.out_edges(p)]
            raw = dirichlet_like(rng, len(labels))
            pi_star[p] = dict(zip(labels, raw))
        rec = RemedyRecord("fix", ("a",), 1.0, tuple(rc_pos),
                           {tuple(1 if w in corrected else 0
                                  for w in rc_pos): 1.0})
        value = backdoor_remedial_effect(ceg, rec, pi_star, y)
        paths = enumerate_paths(ceg)
        idle = sum(path_probability(ceg, p) for p in paths
                   if set(y) & set(p.positions()))
        assert value == pytest.approx(idle, abs=1e-12)

    def test_matches_direct_manipulation(self):
        rng = random.Random(42)
        worst = 0.0
        for _ in range(40):
            stree, positions, ceg, rc_pos = random_remedial_fixture(rng)
            corrected = sorted(rng.sample(rc_pos, rng.randint(1, len(rc_pos))))
            parents = sorted({p for w in corrected for p in ceg.parents(w)})
            pi_star = {}
            for p in parents:
                labels = [e.label for e in ceg.out_edges(p)]
                pi_star[p] = dict(zip(labels, dirichlet_like(rng, len(labels))))
            rec = RemedyRecord("fix", ("a",), 1.0, tuple(rc_pos),
                               {tuple(1 if w in corrected else 0
                                      for w in rc_pos): 1.0})
            value = backdoor_remedial_effect(ceg, rec, pi_star,
                                             [ceg.sink_fail])
            manipulated = with_floret_distributions(ceg, pi_star)
            worst = max(worst, abs(value - fail_mass(manipulated)))
        assert worst < 1e-10

    def test_nontrivial_partition_on_singular(self, warning_lights):
        stree, positions, ceg = warning_lights
        pos = positions.position_of
        value = backdoor_singular(ceg, [pos["v3"]], [ceg.sink_fail],
                                  [[pos["v1"]], [pos["v2"]]])
        # forcing "2 on" makes failure probability the merged floret's
        from ceg_remedy.oracle import singular_manipulation

        forced = singular_manipulation(ceg, [pos["v3"]])
        assert value == pytest.approx(fail_mass(forced), abs=1e-12)

    def test_singular_with_class_dependent_conditionals(self):
        # split the two post-"2 on" fault florets onto different stages:
        # the back-door conditionals now genuinely differ per class
        from ceg_remedy.fixtures import warning_lights_staged_tree
        from ceg_remedy.oracle import singular_manipulation
        from ceg_remedy.trees import compute_positions
        from ceg_remedy.ceg import build_ceg

        stree = warning_lights_staged_tree(p_fault_on=0.3)
        theta = dict(stree.ptree.theta)
        theta["v5"] = (0.1, 0.9)  # (no fault, fault) after 1 on
        from ceg_remedy.trees import ProbabilityTree, compute_stages

        split = compute_stages(ProbabilityTree(stree.tree, theta))
        positions = compute_positions(split)
        pos = positions.position_of
        assert pos["v3"] != pos["v5"]
        ceg = build_ceg(split, positions)
        x = [pos["v3"], pos["v5"]]
        value = backdoor_singular(ceg, x, [ceg.sink_fail],
                                  [[pos["v1"]], [pos["v2"]]])
        forced = singular_manipulation(ceg, x)
        assert value == pytest.approx(fail_mass(forced), abs=1e-12)

    def test_degenerate_pi_star_reduces_to_singular(self):
        rng = random.Random(5)
        for _ in range(10):
            stree, positions, ceg, rc_pos = random_remedial_fixture(rng)
            # manipulate the root floret itself: its children cover all paths
            root_children = [e.dst for e in ceg.out_edges(ceg.root)]
            target = rng.choice(root_children)
            pi_star = {ceg.root: {e.label: (1.0 if e.dst == target else 0.0)
                                  for e in ceg.out_edges(ceg.root)}}
            rec = RemedyRecord("fix", ("a",), 1.0, tuple(root_children),
                               {tuple(1 if w == target else 0
                                      for w in root_children): 1.0})
            value = backdoor_remedial_effect(ceg, rec, pi_star,
                                             [ceg.sink_fail])
            singular = backdoor_singular(ceg, [target], [ceg.sink_fail],
                                         [[ceg.root]])
            assert value == pytest.approx(singular, abs=1e-10)

    def test_perfect_effect_delegates(self, lights_remedy):
        ceg, pos, rec, priors = lights_remedy
        value = perfect_effect(ceg, priors, rec, (1, 0), [ceg.sink_fail])
        pi_star = post_intervention_distribution(ceg, priors, rec, (1, 0))
        direct = with_floret_distributions(ceg, pi_star)
        assert value == pytest.approx(fail_mass(direct), abs=1e-12)

    def test_invalid_partitions_surface(self, lights_remedy):
        ceg, pos, rec, priors = lights_remedy
        pi_star = post_intervention_distribution(ceg, priors, rec, (1, 1))
        with pytest.raises(InvalidPartition, match="cover the path space"):
            backdoor_remedial_effect(ceg, rec, pi_star, [ceg.sink_fail],
                                     [[pos["v1"]]])
        with pytest.raises(InvalidPartition, match="downstream"):
            backdoor_remedial_effect(ceg, rec, pi_star, [ceg.sink_fail],
                                     [[pos["v3"]], [pos["v4"]]])


class TestRandomEffect:
    def setup_fixture(self, lights_remedy):
        ceg, pos, rec, priors = lights_remedy
        pi_a = post_intervention_distribution(ceg, priors, rec, (1, 0))
        pi_b = post_intervention_distribution(ceg, priors, rec, (0, 1))
        return ceg, rec, {"check": pi_a}, pi_a, pi_b

    def test_singleton_action_space(self, lights_remedy):
        ceg, rec, by_action, pi_a, _ = self.setup_fixture(lights_remedy)
        value = random_effect(ceg, rec, by_action, {"check": 1.0},
                              [ceg.sink_fail])
        direct = backdoor_remedial_effect(ceg, rec, pi_a, [ceg.sink_fail])
        assert value == pytest.approx(direct, abs=1e-12)

    def test_identical_actions_ignore_weights(self, lights_remedy):
        ceg, pos, rec, priors = lights_remedy
        rec2 = RemedyRecord(rec.r, ("a1", "a2"), rec.q, rec.root_causes,
                            rec.p_ind_perfect)
        pi = post_intervention_distribution(ceg, priors, rec, (1, 0))
        common = backdoor_remedial_effect(ceg, rec2, pi, [ceg.sink_fail])
        for w1 in (0.2, 0.7):
            value = random_effect(ceg, rec2, {"a1": pi, "a2": pi},
                                  {"a1": w1, "a2": 1 - w1}, [ceg.sink_fail])
            assert value == pytest.approx(common, abs=1e-12)

    def test_two_action_mixture_matches_enumeration(self, lights_remedy):
        ceg, pos, rec, priors = lights_remedy
        rec2 = RemedyRecord(rec.r, ("a1", "a2"), rec.q, rec.root_causes,
                            rec.p_ind_perfect)
        pi_a = post_intervention_distribution(ceg, priors, rec, (1, 0))
        pi_b = post_intervention_distribution(ceg, priors, rec, (1, 1))
        weights = {"a1": 0.3, "a2": 0.7}
        value = random_effect(ceg, rec2, {"a1": pi_a, "a2": pi_b}, weights,
                              [ceg.sink_fail])
        truth = sum(weights[a] * fail_mass(with_floret_distributions(ceg, pi))
                    for a, pi in (("a1", pi_a), ("a2", pi_b)))
        assert value == pytest.approx(truth, abs=1e-10)

    def test_action_conditional_setup(self, warning_lights):
        from ceg_remedy.fixtures import demo_bundle
        from ceg_remedy.remedy import action_conditional_setup

        bundle = demo_bundle("warning-lights")
        ceg = bundle.require_ceg()
        rec, priors = bundle.remedies["light repair"]
        pi_by_action, weights = action_conditional_setup(ceg, priors, rec)
        assert set(weights) == set(rec.action_space)
        assert sum(weights.values()) == pytest.approx(1.0)
        for pi in pi_by_action.values():
            for dist in pi.values():
                assert sum(dist.values()) == pytest.approx(1.0)
        value = random_effect(ceg, rec, pi_by_action, weights,
                              [ceg.sink_fail])
        # equals the by-hand action mixture of per-action effects
        truth = sum(weights[a] * backdoor_remedial_effect(
            ceg, rec, pi_by_action[a], [ceg.sink_fail])
            for a in rec.action_space)
        assert value == pytest.approx(truth, abs=1e-12)

    def test_weight_validation(self, lights_remedy):
        ceg, rec, by_action, pi_a, _ = self.setup_fixture(lights_remedy)
        with pytest.raises(WeightsNotNormalized):
            random_effect(ceg, rec, by_action, {"check": 0.8},
                          [ceg.sink_fail])
