import math
from fractions import Fraction

import pytest

from conftest import additive, corpus, e1, e2, e3, e4
from budgetfeasible import (AdditiveValuation, Instance, MechanismSpec, TaskValuedMatching,
                            Valuation, check_assignment, check_budget_feasible, check_ir, check_monotone,
                            check_submodular, check_truthful, empirical_ratio, greedy_tm, verify)
from budgetfeasible.mechanisms import KINDS

HALF = Fraction(1, 2)


def admit_if_expensive(inst):
    # broken on purpose: winning needs a high bid
    return frozenset(i for i in inst.ids if inst.cost(i) >= 1)


def admit_every_affordable(inst):
    return frozenset(i for i in inst.ids if inst.cost(i) <= inst.budget)


class Supermodular(Valuation):
    kind = "planted"

    def _evaluate(self, mask):
        return Fraction(bin(mask).count("1") ** 2)


def test_greedy_tm_is_monotone_on_small_additive_instances():
    for inst in corpus("additive", 100, seed=31, n_max=6):
        assert check_monotone(MechanismSpec("greedy_tm"), inst).passed


def test_planted_reversal_is_caught_with_a_witness():
    inst = additive([3, 3], [Fraction(1, 2), 2], 4)
    res = check_monotone(admit_if_expensive, inst)
    assert not res.passed
    w = res.witness
    assert w["losing_bid"] < w["winning_bid"]
    bad = check_truthful(admit_if_expensive, inst)
    assert not bad.passed
    assert bad.witness["deviation_utility"] == "unbounded" or bad.witness["deviation_utility"] > bad.witness[
        "truthful_utility"]


@pytest.mark.parametrize("kind", KINDS)
def test_single_agent_instance_passes(kind):
    inst = additive([5], [1], 3)
    for check in (check_monotone, check_truthful, check_ir, check_budget_feasible):
        assert check(MechanismSpec(kind), inst).passed


def test_e1_checks():
    spec = MechanismSpec("greedy_tm")
    assert check_ir(spec, e1()).passed
    assert check_budget_feasible(spec, e1()).passed
    assert check_truthful(spec, e1()).passed


def test_empty_winners_pass():
    inst = additive([6, 4, 2], [1, 1, 1], 2)
    for check in (check_ir, check_budget_feasible, check_monotone):
        assert check(MechanismSpec("greedy_eom"), inst).passed


def test_overspending_rule_is_reported_not_raised():
    # both affordable agents win at any bid up to B, so each is paid B
    inst = additive([1, 1], [1, 1], 2)
    res = check_budget_feasible(admit_every_affordable, inst)
    assert not res.passed
    assert res.witness["total"] == 4 and res.witness["budget"] == 2


def test_zero_value_agents_are_not_paid_for_nothing():
    # nothing affordable has value; the greedy rules must not hand out B per agent
    inst = additive([0, 0, 5], [1, 1, 9], 2)
    for kind in ("greedy_tm", "greedy_eom", "greedy_om", "det_large"):
        spec = MechanismSpec(kind) if kind != "det_large" else MechanismSpec(kind, alpha=HALF, gamma=1)
        assert check_budget_feasible(spec, inst).passed
    assert greedy_tm(1, additive([0, 0], [0, 0], 1)) == {1, 2}


def test_greedy_tm_with_gamma_one_stays_within_budget():
    spec = MechanismSpec("greedy_tm", gamma=1)
    for family in ("additive", "coverage"):
        for inst in corpus(family, 60, seed=77, n_max=6):
            assert check_budget_feasible(spec, inst).passed


def test_empirical_ratios():
    assert empirical_ratio(MechanismSpec("random_tm"), e2()) == Fraction(23, 5)
    assert empirical_ratio(MechanismSpec("random_eom"), additive([6, 4, 2], [1, 1, 1], 2)) == Fraction(10, 3)
    assert empirical_ratio(MechanismSpec("greedy_eom"), additive([6, 4, 2], [1, 1, 1], 2)) == math.inf
    assert empirical_ratio(MechanismSpec("greedy_tm"), additive([0, 0], [1, 1], 2)) == 1


def test_submodularity():
    assert check_submodular(e3().valuation).passed
    assert check_submodular(e4().valuation).passed
    assert check_submodular(AdditiveValuation([1, 2, 3])).passed
    res = check_submodular(Supermodular(3))
    assert not res.passed and res.witness["kind"] == "submodularity"


def test_assignment():
    spec = MechanismSpec("greedy_tm", matching_stop=True)
    assert check_assignment(spec, e4()).passed
    assert check_assignment(MechanismSpec("greedy_om", matching_stop=True), e4()).passed
    empty = Instance.from_costs([5, 5], 2, e4().valuation)
    assert check_assignment(spec, empty).passed


def test_zero_marginal_agent_breaks_the_assignment_without_the_stop():
    # both agents can only do t1; the free second one adds nothing yet is admitted
    val = TaskValuedMatching({"t1": 5}, [(1, "t1"), (2, "t1")], 2)
    inst = Instance.from_costs([0, 0], 1, val)
    res = check_assignment(MechanismSpec("greedy_tm"), inst)
    assert not res.passed
    assert res.witness["winners"] == {1, 2} and res.witness["value"] == 5
    assert check_assignment(MechanismSpec("greedy_tm", matching_stop=True), inst).passed


def test_assignment_needs_a_matching_valuation():
    assert not check_assignment(MechanismSpec("greedy_tm"), e1()).passed


def test_report():
    rep = verify(MechanismSpec("random_tm"), e2())
    assert rep.passed
    assert rep.empirical_ratio == Fraction(23, 5)
    d = rep.to_dict()
    assert [c["name"] for c in d["checks"]] == ["monotone", "budget_feasible", "truthful", "ir"]
    assert d["empirical_ratio"] == "23/5"
