from fractions import Fraction

import pytest

import reference as ref
from conftest import additive, as_reference, corpus, e1, e2, e3, e5
from budgetfeasible import (GreedyOracle, InvalidArgument, MechanismSpec, apply_zero_marginal_stop,
                            deterministic_eom, deterministic_large, greedy_eom, greedy_om, greedy_order,
                            greedy_tm, random_eom, random_om, random_om_modified, random_tm, run_mechanism)
from budgetfeasible.mechanisms import KINDS, LARGE_MARKET_ALPHA, LARGE_MARKET_GAMMA, branches, greedy_om_modified

HALF = Fraction(1, 2)
FAMILIES = ("additive", "coverage", "matching", "task_matching")


def test_e1_greedy_tm():
    assert greedy_tm(HALF, e1()) == {1}


def test_e2_greedy_tm_value_is_one():
    inst = e2()
    assert inst.value(greedy_tm(HALF, inst)) == 1


def test_e2_random_tm_mixture():
    out = random_tm(HALF, e2())
    assert [p for p, _ in out.branches] == [Fraction(3, 5), Fraction(2, 5)]
    assert out.expected_value(e2().valuation) == 1


def test_e5_deterministic_eom_takes_the_big_agent():
    assert deterministic_eom(e5()) == {1}


def test_small_greedy_eom_example():
    inst = additive([6, 4, 2], [1, 1, 1], 2)
    assert greedy_eom(HALF, inst) == frozenset()
    out = random_eom(HALF, inst)
    assert out.expected_value(inst.valuation) == 3


def test_greedy_om_keeps_non_contiguous_positions():
    # order a3, a1, a4, a2; a3 fails (4 > 7/2) because opt(A - a3) = 7, a1 passes (5 <= 10/2)
    inst = additive([1, 2, 4, 4], [1, 3, 1, 4], 9)
    assert greedy_order(inst).order == (3, 1, 4, 2)
    assert greedy_om(HALF, inst) == {1}
    v, costs, B = as_reference(inst)
    assert ref.greedy_om(v, costs, B, HALF, ref.om_reference(v, costs, B)) == {1}


def test_zero_marginal_stop():
    t = apply_zero_marginal_stop(greedy_order(e3()))
    assert t.order == (1, 2)
    assert greedy_tm(HALF, e3(), matching_stop=True) <= {1, 2}


def test_det_large_rejects_overspending_parameters():
    with pytest.raises(InvalidArgument):
        deterministic_large(Fraction(3, 4), Fraction(1, 2), e1())
    with pytest.raises(InvalidArgument):
        MechanismSpec("det_large", alpha=Fraction(3, 4), gamma=Fraction(1, 2))


def test_greedy_eom_needs_an_exact_optimum():
    with pytest.raises(InvalidArgument):
        greedy_eom(HALF, e1(), GreedyOracle())


def test_empty_feasible_set_gives_empty_winners():
    inst = additive([3, 4], [5, 6], 1)
    for kind in KINDS:
        out = run_mechanism(MechanismSpec(kind), inst)
        assert all(o.winners == frozenset() for _, o in out.branches)


def test_spec_defaults_and_round_trip():
    s = MechanismSpec("det_large")
    assert (s.alpha, s.gamma, s.r) == (LARGE_MARKET_ALPHA, LARGE_MARKET_GAMMA, 1)
    assert LARGE_MARKET_ALPHA == 1 / (1 + LARGE_MARKET_GAMMA)
    assert MechanismSpec("random_om", oracle="greedy3").r == Fraction(791, 500)
    for kind in KINDS:
        spec = MechanismSpec(kind)
        assert MechanismSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(InvalidArgument):
        MechanismSpec("greedy_tm", alpha=HALF)
    with pytest.raises(InvalidArgument):
        MechanismSpec("nope")
    with pytest.raises(InvalidArgument):
        MechanismSpec("greedy_tm", gamma=Fraction(3, 2))


def test_branch_probabilities_sum_to_one():
    for kind in KINDS:
        assert sum(b.probability for b in branches(MechanismSpec(kind))) == 1
    assert [b.probability for b in branches(MechanismSpec("random_om"))] == [Fraction(2, 5), Fraction(3, 5)]


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("stop", [False, True])
def test_allocations_match_the_reference(family, stop):
    for inst in corpus(family, 40, seed=99):
        v, costs, B = as_reference(inst)
        for gamma in (HALF, Fraction(1, 3), Fraction(1)):
            assert greedy_tm(gamma, inst, stop) == ref.greedy_tm(v, costs, B, gamma, stop)
        for alpha in (HALF, Fraction(2, 3)):
            assert greedy_eom(alpha, inst, matching_stop=stop) == ref.greedy_eom(v, costs, B, alpha, stop)
            assert greedy_om(alpha, inst, matching_stop=stop) == ref.greedy_om(
                v, costs, B, alpha, ref.om_reference(v, costs, B), stop)
        if not stop:
            assert deterministic_eom(inst) == ref.det_eom(v, costs, B)
        got = deterministic_large(LARGE_MARKET_ALPHA, LARGE_MARKET_GAMMA, inst, "exhaustive", stop)
        assert got == (ref.greedy_om(v, costs, B, LARGE_MARKET_ALPHA, ref.om_reference(v, costs, B), stop)
                       & ref.greedy_tm(v, costs, B, LARGE_MARKET_GAMMA, stop))


def test_modified_reference_with_an_exact_oracle_is_greedy_eom():
    for inst in corpus("coverage", 20, seed=4):
        assert greedy_om_modified(HALF, inst, "exhaustive") == greedy_eom(HALF, inst)


def test_randomized_wrappers_put_best_single_in_the_second_branch():
    inst = e5()
    for out in (random_tm(HALF, inst), random_eom(HALF, inst), random_om(HALF, inst),
                random_om_modified(HALF, inst, "exhaustive")):
        assert out.branches[1][1].winners == {1}


def test_single_agent_greedy_om_edge():
    # Oracle(A - a) = 0, so only a value-0 agent can pass; it is bought only when free
    assert greedy_om(1, additive([0], [0], 1)) == {1}
    assert greedy_om(1, additive([0], [1], 1)) == frozenset()
    assert greedy_om(1, additive([2], [1], 1)) == frozenset()


def test_zero_marginal_steps_are_bought_only_for_free():
    inst = additive([4, 0, 0], [1, 0, 1], 3)
    assert greedy_order(inst).order == (1, 2, 3)
    assert greedy_tm(HALF, inst) == {1, 2}
    assert greedy_eom(1, inst) == {1, 2}
    assert greedy_om(1, inst) == {2}
