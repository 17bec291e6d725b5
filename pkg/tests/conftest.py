import sys
from fractions import Fraction
from pathlib import Path

import pytest

from budgetfeasible import (AdditiveValuation, CoverageValuation, GeneratorConfig, Instance,
                            TaskValuedMatching, gen_instance)

sys.path.insert(0, str(Path(__file__).parent))

GOLDEN = Path(__file__).parent / "golden"
FAMILIES = ("additive", "coverage", "matching", "task_matching")


def additive(values, costs, budget):
    return Instance.from_costs(costs, budget, AdditiveValuation(values))


def e1():
    return additive([3, 3, 3, 3], [1, 1, 1, 1], 2)


def e2():
    eps = Fraction(1, 10)
    return additive([1] + [1 - eps] * 4, [0, 1, 1, 1, 1], 4)


def e3():
    val = CoverageValuation({"x": 1, "y": 1, "z": 1}, {1: ["x", "y"], 2: ["y", "z"], 3: ["z"]})
    return Instance.from_costs([1, 1, 1], 2, val)


def e4():
    val = TaskValuedMatching({"t1": 5, "t2": 3}, [(1, "t1"), (1, "t2"), (2, "t1")], 2)
    return Instance.from_costs([1, 1], 2, val)


def e5():
    return additive([10, 1, 1], [1, 1, 1], 2)


def corpus(family, size, seed=2026, n_max=8):
    """Seeded instances with n cycling through 2..n_max."""
    span = n_max - 1
    return [gen_instance(GeneratorConfig(family, n=2 + t % span, seed=seed), t) for t in range(size)]


def sample(family, seed, n_max=8):
    """One seeded instance whose size also follows the seed."""
    return gen_instance(GeneratorConfig(family, n=2 + seed % (n_max - 1), seed=seed), 0)


def as_reference(instance):
    """(v, costs, budget) in plain Fractions for tests/reference.py."""
    val = instance.valuation
    v = lambda s: Fraction(str(val.value(s)))
    costs = {a.id: Fraction(str(a.cost)) for a in instance.agents}
    return v, costs, Fraction(str(instance.budget))


@pytest.fixture
def E1():
    return e1()


@pytest.fixture
def E2():
    return e2()


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[k])
