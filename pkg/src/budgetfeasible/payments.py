"""Threshold payments by breakpoint sweeps over a winner's own bid."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping

from .core import (Rational, DeterministicOutcome, Instance, InvalidArgument, MonotonicityViolation,
                   RandomizedOutcome, as_rational)
from .mechanisms import Branch, MechanismSpec, branches
from .sweep import sweep

Allocation = Callable[[Instance], frozenset]


@dataclass(frozen=True)
class ThresholdResult:
    """Critical bid of one winner.

    ``attained`` tells whether the agent still wins when bidding exactly
    ``value``; ``reruns`` counts mechanism runs spent by the sweep.
    """

    value: Rational
    attained: bool
    reruns: int


@dataclass(frozen=True)
class PaymentVector:
    payments: Mapping[int, Rational] = field(default_factory=dict)

    def __getitem__(self, i: int) -> Rational:
        return self.payments.get(i, Rational(0))

    @property
    def total(self) -> Rational:
        return sum(self.payments.values(), Rational(0))


def win_predicate(allocate: Allocation, instance: Instance, i: int) -> Callable:
    return lambda bid: i in allocate(instance.with_cost(i, bid))


def win_pieces(allocate: Allocation, instance: Instance, i: int, start) -> Iterator[tuple]:
    """``(x, wins at x, wins just above x)`` for the pieces of i's bid axis from ``start``."""
    return sweep(win_predicate(allocate, instance, i), start)


def threshold_sweep(allocate: Allocation, instance: Instance, i: int) -> ThresholdResult:
    """sup{b : i wins bidding b} walking breakpoints upward from i's declared cost."""
    runs = 0
    for x, at, above in win_pieces(allocate, instance, i, instance.cost(i)):
        runs += 2
        if not at:
            if runs == 2:
                raise InvalidArgument(f"agent {i} does not win at its declared cost")
            return ThresholdResult(x, False, runs)
        if not above:
            return ThresholdResult(x, True, runs)
    raise MonotonicityViolation(f"agent {i} wins at arbitrarily high bids", {"agent": i})


def _branch_for(spec: MechanismSpec, instance: Instance, i: int, branch) -> Branch:
    bs = branches(spec)
    if branch is not None:
        if isinstance(branch, int):
            return bs[branch]
        for b in bs:
            if b.name == branch:
                return b
        raise InvalidArgument(f"{spec.kind} has no branch {branch!r}")
    for b in bs:
        if i in b.allocate(instance):
            return b
    raise InvalidArgument(f"agent {i} wins in no branch of {spec.kind}")


def branch_threshold(b: Branch, instance: Instance, i: int) -> ThresholdResult:
    """Threshold of ``i`` in one branch; intersections pay the smallest component threshold."""
    if not b.components:
        return threshold_sweep(b.allocate, instance, i)
    parts = [threshold_sweep(alloc, instance, i) for alloc in b.components]
    low = min(p.value for p in parts)
    return ThresholdResult(low, all(p.attained for p in parts if p.value == low),
                           sum(p.reruns for p in parts))


def threshold_payment(spec: MechanismSpec, instance: Instance, i: int, branch=None) -> Rational:
    """Payment to winner ``i``.

    ``branch`` (index or name) selects a branch of a randomized mechanism;
    by default the first branch in which ``i`` wins is used.
    """
    b = _branch_for(spec, instance, i, branch)
    if i not in b.allocate(instance):
        raise InvalidArgument(f"agent {i} is not a winner of branch {b.name}")
    return branch_threshold(b, instance, i).value


def payments_for_outcome(spec: MechanismSpec, instance: Instance,
                         cache: dict | None = None) -> RandomizedOutcome:
    """The exact mixture with threshold payments filled in for every branch.

    ``cache`` (keyed by branch key and agent) lets several specs on the same
    instance share the sweeps of branches they have in common.
    """
    out = []
    for b in branches(spec):
        winners = b.allocate(instance)
        pay = {}
        for i in sorted(winners):
            if cache is None or not b.key:
                pay[i] = branch_threshold(b, instance, i).value
                continue
            hit = cache.get((b.key, i))
            if hit is None:
                hit = cache[(b.key, i)] = branch_threshold(b, instance, i)
            pay[i] = hit.value
        out.append((b.probability, DeterministicOutcome(winners, pay)))
    return RandomizedOutcome(tuple(out))


def payment_vectors(spec: MechanismSpec, instance: Instance) -> list[PaymentVector]:
    return [PaymentVector(dict(o.payments)) for _, o in payments_for_outcome(spec, instance).branches]


def run_with_payments(spec: MechanismSpec, instance: Instance) -> RandomizedOutcome:
    return payments_for_outcome(spec, instance)


def bisection_threshold(spec: MechanismSpec, instance: Instance, i: int,
                        tolerance=Rational(1, 2 ** 30), branch=None) -> Rational:
    """Threshold located by bisection on [c_i, B + 1] with concrete bids only.

    Intersection mechanisms bisect each component and take the minimum, as
    their payment rule does.
    """
    tolerance = as_rational(tolerance, "tolerance")
    if tolerance <= 0:
        raise InvalidArgument("tolerance must be positive")
    b = _branch_for(spec, instance, i, branch)
    allocs = b.components or (b.allocate,)
    return min(bisect_allocation(a, instance, i, tolerance) for a in allocs)


def bisect_allocation(allocate: Allocation, instance: Instance, i: int, tolerance: Rational) -> Rational:
    wins = win_predicate(allocate, instance, i)
    lo, hi = instance.cost(i), instance.budget + 1
    if not wins(lo):
        raise InvalidArgument(f"agent {i} does not win at its declared cost")
    if wins(hi):
        raise MonotonicityViolation(f"agent {i} still wins bidding above the budget",
                                    {"agent": i, "bid": hi})
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if wins(mid):
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2
