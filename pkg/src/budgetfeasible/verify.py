"""Brute-force property checks on small instances.

Every check returns a :class:`CheckResult`; a failing result always carries
a witness with the concrete agent, bids, sets or numbers involved.
"""
from __future__ import annotations

import hashlib
import json
import numbers
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Callable

from .core import Rational, ContractViolation, Instance, feasible_filter, format_rational, from_mask
from .mechanisms import Branch, MechanismSpec, branches
from .oracles import exhaustive_opt
from .payments import win_pieces
from .valuations import MatchingValuation, Valuation, extract_assignment

Allocation = Callable[[Instance], frozenset]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "witness": _jsonable(self.witness)}


@dataclass(frozen=True)
class VerificationReport:
    digest: str
    spec: MechanismSpec | None
    checks: tuple[CheckResult, ...]
    empirical_ratio: Rational | float | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict[str, Any]:
        return {
            "instance": self.digest,
            "mechanism": self.spec.to_dict() if self.spec else None,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "empirical_ratio": _jsonable(self.empirical_ratio),
        }


def _jsonable(x):
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, numbers.Rational):
        return format_rational(x)
    if isinstance(x, float):
        return "inf" if math.isinf(x) else repr(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (frozenset, set)):
        return sorted(_jsonable(v) for v in x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return str(x)


def instance_digest(instance: Instance) -> str:
    from .experiments import instance_to_dict

    blob = json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class BidProfile:
    """Win/lose pattern of one agent over its whole bid axis [0, inf)."""

    def __init__(self, pieces: list[tuple]):
        self.pieces = pieces

    @classmethod
    def of(cls, allocate: Allocation, instance: Instance, i: int) -> "BidProfile":
        return cls(list(win_pieces(allocate, instance, i, Rational(0))))

    @property
    def breakpoints(self) -> list[Rational]:
        return [x for x, _, _ in self.pieces]

    def _locate(self, b) -> int:
        k = 0
        while k + 1 < len(self.pieces) and self.pieces[k + 1][0] <= b:
            k += 1
        return k

    def wins(self, b) -> bool:
        x, at, above = self.pieces[self._locate(b)]
        return at if b == x else above

    def threshold_from(self, b) -> Rational | None:
        """Upper end of the winning stretch that contains ``b`` (None if unbounded)."""
        k = self._locate(b)
        x, at, above = self.pieces[k]
        if b == x and not above:
            return x
        for x, at, above in self.pieces[k + 1:]:
            if not at or not above:
                return x
        return None

    def grid(self) -> list[Rational]:
        """Breakpoints, midpoints between them and one bid past the last."""
        xs = self.breakpoints
        out = []
        for a, b in zip(xs, xs[1:]):
            out += [a, (a + b) / 2]
        out += [xs[-1], xs[-1] + 1]
        return out

    def first_reversal(self):
        """(losing bid, higher winning bid) if the pattern is not downward closed."""
        lost_at = None
        for x, at, above in self.pieces:
            for bid, w in ((x, at), (x + _probe_gap(self, x), above)):
                if not w and lost_at is None:
                    lost_at = bid
                elif w and lost_at is not None:
                    return lost_at, bid
        return None


def _probe_gap(profile: BidProfile, x) -> Rational:
    # a concrete bid strictly inside the open piece right after x
    xs = profile.breakpoints
    k = xs.index(x)
    return (xs[k + 1] - x) / 2 if k + 1 < len(xs) else Rational(1)


class _Profiles:
    """Per-instance cache of bid profiles shared by branches with equal keys."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.memo: dict = {}

    def get(self, key, allocate: Allocation, i: int) -> BidProfile:
        if not key:
            return BidProfile.of(allocate, self.instance, i)
        k = (key, i)
        if k not in self.memo:
            self.memo[k] = BidProfile.of(allocate, self.instance, i)
        return self.memo[k]


@dataclass
class _Rule:
    # one deterministic rule under test, possibly an intersection of components
    name: str
    allocate: Allocation
    components: list[tuple[tuple, Allocation]]
    key: tuple = ()


def _rules(spec) -> list[_Rule]:
    if isinstance(spec, MechanismSpec):
        out = []
        for b in branches(spec):
            if b.components:
                comps = [((b.key, n), a) for n, a in enumerate(b.components)]
                out.append(_Rule(b.name, b.allocate, comps, b.key))
            else:
                out.append(_Rule(b.name, b.allocate, [(b.key, b.allocate)], b.key))
        return out
    # a bare allocation callable (used to plant failures)
    return [_Rule(getattr(spec, "__name__", "allocation"), spec, [((), spec)])]


class _AgentView:
    """Win predicate and threshold payment of one agent under one rule."""

    def __init__(self, profiles: list[BidProfile]):
        self.profiles = profiles

    def wins(self, b) -> bool:
        return all(p.wins(b) for p in self.profiles)

    def payment(self, b):
        # None stands for an unbounded payment
        ts = [p.threshold_from(b) for p in self.profiles]
        if any(t is None for t in ts):
            return None
        return min(ts)

    def grid(self) -> list[Rational]:
        return sorted({b for p in self.profiles for b in p.grid()})


def _views(spec, instance: Instance, cache: _Profiles | None):
    cache = cache or _Profiles(instance)
    for rule in _rules(spec):
        for i in instance.ids:
            yield rule, i, _AgentView([cache.get(k, a, i) for k, a in rule.components])


def check_monotone(spec, instance: Instance, _cache: _Profiles | None = None) -> CheckResult:
    """Every agent's win set over its own bid is downward closed, per branch."""
    for rule, i, view in _views(spec, instance, _cache):
        for prof in view.profiles:
            rev = prof.first_reversal()
            if rev:
                lose, win = rev
                return CheckResult("monotone", False, {
                    "branch": rule.name, "agent": i, "losing_bid": lose, "winning_bid": win,
                    "others": {j: instance.cost(j) for j in instance.ids if j != i}})
    return CheckResult("monotone", True)


def check_truthful(spec, instance: Instance, _cache: _Profiles | None = None) -> CheckResult:
    """No agent gains by misreporting on the breakpoint grid, per branch."""
    for rule, i, view in _views(spec, instance, _cache):
        c = instance.cost(i)

        def utility(bid):
            if not view.wins(bid):
                return Rational(0)
            p = view.payment(bid)
            return None if p is None else p - c

        truth = utility(c)
        for b in view.grid():
            u = utility(b)
            if u is None or (truth is not None and u > truth):
                return CheckResult("truthful", False, {
                    "branch": rule.name, "agent": i, "true_cost": c, "deviation": b,
                    "truthful_utility": truth, "deviation_utility": "unbounded" if u is None else u})
    return CheckResult("truthful", True)


def _branch_payments(spec, instance: Instance, cache: _Profiles | None):
    cache = cache or _Profiles(instance)
    for rule in _rules(spec):
        winners = rule.allocate(instance)
        pay = {}
        for i in sorted(winners):
            view = _AgentView([cache.get(k, a, i) for k, a in rule.components])
            pay[i] = view.payment(instance.cost(i))
        yield rule, winners, pay


def check_ir(spec, instance: Instance, _cache: _Profiles | None = None) -> CheckResult:
    """Winners are paid at least their cost and were affordable; losers get nothing."""
    affordable = feasible_filter(instance)
    for rule, winners, pay in _branch_payments(spec, instance, _cache):
        if set(pay) - winners:
            return CheckResult("ir", False, {"branch": rule.name, "paid_losers": set(pay) - winners})
        for i in sorted(winners):
            c = instance.cost(i)
            if i not in affordable:
                return CheckResult("ir", False, {"branch": rule.name, "agent": i,
                                                 "cost": c, "budget": instance.budget})
            if pay[i] is None or pay[i] < c:
                return CheckResult("ir", False, {"branch": rule.name, "agent": i, "cost": c,
                                                 "payment": "unbounded" if pay[i] is None else pay[i]})
    return CheckResult("ir", True)


def check_budget_feasible(spec, instance: Instance, _cache: _Profiles | None = None) -> CheckResult:
    """Total payment of every branch is at most B."""
    for rule, winners, pay in _branch_payments(spec, instance, _cache):
        if any(p is None for p in pay.values()):
            return CheckResult("budget_feasible", False, {"branch": rule.name, "payments": pay})
        total = sum(pay.values(), Rational(0))
        if total > instance.budget:
            return CheckResult("budget_feasible", False, {
                "branch": rule.name, "winners": winners, "payments": pay,
                "total": total, "budget": instance.budget})
    return CheckResult("budget_feasible", True)


def empirical_ratio(spec: MechanismSpec, instance: Instance):
    """opt(A, B) / E[v(outcome)]; ``math.inf`` when the mechanism gets nothing."""
    _, opt = exhaustive_opt(instance)
    if opt == 0:
        return Rational(1)
    expected = sum((b.probability * instance.value(b.allocate(instance)) for b in branches(spec)),
                   Rational(0))
    return math.inf if expected == 0 else opt / expected


def check_submodular(valuation: Valuation, agents=None) -> CheckResult:
    """Monotonicity and v(S) + v(T) >= v(S | T) + v(S & T) over all pairs."""
    ids = sorted(range(1, valuation.n + 1) if agents is None else agents)
    masks = [0]
    for i in ids:
        masks += [m | 1 << (i - 1) for m in masks]
    v = valuation.value_of_mask
    for m in masks:
        for i in ids:
            bit = 1 << (i - 1)
            if not m & bit and v(m | bit) < v(m):
                return CheckResult("submodular", False, {
                    "kind": "monotonicity", "S": from_mask(m), "agent": i,
                    "v(S)": v(m), "v(S+i)": v(m | bit)})
    for s, t in product(masks, repeat=2):
        if s < t and v(s) + v(t) < v(s | t) + v(s & t):
            return CheckResult("submodular", False, {
                "kind": "submodularity", "S": from_mask(s), "T": from_mask(t),
                "v(S)+v(T)": v(s) + v(t), "v(S|T)+v(S&T)": v(s | t) + v(s & t)})
    return CheckResult("submodular", True)


def check_assignment(spec, instance: Instance) -> CheckResult:
    """Every branch's winners can be assigned distinct tasks at full value."""
    val = instance.valuation
    if not isinstance(val, MatchingValuation):
        return CheckResult("assignment", False, {"error": f"{val.kind} valuation has no tasks"})
    for rule in _rules(spec):
        winners = rule.allocate(instance)
        try:
            extract_assignment(val, winners)
        except ContractViolation as exc:
            return CheckResult("assignment", False, {
                "branch": rule.name, "winners": winners, "value": val.value(winners), "error": str(exc)})
    return CheckResult("assignment", True)


def verify(spec, instance: Instance, cache: _Profiles | None = None) -> VerificationReport:
    """Monotonicity, budget feasibility, truthfulness and IR, plus the empirical ratio."""
    cache = cache or _Profiles(instance)
    checks = (
        check_monotone(spec, instance, cache),
        check_budget_feasible(spec, instance, cache),
        check_truthful(spec, instance, cache),
        check_ir(spec, instance, cache),
    )
    ratio = empirical_ratio(spec, instance) if isinstance(spec, MechanismSpec) else None
    return VerificationReport(instance_digest(instance), spec if isinstance(spec, MechanismSpec) else None,
                              checks, ratio)


def profile_cache(instance: Instance) -> _Profiles:
    """A cache to pass to several checks or specs on the same instance."""
    return _Profiles(instance)
