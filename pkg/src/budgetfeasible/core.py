"""Domain types, exact arithmetic helpers and the bang-per-buck ordering."""
from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from gmpy2 import mpq

from .sweep import cmp, sign

if TYPE_CHECKING:
    from .valuations import Valuation

# exact rationals; gmpy2 is a drop-in for fractions.Fraction at a fraction of the cost
Rational = mpq


class MechanismError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgument(MechanismError, ValueError):
    pass


class EmptyInstanceError(MechanismError):
    pass


class DegenerateInstanceError(MechanismError):
    pass


class SizeLimitError(MechanismError):
    pass


class ContractViolation(MechanismError):
    pass


class MonotonicityViolation(MechanismError):
    def __init__(self, message: str, witness: Mapping | None = None):
        super().__init__(message)
        self.witness = dict(witness or {})


def as_rational(x, what: str = "value") -> Rational:
    """Coerce ints, Fractions and ``"p/q"`` strings; floats are rejected."""
    if isinstance(x, bool):
        raise InvalidArgument(f"{what}: booleans are not rationals")
    if isinstance(x, Rational):
        return x
    if isinstance(x, numbers.Rational):
        return Rational(x.numerator, x.denominator)
    if isinstance(x, str):
        try:
            return Rational(x.strip())
        except (ValueError, ZeroDivisionError):
            raise InvalidArgument(f"{what}: malformed rational {x!r}") from None
    raise InvalidArgument(f"{what}: expected int, rational or 'p/q' string, got {type(x).__name__}")


def format_rational(q) -> str:
    q = Rational(q)
    return f"{q.numerator}/{q.denominator}"


def to_mask(ids: Iterable[int]) -> int:
    mask = 0
    for i in ids:
        mask |= 1 << (i - 1)
    return mask


def from_mask(mask: int) -> frozenset[int]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


@dataclass(frozen=True)
class Agent:
    id: int
    cost: Rational


@dataclass(frozen=True, eq=False)
class Instance:
    """Sellers with (declared) costs, a budget and a valuation oracle."""

    agents: tuple[Agent, ...]
    budget: Rational
    valuation: "Valuation"

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "budget", as_rational(self.budget, "budget"))
        if self.budget <= 0:
            raise InvalidArgument("budget must be positive")
        seen = [a.id for a in self.agents]
        if seen != list(range(1, len(seen) + 1)):
            raise InvalidArgument(f"agent ids must be 1..n in order, got {seen}")
        for a in self.agents:
            c = as_rational(a.cost, f"cost of agent {a.id}")
            if c < 0:
                raise InvalidArgument(f"cost of agent {a.id} is negative")
        if self.valuation.n != len(self.agents):
            raise InvalidArgument(
                f"valuation is defined on {self.valuation.n} agents, instance has {len(self.agents)}"
            )

    @classmethod
    def from_costs(cls, costs: Sequence, budget, valuation: "Valuation") -> "Instance":
        agents = tuple(Agent(i, as_rational(c, f"cost of agent {i}")) for i, c in enumerate(costs, 1))
        return cls(agents, budget, valuation)

    @cached_property
    def costs(self) -> tuple:
        return tuple(a.cost for a in self.agents)

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def ids(self) -> range:
        return range(1, len(self.agents) + 1)

    def cost(self, i: int):
        return self.agents[i - 1].cost

    def value(self, S: Iterable[int]) -> Rational:
        return self.valuation.value(S)

    def with_cost(self, i: int, bid) -> "Instance":
        """Copy with agent ``i`` bidding ``bid``; unchecked, so bids may be symbolic."""
        agents = list(self.agents)
        agents[i - 1] = Agent(i, bid)
        new = object.__new__(Instance)
        object.__setattr__(new, "agents", tuple(agents))
        object.__setattr__(new, "budget", self.budget)
        object.__setattr__(new, "valuation", self.valuation)
        return new

    def with_costs(self, costs: Sequence) -> "Instance":
        new = object.__new__(Instance)
        object.__setattr__(new, "agents", tuple(Agent(i, c) for i, c in enumerate(costs, 1)))
        object.__setattr__(new, "budget", self.budget)
        object.__setattr__(new, "valuation", self.valuation)
        return new


@dataclass(frozen=True)
class GreedyTrace:
    order: tuple[int, ...]
    prefix_values: tuple[Rational, ...]
    marginals: tuple[Rational, ...]

    def __len__(self) -> int:
        return len(self.order)

    def prefix(self, k: int) -> frozenset[int]:
        """S_k, the first ``k`` agents of the order."""
        return frozenset(self.order[:k])

    def truncated(self, k: int) -> "GreedyTrace":
        return GreedyTrace(self.order[:k], self.prefix_values[: k + 1], self.marginals[:k])


@dataclass(frozen=True)
class DeterministicOutcome:
    winners: frozenset[int]
    payments: Mapping[int, Rational] = field(default_factory=dict)

    @property
    def total_payment(self) -> Rational:
        return sum(self.payments.values(), Rational(0))


@dataclass(frozen=True)
class RandomizedOutcome:
    branches: tuple[tuple[Rational, DeterministicOutcome], ...]

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if any(p <= 0 for p, _ in self.branches):
            raise InvalidArgument("branch probabilities must be positive")
        if sum((p for p, _ in self.branches), Rational(0)) != 1:
            raise InvalidArgument("branch probabilities must sum to 1")

    @classmethod
    def certain(cls, winners: Iterable[int]) -> "RandomizedOutcome":
        return cls(((Rational(1), DeterministicOutcome(frozenset(winners))),))

    @property
    def is_deterministic(self) -> bool:
        return len(self.branches) == 1

    def expected_value(self, valuation: "Valuation") -> Rational:
        return sum((p * valuation.value(o.winners) for p, o in self.branches), Rational(0))


def marginal(valuation: "Valuation", S: Iterable[int], i: int) -> Rational:
    """v(S + i) - v(S)."""
    S = frozenset(S)
    if i in S:
        raise InvalidArgument(f"agent {i} is already in the set")
    return valuation.value(S | {i}) - valuation.value(S)


def _rank(m, c) -> int:
    # 0: infinite bang-per-buck (free, useful); 1: ordinary; 2: useless
    if not m:
        return 2
    return 0 if sign(c) == 0 else 1


def prefers(m_a, c_a, a: int, m_b, c_b, b: int) -> bool:
    """True when agent ``a`` goes strictly before ``b`` in bang-per-buck order."""
    ra, rb = _rank(m_a, c_a), _rank(m_b, c_b)
    if ra != rb:
        return ra < rb
    if ra == 1:
        s = cmp(m_a * c_b, m_b * c_a)
        if s:
            return s > 0
    return a < b


def greedy_order(instance: Instance, costs: Sequence | None = None,
                 agents: Iterable[int] | None = None) -> GreedyTrace:
    """Order ``agents`` by decreasing marginal bang-per-buck.

    Ratios are compared by cross-multiplication.  Zero-cost agents with
    positive marginal come first, zero-marginal agents last, remaining ties
    go to the smaller id.
    """
    costs = instance.costs if costs is None else tuple(costs)
    if len(costs) != instance.n:
        raise InvalidArgument("cost vector length does not match the instance")
    val = instance.valuation.value_of_mask
    remaining = sorted(instance.ids if agents is None else agents)
    mask = 0
    v_s = val(0)
    order, prefix, margs = [], [v_s], []
    while remaining:
        best = best_m = best_c = None
        for j in remaining:
            m = val(mask | 1 << (j - 1)) - v_s
            c = costs[j - 1]
            if best is None or prefers(m, c, j, best_m, best_c, best):
                best, best_m, best_c = j, m, c
        remaining.remove(best)
        mask |= 1 << (best - 1)
        v_s += best_m
        order.append(best)
        margs.append(best_m)
        prefix.append(v_s)
    return GreedyTrace(tuple(order), tuple(prefix), tuple(margs))


def feasible_filter(instance: Instance) -> frozenset[int]:
    """Agents whose cost does not exceed the budget."""
    B = instance.budget
    return frozenset(a.id for a in instance.agents if sign(a.cost - B) <= 0)


def best_single(instance: Instance, feasible: Iterable[int] | None = None) -> int:
    """Feasible agent of highest stand-alone value (smallest id on ties)."""
    A = sorted(feasible_filter(instance) if feasible is None else feasible)
    if not A:
        raise EmptyInstanceError("no agent can be afforded within the budget")
    val = instance.valuation.value_of_mask
    best, best_v = A[0], val(1 << (A[0] - 1))
    for i in A[1:]:
        v = val(1 << (i - 1))
        if v > best_v:
            best, best_v = i, v
    return best


def large_market_theta(instance: Instance) -> Rational:
    """max_i v({i}) / opt(A, B) over affordable agents."""
    from .oracles import exhaustive_opt

    _, opt = exhaustive_opt(instance)
    if opt == 0:
        raise DegenerateInstanceError("optimum is zero, theta undefined")
    A = feasible_filter(instance)
    return max(instance.valuation.value({i}) for i in A) / opt
