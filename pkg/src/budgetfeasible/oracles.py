"""Exact and approximate solvers for max v(S) subject to c(S) <= B."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from .core import (Rational, Instance, InvalidArgument, SizeLimitError, as_rational, feasible_filter,
                   from_mask, prefers)
from .sweep import is_symbolic, sign, sweep

EXHAUSTIVE_LIMIT = 20


@dataclass(frozen=True)
class OracleRating:
    """Claimed factor r with Oracle <= opt <= r * Oracle."""

    r: Rational

    def __post_init__(self):
        object.__setattr__(self, "r", as_rational(self.r, "oracle rating"))
        if self.r < 1:
            raise InvalidArgument("an oracle rating is at least 1")


class _SubsetCosts:
    # lazily memoized c(S) for one cost vector
    __slots__ = ("costs", "memo")

    def __init__(self, costs):
        self.costs = costs
        self.memo = {0: 0}

    def __call__(self, mask: int):
        memo = self.memo
        c = memo.get(mask)
        if c is None:
            low = mask & -mask
            c = memo[mask] = self(mask ^ low) + self.costs[low.bit_length() - 1]
        return c


class ExhaustiveOracle:
    """opt(A, B) by enumerating every subset (ties: smallest sorted id tuple)."""

    name = "exhaustive"
    exact = True
    rating = OracleRating(Rational(1))

    def __init__(self, limit: int = EXHAUSTIVE_LIMIT):
        self.limit = limit

    def _ranked(self, instance: Instance):
        if instance.n > self.limit:
            raise SizeLimitError(f"{instance.n} agents exceed the exhaustive limit of {self.limit}")
        return instance.valuation.ranked_subsets()

    def solve(self, instance: Instance, exclude: Iterable[int] = ()) -> tuple[frozenset[int], Rational]:
        ranked = self._ranked(instance)
        banned = 0
        for i in exclude:
            banned |= 1 << (i - 1)
        cost = _SubsetCosts(instance.costs)
        B = instance.budget
        for v, mask in ranked:
            if mask & banned:
                continue
            if sign(cost(mask) - B) <= 0:
                return from_mask(mask), v
        raise AssertionError("the empty set is always affordable")

    def value(self, instance: Instance, exclude: Iterable[int] = ()) -> Rational:
        return self.solve(instance, exclude)[1]

    def values_excluding(self, instance: Instance, ids: Iterable[int]) -> dict[int, Rational]:
        """opt(A - {k}, B) for every k in ``ids`` in a single scan."""
        pending = {k: 1 << (k - 1) for k in ids}
        out: dict[int, Rational] = {}
        if not pending:
            return out
        cost = _SubsetCosts(instance.costs)
        B = instance.budget
        for v, mask in self._ranked(instance):
            hits = [k for k, bit in pending.items() if not mask & bit]
            if not hits:
                continue
            if sign(cost(mask) - B) <= 0:
                for k in hits:
                    out[k] = v
                    del pending[k]
                if not pending:
                    break
        return out


class GreedyOracle:
    """Partial enumeration plus bang-per-buck greedy completion.

    Every affordable seed of at most ``seed_size`` agents is extended by
    repeatedly taking the best remaining marginal bang-per-buck item that
    still fits the budget (items that do not fit are dropped).  With seed
    size 3 the result is at least (1 - 1/e) of the optimum.
    """

    name = "greedy3"
    exact = False

    def __init__(self, seed_size: int = 3):
        if seed_size < 1:
            raise InvalidArgument("seed size must be at least 1")
        self.seed_size = seed_size
        # 791/500 >= e/(e-1); only claimed for the full seed size
        self.rating = OracleRating(Rational(791, 500)) if seed_size >= 3 else None

    def solve(self, instance: Instance, exclude: Iterable[int] = ()) -> tuple[frozenset[int], Rational]:
        excluded = set(exclude)
        A = sorted(feasible_filter(instance) - excluded)
        costs = instance.costs
        B = instance.budget
        val = instance.valuation.value_of_mask
        best_mask, best_v = 0, val(0)
        for size in range(min(self.seed_size, len(A)) + 1):
            for seed in combinations(A, size):
                spent = 0
                for i in seed:
                    spent = spent + costs[i - 1]
                if sign(spent - B) > 0:
                    continue
                mask = 0
                for i in seed:
                    mask |= 1 << (i - 1)
                mask, v = _complete(val, costs, B, A, mask, spent)
                if v > best_v:
                    best_mask, best_v = mask, v
        return from_mask(best_mask), best_v

    def value(self, instance: Instance, exclude: Iterable[int] = ()) -> Rational:
        return self.solve(instance, exclude)[1]

    def values_excluding(self, instance: Instance, ids: Iterable[int]) -> dict[int, Rational]:
        return {k: self.value(instance, (k,)) for k in ids}


def _complete(val, costs, B, A, mask, spent):
    v_s = val(mask)
    cand = [j for j in A if not mask >> (j - 1) & 1]
    while cand:
        best = best_m = best_c = None
        for j in cand:
            m = val(mask | 1 << (j - 1)) - v_s
            c = costs[j - 1]
            if best is None or prefers(m, c, j, best_m, best_c, best):
                best, best_m, best_c = j, m, c
        if not best_m:
            break
        cand.remove(best)
        total = spent + best_c
        if sign(total - B) <= 0:
            mask |= 1 << (best - 1)
            spent = total
            v_s += best_m
    return mask, v_s


ORACLES = {"exhaustive": ExhaustiveOracle, "greedy3": GreedyOracle}


def get_oracle(oracle) -> ExhaustiveOracle | GreedyOracle:
    if isinstance(oracle, str):
        try:
            return ORACLES[oracle]()
        except KeyError:
            raise InvalidArgument(f"unknown oracle {oracle!r}") from None
    return oracle


def exhaustive_opt(instance: Instance, exclude: Iterable[int] = (),
                   limit: int = EXHAUSTIVE_LIMIT) -> tuple[frozenset[int], Rational]:
    return ExhaustiveOracle(limit).solve(instance, exclude)


def sviridenko_greedy(instance: Instance, exclude: Iterable[int] = (),
                      seed_size: int = 3) -> tuple[frozenset[int], Rational]:
    return GreedyOracle(seed_size).solve(instance, exclude)


_BID_CACHE_LIMIT = 4096


def _bid_pieces(instance: Instance, oracle, i: int) -> list:
    """Pieces of b -> Oracle(A, (b, c_-i)) over [0, inf), cached per concrete c_-i.

    Only built while i's own bid is being swept (so c_-i stays fixed across
    many runs); returns None when a plain sweep from c_i is the better deal.
    """
    others = instance.costs[: i - 1] + instance.costs[i:]
    if any(is_symbolic(c) for c in others):
        return None
    cache = oracle.__dict__.setdefault("_bid_cache", {})
    key = (i, instance.budget, others)
    hit = cache.get(key)
    if hit is not None and hit[0] is instance.valuation:
        return hit[1]
    if not is_symbolic(instance.cost(i)):
        # a one-off concrete query is cheaper as a sweep from c_i upward
        return None
    pieces = list(sweep(lambda b: oracle.value(instance.with_cost(i, b)), Rational(0)))
    if len(cache) >= _BID_CACHE_LIMIT:
        cache.clear()
    cache[key] = (instance.valuation, pieces)
    return pieces


def oracle_max_over_bids(instance: Instance, oracle, i: int, *, shortcut: bool = True) -> Rational:
    """max over c'_i >= c_i of Oracle(A, (c'_i, c_-i)).

    The oracle value is piecewise constant in i's bid; every piece is visited
    by a breakpoint sweep, which ends once no comparison involving the bid
    can flip any more (past B the agent is filtered out).  When the other
    costs are concrete the whole bid axis is swept once and reused, and the
    maximum is read off the pieces at or above c_i.  For the exact oracle
    the optimum cannot grow with a cost, so the current value is the
    maximum and ``shortcut`` skips the sweep.
    """
    oracle = get_oracle(oracle)
    if shortcut and oracle.exact:
        return oracle.value(instance)
    c = instance.cost(i)
    pieces = _bid_pieces(instance, oracle, i)
    best = None
    if pieces is None:
        for _, at, above in sweep(lambda b: oracle.value(instance.with_cost(i, b)), c):
            hi = at if at > above else above
            if best is None or hi > best:
                best = hi
        return best
    for k, (x, at, above) in enumerate(pieces):
        last = k + 1 == len(pieces)
        if not last and pieces[k + 1][0] <= c:
            continue
        if x >= c and (best is None or at > best):
            best = at
        if best is None or above > best:
            best = above
    return best


def measured_rating(instance: Instance, oracle, exclusions: bool = True) -> Rational:
    """Smallest r for which the oracle is an r-approximation on this instance.

    With ``exclusions`` the subinstances A - {k} (the ones the oracle
    mechanisms query) are included.
    """
    oracle = get_oracle(oracle)
    exact = ExhaustiveOracle()
    pairs = [(exact.value(instance), oracle.value(instance))]
    if exclusions:
        for k in instance.ids:
            pairs.append((exact.value(instance, (k,)), oracle.value(instance, (k,))))
    r = Rational(1)
    for opt, got in pairs:
        if got > opt:
            raise AssertionError("oracle exceeded the optimum")
        if opt and got == 0:
            raise InvalidArgument("oracle returned zero on an instance with positive optimum")
        if opt and opt / got > r:
            r = opt / got
    return r
