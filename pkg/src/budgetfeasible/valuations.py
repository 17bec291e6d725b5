"""Monotone submodular valuation oracles.

All oracles are defined on agents ``1..n`` and return exact Fractions.
Values are memoized by bitmask; the cache only ever stores the value the
oracle would recompute, so sharing an oracle across threads is safe.
"""
from __future__ import annotations

from typing import Any, Hashable, Iterable, Mapping

from .core import Rational, ContractViolation, InvalidArgument, as_rational, format_rational, from_mask

KINDS = ("additive", "coverage", "matching", "task_matching")


class Valuation:
    kind = "abstract"

    def __init__(self, n: int):
        if n < 0:
            raise InvalidArgument("number of agents must be non-negative")
        self.n = n
        self._cache: dict[int, Rational] | None = {} if n <= 64 else None
        self._ranked = None

    def _mask(self, S: Iterable[int]) -> int:
        mask = 0
        for i in S:
            if not isinstance(i, int) or not 1 <= i <= self.n:
                raise InvalidArgument(f"unknown agent id {i!r}")
            mask |= 1 << (i - 1)
        return mask

    def value(self, S: Iterable[int]) -> Rational:
        return self.value_of_mask(self._mask(S))

    def value_of_mask(self, mask: int) -> Rational:
        cache = self._cache
        if cache is None:
            return self._evaluate(mask)
        v = cache.get(mask)
        if v is None:
            v = cache[mask] = self._evaluate(mask)
        return v

    def _evaluate(self, mask: int) -> Rational:
        raise NotImplementedError

    def ranked_subsets(self) -> tuple[tuple[Rational, int], ...]:
        """All subsets as ``(value, mask)``, best value first.

        Equal values are ordered by their sorted id tuple, so the first
        affordable entry is the lexicographically smallest optimum.
        """
        if self._ranked is None:
            keyed = []
            for mask in range(1 << self.n):
                ids = tuple(sorted(from_mask(mask)))
                keyed.append((-self.value_of_mask(mask), ids, mask))
            keyed.sort()
            self._ranked = tuple((-v, mask) for v, _, mask in keyed)
        return self._ranked

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "payload": self._payload()}

    def _payload(self) -> dict[str, Any]:
        raise NotImplementedError


class AdditiveValuation(Valuation):
    kind = "additive"

    def __init__(self, item_values):
        if isinstance(item_values, Mapping):
            ids = sorted(item_values)
            if ids != list(range(1, len(ids) + 1)):
                raise InvalidArgument("additive values must be keyed by ids 1..n")
            vals = [item_values[i] for i in ids]
        else:
            vals = list(item_values)
        super().__init__(len(vals))
        self.item_values = tuple(as_rational(v, "item value") for v in vals)
        if any(v < 0 for v in self.item_values):
            raise InvalidArgument("item values must be non-negative")

    def _evaluate(self, mask: int) -> Rational:
        total = Rational(0)
        for i, v in enumerate(self.item_values):
            if mask >> i & 1:
                total += v
        return total

    def _payload(self):
        return {"values": {str(i): format_rational(v) for i, v in enumerate(self.item_values, 1)}}


class CoverageValuation(Valuation):
    """Weighted coverage: v(S) is the weight of the union of the agents' sets."""

    kind = "coverage"

    def __init__(self, weights: Mapping[Hashable, Any], covers: Mapping[int, Iterable[Hashable]],
                 n: int | None = None):
        n = max(covers, default=0) if n is None else n
        super().__init__(n)
        self.weights = {e: as_rational(w, f"weight of {e!r}") for e, w in weights.items()}
        if any(w < 0 for w in self.weights.values()):
            raise InvalidArgument("element weights must be non-negative")
        self.covers: dict[int, frozenset] = {}
        for i in range(1, n + 1):
            elems = frozenset(covers.get(i, ()))
            unknown = elems - self.weights.keys()
            if unknown:
                raise InvalidArgument(f"agent {i} covers unknown elements {sorted(map(str, unknown))}")
            self.covers[i] = elems
        extra = set(covers) - set(range(1, n + 1))
        if extra:
            raise InvalidArgument(f"covers given for unknown agents {sorted(extra)}")

    def _evaluate(self, mask: int) -> Rational:
        covered: set = set()
        i = 1
        while mask:
            if mask & 1:
                covered |= self.covers[i]
            mask >>= 1
            i += 1
        return sum((self.weights[e] for e in covered), Rational(0))

    def _payload(self):
        return {
            "weights": {str(e): format_rational(w) for e, w in sorted(self.weights.items(), key=lambda kv: str(kv[0]))},
            "covers": {str(i): sorted(map(str, c)) for i, c in self.covers.items()},
        }


def max_weight_matching(rows: list, cols: list, weight: Mapping[tuple, Rational]) -> tuple[Rational, dict]:
    """Exact maximum-weight bipartite matching (Hungarian method).

    ``weight`` maps (row, col) edges to non-negative weights; missing pairs
    are non-edges.  Returns the optimum weight and the matched edges as a
    row -> col dict.
    """
    if not rows or not cols:
        return Rational(0), {}
    transpose = len(rows) > len(cols)
    if transpose:
        rows, cols = cols, rows
        weight = {(c, r): w for (r, c), w in weight.items()}
    n, m = len(rows), len(cols)
    zero = Rational(0)
    a = [[zero] * (m + 1)] + [
        [zero] + [-weight.get((r, c), zero) for c in cols] for r in rows
    ]
    inf = float("inf")
    u = [zero] * (n + 1)
    v = [zero] * (m + 1)
    p = [0] * (m + 1)
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta, j1 = inf, 0
            row = a[i0]
            ui = u[i0]
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j] - ui - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta, j1 = minv[j], j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    matched = {}
    total = zero
    for j in range(1, m + 1):
        if p[j]:
            r, c = rows[p[j] - 1], cols[j - 1]
            if (r, c) in weight:
                total += weight[(r, c)]
                matched[r] = c
    if transpose:
        matched = {c: r for r, c in matched.items()}
    return total, matched


class MatchingValuation(Valuation):
    """v(S) = weight of a maximum matching between S and the tasks."""

    kind = "matching"

    def __init__(self, tasks: Iterable[Hashable], edges: Iterable[tuple], n: int):
        super().__init__(n)
        self.tasks = tuple(sorted(set(tasks), key=str))
        known = set(self.tasks)
        self.edges: dict[tuple[int, Hashable], Rational] = {}
        for a, t, w in edges:
            if not isinstance(a, int) or not 1 <= a <= n:
                raise InvalidArgument(f"edge from unknown agent {a!r}")
            if t not in known:
                raise InvalidArgument(f"edge to unknown task {t!r}")
            if (a, t) in self.edges:
                raise InvalidArgument(f"duplicate edge ({a}, {t!r})")
            w = as_rational(w, f"weight of edge ({a}, {t!r})")
            if w < 0:
                raise InvalidArgument("edge weights must be non-negative")
            self.edges[(a, t)] = w

    def _sub_edges(self, agents) -> dict:
        agents = set(agents)
        return {e: w for e, w in self.edges.items() if e[0] in agents}

    def _evaluate(self, mask: int) -> Rational:
        agents = sorted(from_mask(mask))
        total, _ = max_weight_matching(agents, list(self.tasks), self._sub_edges(agents))
        return total

    def _payload(self):
        return {
            "tasks": [str(t) for t in self.tasks],
            "edges": [[a, str(t), format_rational(w)] for (a, t), w in sorted(self.edges.items(), key=lambda kv: (kv[0][0], str(kv[0][1])))],
        }


class TaskValuedMatching(MatchingValuation):
    """Matching valuation where every edge into task t is worth ``task_values[t]``."""

    kind = "task_matching"

    def __init__(self, task_values: Mapping[Hashable, Any], edges: Iterable[tuple], n: int):
        self.task_values = {t: as_rational(w, f"value of task {t!r}") for t, w in task_values.items()}
        super().__init__(self.task_values, [(a, t, self.task_values.get(t, 0)) for a, t in edges], n)

    def _payload(self):
        return {
            "tasks": {str(t): format_rational(self.task_values[t]) for t in self.tasks},
            "edges": [[a, str(t)] for a, t in sorted(self.edges, key=lambda e: (e[0], str(e[1])))],
        }


def extract_assignment(valuation: MatchingValuation, S: Iterable[int]) -> dict[int, Hashable]:
    """Max-weight matching of G[S, T] that gives every agent in S its own task.

    Raises ContractViolation when no maximum-weight matching covers S, which
    happens when an agent without positive marginal value was hired.
    """
    S = sorted(set(S))
    valuation._mask(S)
    if not S:
        return {}
    sub = valuation._sub_edges(S)
    # edge bonus larger than any weight difference: maximize cardinality, then weight
    bonus = 1 + sum(sub.values(), Rational(0))
    total, matched = max_weight_matching(S, list(valuation.tasks), {e: w + bonus for e, w in sub.items()})
    weight = total - bonus * len(matched)
    target = valuation.value(S)
    if len(matched) != len(S) or weight != target:
        unmatched = [a for a in S if a not in matched]
        raise ContractViolation(
            f"no maximum-weight matching assigns every agent a task "
            f"(unmatched {unmatched}, weight {weight} vs value {target})"
        )
    return matched


def valuation_from_dict(data: Mapping[str, Any], n: int) -> Valuation:
    """Build a valuation from its ``{"kind", "payload"}`` file section."""
    try:
        kind = data["kind"]
        payload = data["payload"]
    except (KeyError, TypeError):
        raise InvalidArgument("valuation: expected an object with 'kind' and 'payload'") from None
    if kind == "additive":
        values = payload.get("values")
        if values is None:
            raise InvalidArgument("valuation.payload.values: missing")
        if isinstance(values, Mapping):
            vals = {int(k): as_rational(v, f"valuation.payload.values[{k}]") for k, v in values.items()}
        else:
            vals = {i: as_rational(v, f"valuation.payload.values[{i}]") for i, v in enumerate(values, 1)}
        if sorted(vals) != list(range(1, n + 1)):
            raise InvalidArgument("valuation.payload.values: must give a value for every agent 1..n")
        return AdditiveValuation(vals)
    if kind == "coverage":
        weights = {e: as_rational(w, f"valuation.payload.weights[{e}]") for e, w in payload.get("weights", {}).items()}
        covers = {int(k): list(v) for k, v in payload.get("covers", {}).items()}
        return CoverageValuation(weights, covers, n)
    if kind == "matching":
        edges = [(int(a), t, as_rational(w, "valuation.payload.edges weight")) for a, t, w in payload.get("edges", [])]
        return MatchingValuation(payload.get("tasks", []), edges, n)
    if kind == "task_matching":
        tasks = {t: as_rational(w, f"valuation.payload.tasks[{t}]") for t, w in payload.get("tasks", {}).items()}
        edges = [(int(a), t) for a, t in payload.get("edges", [])]
        return TaskValuedMatching(tasks, edges, n)
    raise InvalidArgument(f"valuation.kind: unknown kind {kind!r} (expected one of {', '.join(KINDS)})")
