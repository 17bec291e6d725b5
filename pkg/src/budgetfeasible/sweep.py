"""Symbolic bids and breakpoint sweeps.

Every mechanism in this package touches costs only through sums, products
with (cost-independent) values, and comparisons.  That makes the outcome a
piecewise-constant function of any single agent's bid, and the pieces are
delimited by the bids at which one of the comparisons the run actually made
would flip.

`Lin` is an affine form in one or more swept bids.  A run evaluated with a
`Lin` cost behaves exactly like a run at a concrete point (or just above it)
and, as a side effect, records every flip point it passes.  Nested sweeps
(sweeping one bid while another is already symbolic) stack: inner flip
points are themselves affine in the outer bids.
"""
from __future__ import annotations

from contextvars import ContextVar
from gmpy2 import mpq
from typing import Any, Callable, Iterator

_PROBES: ContextVar[tuple["_Probe", ...]] = ContextVar("bid_probes", default=())

MAX_REGIONS = 10_000


class _Probe:
    __slots__ = ("point", "above", "flips")

    def __init__(self, point, above: bool):
        self.point = point
        self.above = above
        self.flips: list = []


def _lin(const, coef: tuple):
    n = len(coef)
    while n and not coef[n - 1]:
        n -= 1
    if n == 0:
        return const
    if n != len(coef):
        coef = coef[:n]
    return Lin(const, coef)


class Lin:
    """``const + sum(coef[l] * bid_l)`` for the bids swept at nesting level l."""

    __slots__ = ("const", "coef")
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, const, coef: tuple):
        self.const = const
        self.coef = coef

    def __repr__(self) -> str:
        terms = " + ".join(f"{c}*b{l}" for l, c in enumerate(self.coef) if c)
        return f"Lin({self.const} + {terms})"

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        if type(other) is Lin:
            a, b = self.coef, other.coef
            if len(a) < len(b):
                a, b = b, a
            coef = tuple(x + y for x, y in zip(a, b)) + a[len(b):]
            return _lin(self.const + other.const, coef)
        return Lin(self.const + other, self.coef)

    __radd__ = __add__

    def __neg__(self):
        return Lin(-self.const, tuple(-c for c in self.coef))

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if type(other) is Lin:
            raise TypeError("product of two symbolic bids is not affine")
        if not other:
            return other * self.const
        return Lin(self.const * other, tuple(c * other for c in self.coef))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if type(other) is Lin:
            raise TypeError("division by a symbolic bid")
        return self * (1 / mpq(other))

    # comparisons ------------------------------------------------------
    def __lt__(self, other):
        return sign(self - other) < 0

    def __le__(self, other):
        return sign(self - other) <= 0

    def __gt__(self, other):
        return sign(self - other) > 0

    def __ge__(self, other):
        return sign(self - other) >= 0

    def __eq__(self, other):
        return sign(self - other) == 0

    def __ne__(self, other):
        return sign(self - other) != 0

    def __bool__(self):
        return sign(self) != 0


def is_symbolic(x) -> bool:
    return type(x) is Lin


def sign(x) -> int:
    """Sign of ``x`` at the active probe points, recording flip points."""
    if type(x) is not Lin:
        return (x > 0) - (x < 0)
    probes = _PROBES.get()
    coef = list(x.coef)
    depth = len(coef)
    if depth > len(probes):
        raise RuntimeError("symbolic bid used outside of its sweep")
    const = x.const
    eps = [0] * depth
    for level in range(depth - 1, -1, -1):
        s = coef[level]
        if not s:
            continue
        probe = probes[level]
        rest = _lin(const, tuple(coef[:level]))
        probe.flips.append(-rest / s)
        sub = rest + s * probe.point
        coef[level] = 0
        if type(sub) is Lin:
            const = sub.const
            coef[: len(sub.coef)] = sub.coef
            coef[len(sub.coef):level] = [0] * (level - len(sub.coef))
        else:
            const = sub
            coef[:level] = [0] * level
        if probe.above:
            eps[level] = s
    if const:
        return 1 if const > 0 else -1
    for e in eps:
        if e:
            return 1 if e > 0 else -1
    return 0


def cmp(a, b) -> int:
    return sign(a - b)


def variable(level: int) -> Lin:
    return Lin(mpq(0), (mpq(0),) * level + (mpq(1),))


def just_above(fn: Callable[[Any], Any], point) -> tuple[Any, list]:
    """Evaluate ``fn`` at ``point + eps`` and return (result, flip points)."""
    probes = _PROBES.get()
    probe = _Probe(point, True)
    token = _PROBES.set(probes + (probe,))
    try:
        result = fn(variable(len(probes)))
    finally:
        _PROBES.reset(token)
    return result, probe.flips


def next_breakpoint(flips: list, x):
    """Smallest recorded flip point strictly above ``x`` (None if none)."""
    best = None
    seen = set()
    for f in flips:
        if type(f) is not Lin:
            if f in seen:
                continue
            seen.add(f)
        if f > x and (best is None or f < best):
            best = f
    return best


def sweep(fn: Callable[[Any], Any], start) -> Iterator[tuple[Any, Any, Any]]:
    """Walk the pieces of ``fn`` on ``[start, inf)``.

    Yields ``(x, fn(x), fn(x+))`` for ``x = start`` and every later
    breakpoint; ``fn(x+)`` holds on the open interval up to the next ``x``.
    The last yielded piece extends to infinity.
    """
    x = start
    for _ in range(MAX_REGIONS):
        at = fn(x)
        above, flips = just_above(fn, x)
        yield x, at, above
        x = next_breakpoint(flips, x)
        if x is None:
            return
    raise RuntimeError("sweep did not terminate")
