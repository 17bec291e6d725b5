"""Allocation rules: threshold, oracle and intersection mechanisms.

Every rule here is an allocation only; winners are paid their threshold
bids by :mod:`budgetfeasible.payments`.  Randomized mechanisms return the
exact mixture over deterministic branches instead of sampling.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable, Mapping

from .core import (Rational, EmptyInstanceError, GreedyTrace, Instance, InvalidArgument, RandomizedOutcome,
                   DeterministicOutcome, as_rational, best_single, feasible_filter, format_rational,
                   greedy_order)
from .oracles import get_oracle, oracle_max_over_bids
from .sweep import sign

KINDS = ("greedy_tm", "random_tm", "greedy_eom", "random_eom", "det_eom",
         "greedy_om", "random_om", "random_om_modified", "det_large")
_GAMMA_KINDS = {"greedy_tm", "random_tm", "det_large"}
_ALPHA_KINDS = {"greedy_eom", "random_eom", "greedy_om", "random_om", "random_om_modified", "det_large"}
_ORACLE_KINDS = {"greedy_om", "random_om", "random_om_modified", "det_large"}

# rational stand-ins for gamma = 1/r, alpha = r/(r+1) with r = e/(e-1);
# alpha = 1/(1+gamma) holds exactly and gamma < (e-1)/e
LARGE_MARKET_GAMMA = Rational(79, 125)
LARGE_MARKET_ALPHA = Rational(125, 204)

Allocation = Callable[[Instance], frozenset]


@dataclass(frozen=True)
class MechanismSpec:
    kind: str
    gamma: Rational | None = None
    alpha: Rational | None = None
    oracle: str = "exhaustive"
    r: Rational | None = None
    matching_stop: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown mechanism kind {self.kind!r}")
        set_ = lambda k, v: object.__setattr__(self, k, v)
        if self.kind in _GAMMA_KINDS:
            default = LARGE_MARKET_GAMMA if self.kind == "det_large" else Rational(1, 2)
            set_("gamma", default if self.gamma is None else as_rational(self.gamma, "gamma"))
            if not 0 < self.gamma <= 1:
                raise InvalidArgument("gamma must lie in (0, 1]")
        elif self.gamma is not None:
            raise InvalidArgument(f"{self.kind} takes no gamma")
        if self.kind in _ALPHA_KINDS:
            default = LARGE_MARKET_ALPHA if self.kind == "det_large" else Rational(1, 2)
            set_("alpha", default if self.alpha is None else as_rational(self.alpha, "alpha"))
            if not 0 < self.alpha <= 1:
                raise InvalidArgument("alpha must lie in (0, 1]")
        elif self.alpha is not None:
            raise InvalidArgument(f"{self.kind} takes no alpha")
        if self.oracle not in ("exhaustive", "greedy3"):
            raise InvalidArgument(f"unknown oracle {self.oracle!r}")
        if self.kind in _ORACLE_KINDS:
            if self.r is None:
                rating = get_oracle(self.oracle).rating
                set_("r", rating.r)
            else:
                set_("r", as_rational(self.r, "r"))
            if self.r < 1:
                raise InvalidArgument("oracle rating r must be at least 1")
        elif self.r is not None:
            raise InvalidArgument(f"{self.kind} takes no oracle rating")
        if self.kind == "det_large" and self.alpha > 1 / (1 + self.gamma):
            raise InvalidArgument("det_large needs alpha <= 1/(1+gamma) to stay budget feasible")

    @property
    def uses_oracle(self) -> bool:
        return self.kind in _ORACLE_KINDS

    @property
    def label(self) -> str:
        parts = [self.kind]
        if self.gamma is not None:
            parts.append(f"gamma={format_rational(self.gamma)}")
        if self.alpha is not None:
            parts.append(f"alpha={format_rational(self.alpha)}")
        if self.uses_oracle:
            parts.append(f"oracle={self.oracle}")
            parts.append(f"r={format_rational(self.r)}")
        if self.matching_stop:
            parts.append("stop")
        if len(parts) == 1:
            return self.kind
        return f"{self.kind}({', '.join(parts[1:])})"

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.gamma is not None:
            out["gamma"] = format_rational(self.gamma)
        if self.alpha is not None:
            out["alpha"] = format_rational(self.alpha)
        if self.uses_oracle:
            out["oracle"] = self.oracle
            out["r"] = format_rational(self.r)
        if self.matching_stop:
            out["matching_stop"] = True
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MechanismSpec":
        unknown = set(data) - {"kind", "gamma", "alpha", "oracle", "r", "matching_stop"}
        if unknown:
            raise InvalidArgument(f"mechanism: unknown fields {sorted(unknown)}")
        if "kind" not in data:
            raise InvalidArgument("mechanism.kind: missing")
        return cls(
            kind=data["kind"],
            gamma=data.get("gamma"),
            alpha=data.get("alpha"),
            oracle=data.get("oracle", "exhaustive"),
            r=data.get("r"),
            matching_stop=bool(data.get("matching_stop", False)),
        )


def apply_zero_marginal_stop(trace: GreedyTrace) -> GreedyTrace:
    """Cut the trace before its first zero-marginal step."""
    for k, m in enumerate(trace.marginals):
        if not m:
            return trace.truncated(k)
    return trace


def _trace(instance: Instance, matching_stop: bool) -> GreedyTrace:
    trace = greedy_order(instance, agents=feasible_filter(instance))
    return apply_zero_marginal_stop(trace) if matching_stop else trace


def _priced_nothing(instance: Instance, trace: GreedyTrace, k: int) -> bool:
    """A step that adds no value is only bought for free.

    Zero-marginal steps form a suffix of the trace and every test there reads
    0 <= 0; admitting them at a positive bid would pay each of them B.
    """
    return not trace.marginals[k] and instance.cost(trace.order[k]) > 0


def _single(instance: Instance) -> frozenset:
    try:
        return frozenset({best_single(instance)})
    except EmptyInstanceError:
        return frozenset()


def greedy_tm(gamma, instance: Instance, matching_stop: bool = False) -> frozenset:
    """Longest trace prefix with c_k * v(S_k) <= gamma * B * m_k at every step."""
    gamma = as_rational(gamma, "gamma")
    trace = _trace(instance, matching_stop)
    bound = gamma * instance.budget
    for k, i in enumerate(trace.order):
        c = instance.cost(i)
        if _priced_nothing(instance, trace, k):
            return trace.prefix(k)
        if sign(c * trace.prefix_values[k + 1] - bound * trace.marginals[k]) > 0:
            return trace.prefix(k)
    return trace.prefix(len(trace))


def random_tm(gamma, instance: Instance, matching_stop: bool = False) -> RandomizedOutcome:
    gamma = as_rational(gamma, "gamma")
    return _mix([
        ((gamma + 1) / (gamma + 2), greedy_tm(gamma, instance, matching_stop)),
        (1 / (gamma + 2), _single(instance)),
    ])


def _exact_value(instance: Instance, opt_provider) -> Rational:
    oracle = get_oracle("exhaustive" if opt_provider is None else opt_provider)
    if not getattr(oracle, "exact", False):
        raise InvalidArgument("the exponential-time oracle mechanisms need the exact optimum")
    return oracle.value(instance)


def greedy_eom(alpha, instance: Instance, opt_provider=None, matching_stop: bool = False) -> frozenset:
    """Longest trace prefix whose value stays within alpha * opt(A, B)."""
    alpha = as_rational(alpha, "alpha")
    trace = _trace(instance, matching_stop)
    cap = alpha * _exact_value(instance, opt_provider)
    for k in range(len(trace)):
        if trace.prefix_values[k + 1] > cap or _priced_nothing(instance, trace, k):
            return trace.prefix(k)
    return trace.prefix(len(trace))


def random_eom(alpha, instance: Instance, opt_provider=None, matching_stop: bool = False) -> RandomizedOutcome:
    half = Rational(1, 2)
    return _mix([
        (half, greedy_eom(alpha, instance, opt_provider, matching_stop)),
        (half, _single(instance)),
    ])


def deterministic_eom(instance: Instance, opt_provider=None, matching_stop: bool = False) -> frozenset:
    """{i*} when v(i*) >= (sqrt(17)-3)/4 * opt(A - i*, B), else greedy_eom(1/2)."""
    single = _single(instance)
    if not single:
        return single
    (star,) = single
    oracle = get_oracle("exhaustive" if opt_provider is None else opt_provider)
    if not getattr(oracle, "exact", False):
        raise InvalidArgument("deterministic_eom needs the exact optimum")
    rest = oracle.value(instance, (star,))
    top = instance.valuation.value((star,))
    # 4 v(i*) + 3 v >= sqrt(17) v, both sides non-negative
    if (4 * top + 3 * rest) ** 2 >= 17 * rest * rest:
        return single
    return greedy_eom(Rational(1, 2), instance, oracle, matching_stop)


def _greedy_om(alpha, instance, matching_stop, reference: Callable[[list], dict]) -> frozenset:
    trace = _trace(instance, matching_stop)
    refs = reference(list(trace.order))
    chosen = [i for k, i in enumerate(trace.order)
              if trace.prefix_values[k + 1] <= alpha * refs[i] and not _priced_nothing(instance, trace, k)]
    return frozenset(chosen)


def greedy_om(alpha, instance: Instance, oracle="exhaustive", matching_stop: bool = False) -> frozenset:
    """Walk the whole trace; keep position i iff v(S_i) <= alpha * Oracle(A - i, B).

    The prefixes S_i are those of the full trace, so winners need not be
    contiguous in the order.
    """
    alpha = as_rational(alpha, "alpha")
    oracle = get_oracle(oracle)
    return _greedy_om(alpha, instance, matching_stop,
                      lambda ids: oracle.values_excluding(instance, ids))


def greedy_om_modified(alpha, instance: Instance, oracle="greedy3", matching_stop: bool = False) -> frozenset:
    """greedy_om with max over c'_i >= c_i of Oracle(A, (c'_i, c_-i)) as reference."""
    alpha = as_rational(alpha, "alpha")
    oracle = get_oracle(oracle)
    return _greedy_om(alpha, instance, matching_stop,
                      lambda ids: {i: oracle_max_over_bids(instance, oracle, i) for i in ids})


def _om_mix(instance: Instance, greedy: frozenset, p_greedy: Rational) -> RandomizedOutcome:
    return _mix([(p_greedy, greedy), (1 - p_greedy, _single(instance))])


def random_om(alpha, instance: Instance, oracle="exhaustive", r=None, matching_stop: bool = False) -> RandomizedOutcome:
    alpha = as_rational(alpha, "alpha")
    oracle = get_oracle(oracle)
    r = oracle.rating.r if r is None else as_rational(r, "r")
    return _om_mix(instance, greedy_om(alpha, instance, oracle, matching_stop), r / (alpha + 2 * r))


def random_om_modified(alpha, instance: Instance, oracle="greedy3", r=None,
                       matching_stop: bool = False) -> RandomizedOutcome:
    alpha = as_rational(alpha, "alpha")
    oracle = get_oracle(oracle)
    if not hasattr(oracle, "values_excluding"):
        raise InvalidArgument("oracle does not support the bid-max reference")
    return _om_mix(instance, greedy_om_modified(alpha, instance, oracle, matching_stop), Rational(1, 2))


def deterministic_large(alpha, gamma, instance: Instance, oracle="greedy3", matching_stop: bool = False) -> frozenset:
    """greedy_om(alpha) intersected with greedy_tm(gamma)."""
    alpha = as_rational(alpha, "alpha")
    gamma = as_rational(gamma, "gamma")
    if alpha > 1 / (1 + gamma):
        raise InvalidArgument("alpha must not exceed 1/(1+gamma); the mechanism would overspend")
    return greedy_om(alpha, instance, oracle, matching_stop) & greedy_tm(gamma, instance, matching_stop)


def _mix(branches) -> RandomizedOutcome:
    return RandomizedOutcome(tuple((p, DeterministicOutcome(frozenset(w))) for p, w in branches))


@dataclass(frozen=True)
class Branch:
    """One deterministic component of a mechanism, with its own allocation."""

    probability: Rational
    name: str
    allocate: Allocation
    # allocations whose thresholds are combined by min (intersection mechanisms)
    components: tuple[Allocation, ...] = ()
    # equal keys mean equal allocation rules, so per-agent work can be shared
    key: tuple = ()


def branches(spec: MechanismSpec) -> list[Branch]:
    """The deterministic branches of ``spec`` in a fixed order."""
    k, s = spec.kind, spec.matching_stop
    oracle = get_oracle(spec.oracle) if spec.uses_oracle else None
    tm = lambda inst: greedy_tm(spec.gamma, inst, s)
    eom = lambda inst: greedy_eom(spec.alpha, inst, None, s)
    om = lambda inst: greedy_om(spec.alpha, inst, oracle, s)
    tm_key = ("greedy_tm", spec.gamma, s)
    eom_key = ("greedy_eom", spec.alpha, s)
    om_key = ("greedy_om", spec.alpha, spec.oracle, s)
    one, half = Rational(1), Rational(1, 2)
    single = Branch(half, "single", _single, key=("single",))
    if k == "greedy_tm":
        return [Branch(one, "greedy", tm, key=tm_key)]
    if k == "random_tm":
        g = spec.gamma
        return [Branch((g + 1) / (g + 2), "greedy", tm, key=tm_key),
                replace(single, probability=1 / (g + 2))]
    if k == "greedy_eom":
        return [Branch(one, "greedy", eom, key=eom_key)]
    if k == "random_eom":
        return [Branch(half, "greedy", eom, key=eom_key), single]
    if k == "det_eom":
        return [Branch(one, "deterministic", lambda inst: deterministic_eom(inst, None, s),
                       key=("det_eom", s))]
    if k == "greedy_om":
        return [Branch(one, "greedy", om, key=om_key)]
    if k == "random_om":
        p = spec.r / (spec.alpha + 2 * spec.r)
        return [Branch(p, "greedy", om, key=om_key), replace(single, probability=1 - p)]
    if k == "random_om_modified":
        mod = lambda inst: greedy_om_modified(spec.alpha, inst, oracle, s)
        # an exact optimum never grows with a cost, so the bid-max reference is
        # opt(A) for everyone and the rule coincides with greedy_eom
        mod_key = eom_key if oracle.exact else ("greedy_om_modified", spec.alpha, spec.oracle, s)
        return [Branch(half, "greedy", mod, key=mod_key), single]
    if k == "det_large":
        both = lambda inst: om(inst) & tm(inst)
        return [Branch(one, "intersection", both, components=(om, tm),
                       key=("det_large", spec.alpha, spec.gamma, spec.oracle, s))]
    raise InvalidArgument(f"unknown mechanism kind {k!r}")


def run_mechanism(spec: MechanismSpec, instance: Instance) -> RandomizedOutcome:
    """Winning sets of every branch (no payments)."""
    return _mix([(b.probability, b.allocate(instance)) for b in branches(spec)])
