"""Instance files, seeded instance generation and experiment reports."""
from __future__ import annotations

import csv
import io
import json
import numbers
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .core import (Rational, Agent, Instance, InvalidArgument, DegenerateInstanceError, as_rational,
                   format_rational, large_market_theta)
from .mechanisms import MechanismSpec, branches
from .oracles import exhaustive_opt
from .payments import payments_for_outcome
from .valuations import (AdditiveValuation, CoverageValuation, MatchingValuation, TaskValuedMatching,
                         valuation_from_dict)

FORMAT_VERSION = 1
FAMILIES = ("additive", "coverage", "matching", "task_matching")


# instance files ---------------------------------------------------------

def instance_to_dict(instance: Instance) -> dict[str, Any]:
    return {
        "version": FORMAT_VERSION,
        "budget": format_rational(instance.budget),
        "agents": [{"id": a.id, "cost": format_rational(a.cost)} for a in instance.agents],
        "valuation": instance.valuation.to_dict(),
    }


def parse_instance(data: Mapping[str, Any] | str) -> Instance:
    """Build an Instance from an InstanceFile document (dict or JSON text)."""
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"instance: not valid JSON ({exc})") from None
    if not isinstance(data, Mapping):
        raise InvalidArgument("instance: expected a JSON object")
    if data.get("version") != FORMAT_VERSION:
        raise InvalidArgument(f"version: expected {FORMAT_VERSION}, got {data.get('version')!r}")
    if "budget" not in data:
        raise InvalidArgument("budget: missing")
    budget = as_rational(data["budget"], "budget")
    raw = data.get("agents")
    if not isinstance(raw, list):
        raise InvalidArgument("agents: expected a list")
    agents = {}
    for k, a in enumerate(raw):
        try:
            i = a["id"]
            c = a["cost"]
        except (KeyError, TypeError):
            raise InvalidArgument(f"agents[{k}]: expected an object with 'id' and 'cost'") from None
        if not isinstance(i, int) or isinstance(i, bool):
            raise InvalidArgument(f"agents[{k}].id: expected an integer")
        if i in agents:
            raise InvalidArgument(f"agents[{k}].id: duplicate id {i}")
        c = as_rational(c, f"agents[{k}].cost")
        if c < 0:
            raise InvalidArgument(f"agents[{k}].cost: negative cost {format_rational(c)}")
        agents[i] = c
    if sorted(agents) != list(range(1, len(agents) + 1)):
        raise InvalidArgument(f"agents: ids must be 1..n, got {sorted(agents)}")
    if budget <= 0:
        raise InvalidArgument("budget: must be positive")
    valuation = valuation_from_dict(data.get("valuation"), len(agents))
    return Instance(tuple(Agent(i, agents[i]) for i in sorted(agents)), budget, valuation)


# generation -------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorConfig:
    family: str = "additive"
    n: int = 6
    seed: int = 0
    # large-market mode: reject until max_i v(i) / opt <= theta_cap
    theta_cap: Rational | None = None
    max_tries: int = 1000

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgument(f"family: unknown {self.family!r} (expected one of {', '.join(FAMILIES)})")
        if self.n < 1:
            raise InvalidArgument("n: an instance needs at least one agent")
        if self.theta_cap is not None:
            object.__setattr__(self, "theta_cap", as_rational(self.theta_cap, "theta_cap"))
            if self.theta_cap <= 0:
                raise InvalidArgument("theta_cap: must be positive")


def _q(rng, lo: int, hi: int, dens=(1, 2, 4)) -> Rational:
    # small rational with numerator in [lo, hi]
    return Rational(int(rng.integers(lo, hi + 1)), int(rng.choice(dens)))


def _costs(rng, n: int) -> list[Rational]:
    # occasional zero costs exercise the free-agent branch of the ordering
    return [Rational(0) if rng.random() < 0.05 else _q(rng, 1, 12) for _ in range(n)]


def _budget(rng, costs, lo=0.25, hi=0.75) -> Rational:
    total = sum(costs, Rational(0))
    share = Rational(int(rng.integers(round(lo * 20), round(hi * 20) + 1)), 20)
    return max(total * share, Rational(1))


def _valuation(rng, family: str, n: int):
    if family == "additive":
        return AdditiveValuation([_q(rng, 0, 12) if rng.random() < 0.1 else _q(rng, 1, 12) for _ in range(n)])
    if family == "coverage":
        m = int(rng.integers(3, 2 * n + 3))
        weights = {f"e{k}": _q(rng, 1, 6, (1, 2)) for k in range(1, m + 1)}
        covers = {i: [e for e in weights if rng.random() < 0.35] for i in range(1, n + 1)}
        return CoverageValuation(weights, covers, n)
    m = int(rng.integers(2, n + 2))
    tasks = [f"t{k}" for k in range(1, m + 1)]
    pairs = [(a, t) for a in range(1, n + 1) for t in tasks if rng.random() < 0.45]
    if family == "matching":
        return MatchingValuation(tasks, [(a, t, _q(rng, 1, 9, (1, 2))) for a, t in pairs], n)
    return TaskValuedMatching({t: _q(rng, 1, 9, (1, 2)) for t in tasks}, pairs, n)


def _large_market(rng, config: GeneratorConfig) -> Instance:
    n = config.n
    # values in a narrow band and a budget covering most agents keep each share small
    values = [Rational(int(rng.integers(8, 11))) for _ in range(n)]
    costs = [Rational(int(rng.integers(2, 5))) for _ in range(n)]
    budget = _budget(rng, costs, 0.7, 1.0)
    return Instance.from_costs(costs, budget, AdditiveValuation(values))


def gen_instance(config: GeneratorConfig, index: int = 0) -> Instance:
    """Instance number ``index`` of the stream fixed by ``config.seed``."""
    rng = np.random.default_rng([config.seed, index])
    cap = config.theta_cap
    if cap is None:
        costs = _costs(rng, config.n)
        return Instance.from_costs(costs, _budget(rng, costs), _valuation(rng, config.family, config.n))
    if config.family != "additive":
        raise InvalidArgument("theta_cap: large-market instances are generated for the additive family")
    # opt <= sum over its members of v(i) <= n * theta * opt, hence theta >= 1/n
    if cap < Rational(1, config.n):
        raise InvalidArgument(
            f"theta_cap: no instance with {config.n} agents has theta below 1/{config.n}, "
            f"so {format_rational(cap)} is unattainable")
    for _ in range(config.max_tries):
        inst = _large_market(rng, config)
        try:
            if large_market_theta(inst) <= cap:
                return inst
        except DegenerateInstanceError:
            continue
    raise InvalidArgument(f"theta_cap: no instance under {format_rational(cap)} in {config.max_tries} tries")


# experiments ------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    mechanisms: tuple[MechanismSpec, ...] = ()
    trials: int = 1
    verify: bool = True
    sample: bool = False
    format: str = "json"
    output: str | None = None

    def to_dict(self) -> dict[str, Any]:
        g = self.generator
        gen: dict[str, Any] = {"family": g.family, "n": g.n, "seed": g.seed}
        if g.theta_cap is not None:
            gen["theta_cap"] = format_rational(g.theta_cap)
        out = {"generator": gen, "mechanisms": [m.to_dict() for m in self.mechanisms],
               "trials": self.trials, "verify": self.verify, "sample": self.sample, "format": self.format}
        if self.output is not None:
            out["output"] = self.output
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | str) -> "ExperimentConfig":
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as exc:
                raise InvalidArgument(f"config: not valid JSON ({exc})") from None
        unknown = set(data) - {"generator", "mechanisms", "trials", "verify", "sample", "format", "output"}
        if unknown:
            raise InvalidArgument(f"config: unknown fields {sorted(unknown)}")
        gen = dict(data.get("generator", {}))
        extra = set(gen) - {"family", "n", "seed", "theta_cap", "max_tries"}
        if extra:
            raise InvalidArgument(f"generator: unknown fields {sorted(extra)}")
        fmt = data.get("format", "json")
        if fmt not in ("csv", "json"):
            raise InvalidArgument(f"format: expected csv or json, got {fmt!r}")
        trials = data.get("trials", 1)
        if not isinstance(trials, int) or trials < 0:
            raise InvalidArgument("trials: expected a non-negative integer")
        return cls(
            generator=GeneratorConfig(**gen),
            mechanisms=tuple(MechanismSpec.from_dict(m) for m in data.get("mechanisms", [])),
            trials=trials,
            verify=bool(data.get("verify", True)),
            sample=bool(data.get("sample", False)),
            format=fmt,
            output=data.get("output"),
        )


def _sample_branch(rng, probabilities: Sequence[Rational]) -> int:
    # exact inverse-CDF draw against a rational uniform with 2^53 resolution
    u = Rational(int(rng.integers(0, 2 ** 53)), 2 ** 53)
    acc = Rational(0)
    for k, p in enumerate(probabilities):
        acc += p
        if u < acc:
            return k
    return len(probabilities) - 1


def evaluate(spec: MechanismSpec, instance: Instance, *, verify: bool = True, rng=None,
             cache: dict | None = None, profiles=None) -> dict[str, Any]:
    """One report row: branches, payments, opt, ratio and verification summary."""
    from .verify import empirical_ratio, instance_digest, verify as run_checks

    outcome = payments_for_outcome(spec, instance, cache)
    names = [b.name for b in branches(spec)]
    _, opt = exhaustive_opt(instance)
    expected = outcome.expected_value(instance.valuation)
    row: dict[str, Any] = {
        "instance": instance_digest(instance),
        "mechanism": spec.label,
        "budget": instance.budget,
        "branches": [
            {"name": name, "probability": p, "winners": sorted(o.winners),
             "value": instance.value(o.winners),
             "payments": {i: o.payments[i] for i in sorted(o.payments)},
             "total_payment": o.total_payment}
            for name, (p, o) in zip(names, outcome.branches)
        ],
        "max_total_payment": max(o.total_payment for _, o in outcome.branches),
        "expected_value": expected,
        "opt": opt,
        "ratio": empirical_ratio(spec, instance),
    }
    if verify:
        report = run_checks(spec, instance, profiles)
        row["verified"] = report.passed
        row["failed_checks"] = [c.name for c in report.checks if not c.passed]
    if rng is not None:
        row["sampled_branch"] = names[_sample_branch(rng, [p for p, _ in outcome.branches])]
    return row


def run_experiment(config: ExperimentConfig, instances: Sequence[Instance] | None = None) -> list[dict[str, Any]]:
    """Rows ordered by (instance index, mechanism index); deterministic given the seed."""
    from .verify import profile_cache

    if instances is None:
        instances = [gen_instance(config.generator, t) for t in range(config.trials)]
    rng = np.random.default_rng([config.generator.seed, 2 ** 31]) if config.sample else None
    rows = []
    for t, inst in enumerate(instances):
        cache: dict = {}
        profiles = profile_cache(inst)
        for spec in config.mechanisms:
            row = evaluate(spec, inst, verify=config.verify, rng=rng, cache=cache, profiles=profiles)
            rows.append({"index": t, **row})
    return rows


# reports ----------------------------------------------------------------

def _exact(x):
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, numbers.Rational):
        return format_rational(x)
    if isinstance(x, float):
        return "inf"
    if isinstance(x, Mapping):
        return {str(k): _exact(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_exact(v) for v in x]
    return str(x)


def _decimal(x) -> str:
    if isinstance(x, float):
        return "inf"
    q = round(Rational(x) * 10 ** 6)
    sign = "-" if q < 0 else ""
    whole, frac = divmod(abs(q), 10 ** 6)
    return f"{sign}{int(whole)}.{int(frac):06d}"


CSV_COLUMNS = ("index", "instance", "mechanism", "branches", "winners", "payments", "budget",
               "max_total_payment", "expected_value", "opt", "ratio", "verified", "failed_checks",
               "sampled_branch")
_DECIMAL_COLUMNS = ("max_total_payment", "expected_value", "opt", "ratio")


def emit_report(rows: Sequence[Mapping[str, Any]], fmt: str = "json") -> str:
    """Serialize report rows as JSON (exact rationals) or CSV (p/q plus 6-place decimals)."""
    if fmt == "json":
        return json.dumps([_exact(r) for r in rows], indent=2, sort_keys=True) + "\n"
    if fmt != "csv":
        raise InvalidArgument(f"format: expected csv or json, got {fmt!r}")
    header = []
    for col in CSV_COLUMNS:
        header.append(col)
        if col in _DECIMAL_COLUMNS:
            header.append(col + "_decimal")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        bs = r.get("branches", [])
        line = {
            "index": r.get("index", ""),
            "instance": r.get("instance", ""),
            "mechanism": r.get("mechanism", ""),
            "branches": ";".join(f"{b['name']}@{format_rational(b['probability'])}" for b in bs),
            "winners": ";".join(" ".join(map(str, b["winners"])) for b in bs),
            "payments": ";".join(" ".join(f"{i}:{format_rational(p)}" for i, p in b["payments"].items())
                                 for b in bs),
            "verified": r.get("verified", ""),
            "failed_checks": " ".join(r.get("failed_checks", [])),
            "sampled_branch": r.get("sampled_branch", ""),
        }
        out = []
        for col in CSV_COLUMNS:
            if col in line:
                out.append(line[col])
                continue
            v = r.get(col)
            out.append("" if v is None else _exact(v))
            if col in _DECIMAL_COLUMNS:
                out.append("" if v is None else _decimal(v))
        writer.writerow(out)
    return buf.getvalue()
