"""Command line entry point: gen, run, verify, payments, bench."""
from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from .core import MechanismError, format_rational
from .experiments import (FAMILIES, ExperimentConfig, GeneratorConfig, emit_report, gen_instance,
                          instance_to_dict, parse_instance, run_experiment)
from .mechanisms import KINDS, MechanismSpec, branches
from .payments import payments_for_outcome
from .verify import profile_cache, verify as run_checks


def _specs(kinds, gamma, alpha, oracle, stop) -> list[MechanismSpec]:
    out = []
    for kind in kinds:
        probe = MechanismSpec(kind)
        out.append(MechanismSpec(
            kind,
            gamma=gamma if probe.gamma is not None else None,
            alpha=alpha if probe.alpha is not None else None,
            oracle=oracle,
            matching_stop=stop,
        ))
    return out


def _load(path: str):
    try:
        return parse_instance(Path(path).read_text())
    except MechanismError as exc:
        raise click.ClickException(f"{path}: {exc}")


def mechanism_options(f):
    f = click.option("--mechanism", "-m", "kinds", multiple=True, type=click.Choice(KINDS),
                     default=("greedy_tm",), show_default=True, help="Mechanism kind (repeatable).")(f)
    f = click.option("--gamma", default=None, help="Threshold parameter p/q.")(f)
    f = click.option("--alpha", default=None, help="Oracle parameter p/q.")(f)
    f = click.option("--oracle", type=click.Choice(["exhaustive", "greedy3"]), default="exhaustive",
                     show_default=True)(f)
    f = click.option("--matching-stop", is_flag=True, help="Stop the greedy order at the first zero marginal.")(f)
    return f


def generator_options(f):
    f = click.option("--family", type=click.Choice(FAMILIES), default="additive", show_default=True)(f)
    f = click.option("--n", "n", type=int, default=6, show_default=True, help="Number of agents.")(f)
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--theta-cap", default=None, help="Large-market cap on max_i v(i)/opt, p/q.")(f)
    return f


def _build_specs(kinds, gamma, alpha, oracle, matching_stop):
    try:
        return _specs(kinds, gamma, alpha, oracle, matching_stop)
    except MechanismError as exc:
        raise click.BadParameter(str(exc))


def _generator(family, n, seed, theta_cap) -> GeneratorConfig:
    try:
        return GeneratorConfig(family=family, n=n, seed=seed, theta_cap=theta_cap)
    except MechanismError as exc:
        raise click.BadParameter(str(exc))


def _write(text: str, output):
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group()
def main():
    """Budget-feasible procurement mechanisms: generate, run, pay and verify."""


@main.command()
@generator_options
@click.option("--index", type=int, default=0, help="Position in the seeded instance stream.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
def gen(family, n, seed, theta_cap, index, output):
    """Write one seeded instance file."""
    try:
        inst = gen_instance(_generator(family, n, seed, theta_cap), index)
    except MechanismError as exc:
        raise click.ClickException(str(exc))
    _write(json.dumps(instance_to_dict(inst), indent=2) + "\n", output)


@main.command()
@click.argument("instances", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@mechanism_options
@generator_options
@click.option("--trials", type=int, default=1, show_default=True, help="Generated instances (no files given).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="json", show_default=True)
@click.option("--sample", is_flag=True, help="Also draw one branch of each mixture with the seeded RNG.")
@click.option("--no-verify", is_flag=True, help="Skip the brute-force checks.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="ExperimentConfig JSON; replaces the mechanism, generator and report flags.")
def run(instances, kinds, gamma, alpha, oracle, matching_stop, family, n, seed, theta_cap,
        trials, fmt, sample, no_verify, output, config_path):
    """Run mechanisms on instance files or on a generated stream."""
    if config_path:
        try:
            config = ExperimentConfig.from_dict(Path(config_path).read_text())
        except (MechanismError, TypeError) as exc:
            raise click.ClickException(f"{config_path}: {exc}")
        fmt, output = config.format, output or config.output
    else:
        specs = _build_specs(kinds, gamma, alpha, oracle, matching_stop)
        config = ExperimentConfig(_generator(family, n, seed, theta_cap), tuple(specs), trials,
                                  verify=not no_verify, sample=sample, format=fmt, output=output)
    loaded = [_load(p) for p in instances] or None
    try:
        rows = run_experiment(config, loaded)
    except MechanismError as exc:
        raise click.ClickException(str(exc))
    _write(emit_report(rows, fmt), output)
    if any(r.get("verified") is False for r in rows):
        sys.exit(1)


@main.command()
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@mechanism_options
def verify(instance, kinds, gamma, alpha, oracle, matching_stop):
    """Brute-force checks of one instance; exit code 1 if any fails."""
    inst = _load(instance)
    cache = profile_cache(inst)
    reports = [run_checks(s, inst, cache) for s in _build_specs(kinds, gamma, alpha, oracle, matching_stop)]
    click.echo(json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True))
    if not all(r.passed for r in reports):
        sys.exit(1)


@main.command()
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@mechanism_options
def payments(instance, kinds, gamma, alpha, oracle, matching_stop):
    """Threshold payments of every branch as JSON."""
    inst = _load(instance)
    out = []
    for spec in _build_specs(kinds, gamma, alpha, oracle, matching_stop):
        outcome = payments_for_outcome(spec, inst)
        out.append({
            "mechanism": spec.label,
            "branches": [
                {"name": b.name, "probability": format_rational(p),
                 "payments": {str(i): format_rational(v) for i, v in sorted(o.payments.items())},
                 "total": format_rational(o.total_payment)}
                for b, (p, o) in zip(branches(spec), outcome.branches)
            ],
        })
    click.echo(json.dumps(out, indent=2))


@main.command()
@mechanism_options
@generator_options
@click.option("--trials", type=int, default=20, show_default=True)
def bench(kinds, gamma, alpha, oracle, matching_stop, family, n, seed, theta_cap, trials):
    """Time payments and verification per mechanism on a generated stream."""
    specs = _build_specs(kinds, gamma, alpha, oracle, matching_stop)
    gen = _generator(family, n, seed, theta_cap)
    insts = [gen_instance(gen, t) for t in range(trials)]
    click.echo("mechanism\tpayments_s\tverify_s\tfailures")
    failed = False
    for spec in specs:
        t0 = time.perf_counter()
        for inst in insts:
            payments_for_outcome(spec, inst)
        t1 = time.perf_counter()
        bad = sum(not run_checks(spec, inst).passed for inst in insts)
        t2 = time.perf_counter()
        failed |= bad > 0
        click.echo(f"{spec.label}\t{t1 - t0:.3f}\t{t2 - t1:.3f}\t{bad}")
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
