import csv
import io
import json
from fractions import Fraction

import pytest

from conftest import GOLDEN, e1, e2, e3, e4
from budgetfeasible import (ExperimentConfig, GeneratorConfig, InvalidArgument, MechanismSpec, emit_report,
                            gen_instance, instance_to_dict, large_market_theta, parse_instance, run_experiment)


def golden(name):
    return (GOLDEN / f"{name}.json").read_text()


@pytest.mark.parametrize("name, build", [("e1", e1), ("e2", e2), ("e3", e3), ("e4", e4)])
def test_golden_files_parse(name, build):
    inst = parse_instance(golden(name))
    want = build()
    assert inst.costs == want.costs and inst.budget == want.budget
    for mask in range(1 << inst.n):
        S = [i for i in inst.ids if mask >> (i - 1) & 1]
        assert inst.value(S) == want.value(S)


@pytest.mark.parametrize("name", ["e1", "e2", "e3", "e4"])
def test_round_trip(name):
    data = json.loads(golden(name))
    assert instance_to_dict(parse_instance(data)) == data


def _edit(**changes):
    data = json.loads(golden("e1"))
    for path, value in changes.items():
        node = data
        *head, last = path.split("__")
        for key in head:
            node = node[int(key)] if key.isdigit() else node[key]
        node[int(last) if last.isdigit() else last] = value
    return data


@pytest.mark.parametrize("data, field", [
    (_edit(agents__1__cost="-1/2"), "agents[1].cost"),
    (_edit(agents__1__cost="half"), "agents[1].cost"),
    (_edit(version=2), "version"),
    (_edit(agents__1__id=1), "agents[1].id"),
    (_edit(budget="0/1"), "budget"),
    (_edit(valuation__kind="cubic"), "valuation"),
])
def test_parse_errors_name_the_field(data, field):
    with pytest.raises(InvalidArgument, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_instance(data)


def test_parse_rejects_broken_json():
    with pytest.raises(InvalidArgument):
        parse_instance("{")


def test_generation_is_seeded():
    cfg = GeneratorConfig("coverage", n=6, seed=1)
    a, b = gen_instance(cfg, 3), gen_instance(cfg, 3)
    assert instance_to_dict(a) == instance_to_dict(b)
    assert instance_to_dict(gen_instance(cfg, 4)) != instance_to_dict(a)
    with pytest.raises(InvalidArgument):
        GeneratorConfig(n=0)


def test_theta_cap_is_respected():
    cfg = GeneratorConfig("additive", n=14, seed=5, theta_cap=Fraction(1, 10))
    for t in range(5):
        assert large_market_theta(gen_instance(cfg, t)) <= Fraction(1, 10)


def test_theta_cap_below_one_over_n_is_rejected():
    with pytest.raises(InvalidArgument, match="unattainable"):
        gen_instance(GeneratorConfig("additive", n=18, seed=5, theta_cap=Fraction(1, 20)))


def test_e2_row_shows_the_tight_ratio():
    (row,) = run_experiment(ExperimentConfig(mechanisms=(MechanismSpec("random_tm"),)), [e2()])
    assert row["ratio"] == Fraction(23, 5)
    assert row["verified"] and row["failed_checks"] == []
    assert all(b["total_payment"] <= 4 for b in row["branches"])


def test_empty_mechanism_list_gives_an_empty_report():
    assert run_experiment(ExperimentConfig(trials=3)) == []


def test_rows_are_ordered_by_instance_then_mechanism():
    specs = (MechanismSpec("greedy_tm"), MechanismSpec("random_eom"))
    rows = run_experiment(ExperimentConfig(GeneratorConfig(seed=3, n=4), specs, trials=2))
    assert [(r["index"], r["mechanism"]) for r in rows] == [
        (0, specs[0].label), (0, specs[1].label), (1, specs[0].label), (1, specs[1].label)]


def test_same_seed_gives_byte_identical_json():
    cfg = ExperimentConfig(GeneratorConfig("task_matching", n=5, seed=9),
                           (MechanismSpec("random_tm"), MechanismSpec("det_large")), trials=3, sample=True)
    assert emit_report(run_experiment(cfg)) == emit_report(run_experiment(cfg))


def test_csv_has_one_line_per_row_and_decimal_columns():
    rows = run_experiment(ExperimentConfig(mechanisms=(MechanismSpec("random_tm"),)), [e2()])
    text = emit_report(rows, "csv")
    table = list(csv.DictReader(io.StringIO(text)))
    assert len(table) == 1
    assert table[0]["ratio"] == "23/5" and table[0]["ratio_decimal"] == "4.600000"


def test_json_report_round_trips():
    rows = run_experiment(ExperimentConfig(mechanisms=(MechanismSpec("greedy_eom"),)), [e1()])
    text = emit_report(rows)
    assert emit_report(json.loads(text)) == text
    with pytest.raises(InvalidArgument):
        emit_report(rows, "xml")


def test_experiment_config_round_trip():
    cfg = ExperimentConfig(GeneratorConfig("matching", n=5, seed=2, theta_cap=None),
                           (MechanismSpec("det_large"), MechanismSpec("random_om", oracle="greedy3")),
                           trials=4, sample=True, format="csv")
    assert ExperimentConfig.from_dict(json.dumps(cfg.to_dict())) == cfg
    with pytest.raises(InvalidArgument):
        ExperimentConfig.from_dict({"mechanisms": [{"kind": "nope"}]})
    with pytest.raises(InvalidArgument):
        ExperimentConfig.from_dict({"colour": "red"})
