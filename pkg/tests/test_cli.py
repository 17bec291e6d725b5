import json

from click.testing import CliRunner

from conftest import GOLDEN
from budgetfeasible import ExperimentConfig, GeneratorConfig, MechanismSpec, parse_instance
from budgetfeasible.cli import main


def invoke(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def test_gen_writes_a_parseable_instance(tmp_path):
    out = tmp_path / "inst.json"
    res = invoke("gen", "--family", "coverage", "--n", 5, "--seed", 1, "-o", out)
    assert res.exit_code == 0
    assert parse_instance(out.read_text()).n == 5
    again = invoke("gen", "--family", "coverage", "--n", 5, "--seed", 1)
    assert again.output == out.read_text()


def test_gen_rejects_bad_arguments():
    assert invoke("gen", "--n", 0).exit_code != 0
    res = invoke("gen", "--n", 18, "--theta-cap", "1/20")
    assert res.exit_code != 0 and "unattainable" in res.output


def test_run_on_a_golden_file():
    res = invoke("run", GOLDEN / "e2.json", "-m", "random_tm", "--gamma", "1/2")
    assert res.exit_code == 0
    (row,) = json.loads(res.output)
    assert row["ratio"] == "23/5"


def test_run_csv_and_sample():
    res = invoke("run", "-m", "random_eom", "-m", "greedy_tm", "--trials", 2, "--seed", 4,
                 "--format", "csv", "--sample")
    assert res.exit_code == 0
    lines = res.output.strip().splitlines()
    assert len(lines) == 5 and "ratio_decimal" in lines[0]


def test_run_is_deterministic():
    args = ("run", "-m", "random_om", "--oracle", "greedy3", "--trials", 2, "--seed", 8, "--n", 4, "--sample")
    assert invoke(*args).output == invoke(*args).output


def test_run_with_a_config_file(tmp_path):
    cfg = ExperimentConfig(GeneratorConfig("additive", n=4, seed=6), (MechanismSpec("greedy_om"),), trials=2)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    res = invoke("run", "--config", path)
    assert res.exit_code == 0
    assert len(json.loads(res.output)) == 2


def test_bad_parameters_are_usage_errors():
    assert invoke("run", GOLDEN / "e1.json", "--gamma", "3/2").exit_code == 2
    assert invoke("run", GOLDEN / "e1.json", "-m", "nope").exit_code == 2


def test_malformed_instance_names_the_field(tmp_path):
    data = json.loads((GOLDEN / "e1.json").read_text())
    data["agents"][0]["cost"] = "-1/2"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    res = invoke("verify", path)
    assert res.exit_code == 1 and "agents[0].cost" in res.output


def test_verify_passes_on_golden_files():
    for name in ("e1", "e2", "e3", "e4"):
        res = invoke("verify", GOLDEN / f"{name}.json", "-m", "random_tm", "-m", "det_eom", "-m", "det_large")
        assert res.exit_code == 0, res.output
        assert all(r["passed"] for r in json.loads(res.output))


def test_payments_subcommand():
    res = invoke("payments", GOLDEN / "e1.json", "-m", "greedy_tm")
    assert res.exit_code == 0
    (entry,) = json.loads(res.output)
    assert entry["branches"][0]["payments"] == {"1": "1/1"}


def test_bench_reports_each_mechanism():
    res = invoke("bench", "-m", "greedy_tm", "-m", "greedy_eom", "--trials", 2, "--n", 4)
    assert res.exit_code == 0
    assert len(res.output.strip().splitlines()) == 3


def test_failed_check_sets_the_exit_code(monkeypatch):
    import budgetfeasible.cli as cli
    from budgetfeasible import CheckResult, VerificationReport

    def failing(spec, inst, cache=None):
        return VerificationReport("x", spec, (CheckResult("monotone", False, {"agent": 1}),), None)

    monkeypatch.setattr(cli, "run_checks", failing)
    assert invoke("verify", GOLDEN / "e1.json").exit_code == 1
    assert invoke("bench", "--trials", 1, "--n", 3).exit_code == 1
