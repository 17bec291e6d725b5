"""Empirical ratios across families, next to the worst-case guarantees.

The deterministic intersection rule is only promised anything in large
markets; on seven agents it often buys nothing, so the table also counts
empty outcomes and averages the ratio over the rest.
"""
import math
from collections import defaultdict

from budgetfeasible import ExperimentConfig, GeneratorConfig, MechanismSpec, run_experiment

GUARANTEE = {"random_tm": "5", "random_eom": "4", "det_eom": "4.56", "random_om": "5", "det_large": "-"}
specs = tuple(MechanismSpec(k) for k in GUARANTEE)
TRIALS = 40

ratios = defaultdict(list)
for family in ("additive", "coverage", "matching", "task_matching"):
    cfg = ExperimentConfig(GeneratorConfig(family, n=7, seed=11), specs, trials=TRIALS, verify=False)
    for row in run_experiment(cfg):
        ratios[family, row["mechanism"].split("(")[0]].append(float(row["ratio"]))

print(f"{'family':14} {'mechanism':11} {'empty':>6} {'mean':>6} {'worst':>6} {'bound':>6}")
for (family, kind), rs in sorted(ratios.items()):
    finite = [r for r in rs if not math.isinf(r)]
    empty = len(rs) - len(finite)
    mean = f"{sum(finite) / len(finite):6.3f}" if finite else "     -"
    worst = f"{max(finite):6.3f}" if finite else "     -"
    print(f"{family:14} {kind:11} {empty:>3}/{TRIALS} {mean} {worst} {GUARANTEE[kind]:>6}")
