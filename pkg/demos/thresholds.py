"""Watch one agent's fate as its bid rises, and where the payment lands."""
from fractions import Fraction

from budgetfeasible import GeneratorConfig, MechanismSpec, bisection_threshold, gen_instance
from budgetfeasible.mechanisms import branches
from budgetfeasible.payments import branch_threshold
from budgetfeasible.verify import BidProfile

inst = gen_instance(GeneratorConfig("additive", n=6, seed=0), 0)
print("budget", inst.budget, "costs", [str(c) for c in inst.costs])

for kind in ("greedy_tm", "greedy_eom", "greedy_om", "det_large"):
    spec = MechanismSpec(kind)
    (b,) = branches(spec)
    winners = sorted(b.allocate(inst))
    print(f"\n{spec.label}: winners {winners}")
    for i in winners:
        prof = BidProfile.of(b.allocate, inst, i)
        res = branch_threshold(b, inst, i)
        bis = bisection_threshold(spec, inst, i, Fraction(1, 2 ** 30))
        edges = [str(x) for x in prof.breakpoints]
        print(f"  agent {i}: cost {inst.cost(i)}, breakpoints {edges}")
        print(f"    swept threshold {res.value} after {res.reruns} re-runs, bisection {float(bis):.9f}")
