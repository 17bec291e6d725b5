"""Why the threshold mechanism needs the best-single fallback.

One free agent worth 1 beats four paid agents worth 9/10 each on bang per
buck, and once it is in, the greedy test refuses everyone else.
"""
from fractions import Fraction

from budgetfeasible import (AdditiveValuation, Instance, empirical_ratio, exhaustive_opt, greedy_order,
                            greedy_tm, payments_for_outcome, MechanismSpec)

eps = Fraction(1, 10)
inst = Instance.from_costs([0, 1, 1, 1, 1], 4, AdditiveValuation([1] + [1 - eps] * 4))

trace = greedy_order(inst)
print("greedy order:", trace.order)
print("marginals:   ", [str(m) for m in trace.marginals])

S = greedy_tm(Fraction(1, 2), inst)
print("greedy_tm(1/2) buys", sorted(S), "worth", inst.value(S))

_, opt = exhaustive_opt(inst)
print("optimum:", opt)

spec = MechanismSpec("random_tm")
print("random_tm(1/2) ratio:", empirical_ratio(spec, inst))

for p, out in payments_for_outcome(spec, inst).branches:
    pay = {i: str(v) for i, v in out.payments.items()}
    print(f"  branch with probability {p}: winners {sorted(out.winners)}, payments {pay}")
