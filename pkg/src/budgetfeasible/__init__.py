"""Budget-feasible procurement mechanisms for monotone submodular buyers.

Allocation rules live in :mod:`.mechanisms`, threshold payments in
:mod:`.payments` and brute-force property checks in :mod:`.verify`.
All arithmetic is exact.
"""
from .core import (Agent, ContractViolation, DegenerateInstanceError, DeterministicOutcome,
                   EmptyInstanceError, GreedyTrace, Instance, InvalidArgument, MechanismError,
                   MonotonicityViolation, RandomizedOutcome, Rational, SizeLimitError, as_rational,
                   best_single, feasible_filter, format_rational, greedy_order, large_market_theta,
                   marginal)
from .experiments import (ExperimentConfig, GeneratorConfig, emit_report, gen_instance,
                          instance_to_dict, parse_instance, run_experiment)
from .mechanisms import (MechanismSpec, apply_zero_marginal_stop, deterministic_eom, deterministic_large,
                         greedy_eom, greedy_om, greedy_tm, random_eom, random_om, random_om_modified,
                         random_tm, run_mechanism)
from .oracles import (ExhaustiveOracle, GreedyOracle, OracleRating, exhaustive_opt, measured_rating,
                      oracle_max_over_bids, sviridenko_greedy)
from .payments import (PaymentVector, ThresholdResult, bisection_threshold, payments_for_outcome,
                       run_with_payments, threshold_payment, threshold_sweep)
from .valuations import (AdditiveValuation, CoverageValuation, MatchingValuation, TaskValuedMatching,
                         Valuation, extract_assignment)
from .verify import (CheckResult, VerificationReport, check_assignment, check_budget_feasible, check_ir,
                     check_monotone, check_submodular, check_truthful, empirical_ratio, verify)

__all__ = [name for name, obj in list(globals().items())
           if not name.startswith("_") and not isinstance(obj, type(core))]
