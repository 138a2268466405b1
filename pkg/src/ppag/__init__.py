"""Assume-guarantee verification for parametric probabilistic automata.

Exact rational arithmetic throughout; universally quantified statements are
checked on deterministic region samples and finite witness strategy sets.
"""

from .algebra import (Polynomial, RationalFunction, Region, make_valuation, parse_polynomial, parse_region,
                      region_sample)
from .automata import (DFA, PPA, alphabet_extend, compose_all, dfa_product, dfa_union, instantiate,
                       parallel_compose, parse_dfa, parse_ppa, query_product, tau_extend, validate_ppa)
from .objectives import (CMP, PRT, AGTriple, MoQuery, Objective, StrategyClass, Verdict, check_ag_triple, fair,
                         prob_objective, query, region_sat, reward_objective, safety)
from .rules import (SAFETY, Certificate, Variant, apply_asymmetric, apply_asymmetric_n, apply_circular,
                    apply_conjunction, apply_interleaving, apply_monotonicity, apply_reward_sum, check_monotone,
                    cross_check, fair_variant)
from .semantics import (INFINITE, RewardFunction, expected_total_reward, language_prob_safety, parse_reward,
                        solution_function)
from .strategies import Strategy, deterministic, parse_strategy, project_strategy

__all__ = [name for name in dir() if not name.startswith("_")]
