from fractions import Fraction as F

import pytest
from conftest import FIXTURES, load_dfa, load_ppa
from hypothesis import given, settings
from hypothesis import strategies as st

from ppag.algebra import make_valuation, parse_region
from ppag.automata import parallel_compose
from ppag.cli import Loader, build_certificate, parse_rule_file
from ppag.errors import (AlphabetSideConditionViolated, ComponentsNotDisjoint, FairnessSideConditionViolated,
                         NotSafeQuery)
from ppag.objectives import CMP, query, region_sat, reward_objective, safety
from ppag.rules import (JUSTIFIED, PREMISE_FAILED, SAFETY, VACUOUS, Variant, apply_asymmetric, apply_asymmetric_n,
                        apply_conjunction, apply_interleaving, check_monotone, cross_check, fair_variant,
                        interleaving_threshold, solution_functions)
from ppag.semantics import RewardFunction


def certificate(rule_file, **overrides):
    opts = parse_rule_file(str(FIXTURES / rule_file))
    opts.update(overrides)
    return build_certificate(opts, Loader(str(FIXTURES)), 5, 0)


def A():
    return query(safety(F(9, 10), load_dfa("at_most_one_a.dfa")))


def G():
    return query(safety(F(4, 5), load_dfa("no_frown.dfa")))


@pytest.mark.parametrize("rule_file", sorted(p.name for p in FIXTURES.glob("*.rule")))
def test_fixture_rules_are_justified_and_sound(rule_file):
    cert = certificate(rule_file)
    assert cert.status == JUSTIFIED
    assert cert.lines()[-1] == "status: JUSTIFIED"
    assert cross_check(cert).status == "AGREE"


def test_asymmetric_premises(m1, m2):
    cert = apply_asymmetric(m1, m2, parse_region("p:[0,1/10]"), parse_region("p:[0,1/2];q:[0,1]"), A(), G())
    (l1, p1), (l2, p2) = cert.premises
    assert p1.extremes[0][1] == F(9, 10)
    assert p2.extremes[0][1] == F(19, 20)
    assert str(cert.conclusion.region) == "p:[0,1/10];q:[0,1]"
    assert cert.conclusion.model.name == "m1||m2"


def test_n_equal_two_is_the_asymmetric_rule(m1, m2):
    R1, R2 = parse_region("p:[0,1/10]"), parse_region("p:[0,1/2];q:[0,1]")
    one = apply_asymmetric(m1, m2, R1, R2, A(), G())
    many = apply_asymmetric_n([m1, m2], [R1, R2], [A()], G())
    assert one.lines() == many.lines()


def test_asymmetric_n_nests_certificates():
    cert = certificate("sender_channel_receiver.rule")
    assert cert.rule == "asymmetric-n (n=3)"
    first = cert.premises[0][1]
    assert first.rule == "asymmetric-n step 1" and first.status == JUSTIFIED
    assert cross_check(cert).verdict.extremes[0][1] == F(729, 1000)


def test_incompleteness_at_quarter(m1, m2):
    # the composition meets G at p = 1/4, yet premise 1 does not hold there
    R1 = parse_region("p:[1/4,1/4]")
    cert = apply_asymmetric(m1, m2, R1, parse_region("p:[0,1/2];q:[0,1]"), A(), G())
    assert cert.status == PREMISE_FAILED
    direct = region_sat(parallel_compose(m1, m2), parse_region("p:[1/4,1/4];q:[0,1]"), CMP, G())
    assert direct.status == "HOLDS-ON-SAMPLES"
    assert cross_check(cert).status == "SKIPPED"


def test_empty_intersection_is_vacuous(m1, m2):
    cert = apply_asymmetric(m1, m2, parse_region("p:[0,1/10]"), parse_region("p:[1/5,1/2];q:[0,1]"), A(), G())
    assert cert.status == VACUOUS and cert.justified
    assert cert.premises == []
    assert "empty" in cert.conclusion.region_text()
    assert cross_check(cert).status == "AGREE"


def test_alphabet_side_condition(m1, m2):
    with pytest.raises(AlphabetSideConditionViolated):
        apply_asymmetric(m2, m1, parse_region("p:[0,1];q:[0,1]"), parse_region("p:[0,1]"), A(), G())
    with pytest.raises(AlphabetSideConditionViolated):
        apply_conjunction(m2, parse_region("p:[0,1];q:[0,1]"), parse_region("p:[0,1];q:[0,1]"),
                          query(), G(), query(), G())


def test_safety_variant_needs_safety_queries(m1, m2):
    reward = query(reward_objective("<=", 3, RewardFunction({"a": 1})))
    with pytest.raises(NotSafeQuery):
        apply_asymmetric(m1, m2, parse_region("p:[0,1]"), parse_region("p:[0,1];q:[0,1]"), reward, G())


def test_fairness_side_condition(m1, m2):
    with pytest.raises(FairnessSideConditionViolated):
        apply_asymmetric(m1, m2, parse_region("p:[1/100,1/10]"), parse_region("p:[1/100,1/2];q:[1/100,99/100]"),
                         A(), G(), fair_variant([["frown"]], [["b"]]))


def test_fair_asymmetric_is_justified(m1, m2):
    cert = apply_asymmetric(m1, m2, parse_region("p:[1/100,1/10]"),
                            parse_region("p:[1/100,1/2];q:[1/100,99/100]"), A(), G(),
                            fair_variant([["b"]], [["b"]]))
    assert cert.status == JUSTIFIED
    assert cert.variant == "fair(b | b)"
    assert cross_check(cert).agree


def test_variant_names():
    assert str(SAFETY) == "safety"
    assert str(fair_variant([["b"]], [])) == "fair(b)"
    with pytest.raises(ValueError):
        Variant("sometimes")


def test_circular_premise_three_can_fail():
    cert = certificate("circular.rule", r3="q:[0,1/2]")
    assert cert.status == PREMISE_FAILED
    assert [v.status for _, v in cert.premises][2] == "VIOLATED"
    assert cross_check(cert).status == "SKIPPED"


def test_interleaving_threshold():
    assert interleaving_threshold(F(9, 10), F(4, 5)) == F(49, 50)
    cert = certificate("interleaving.rule")
    assert cross_check(cert).verdict.extremes[0][1] == F(49, 50)


def test_interleaving_needs_disjoint_components(m1, m2):
    B = load_dfa("no_frown.dfa")
    with pytest.raises(ComponentsNotDisjoint):
        apply_interleaving(m1, m2, parse_region("p:[0,1]"), parse_region("p:[0,1];q:[0,1]"), query(), query(),
                           B, F(1, 2), B, F(1, 2))


def test_reward_sum_with_infinite_value_fails_premise():
    cert = certificate("reward_sum.rule", r1="p:[0,1]")
    assert cert.status == PREMISE_FAILED
    good = certificate("reward_sum.rule")
    assert cross_check(good).verdict.extremes[0][1:] == (F(2), F(7, 2))


def test_conjunction_conclusion_is_a_triple():
    cert = certificate("conjunction.rule")
    assert cert.conclusion.kind == "triple"
    assert str(cert.conclusion.region) == "p:[0,1/2];q:[0,1/20]"


def test_monotone_premises(m2):
    M = load_ppa("m2b.ppa")
    B = load_dfa("no_frown.dfa")
    R = parse_region("p:[0,1];q:[0,1]")
    assert check_monotone(M, R, "q", "down", target=B).status == "HOLDS-ON-SAMPLES"
    up = check_monotone(M, R, "p", "up", target=B)
    assert up.status == "VIOLATED"
    assert up.counterexample["valuation"] == make_valuation(p=0, q=0)
    assert check_monotone(M, R, "p", "down", target=B).status == "VIOLATED"
    with pytest.raises(ValueError):
        check_monotone(M, R, "p", "sideways", target=B)


def test_monotonicity_rule_both_directions():
    assert certificate("monotonicity.rule").status == JUSTIFIED
    assert certificate("monotonicity.rule", direction="up").status == PREMISE_FAILED
    assert certificate("monotonicity.rule", param="p", direction="down").status == PREMISE_FAILED


def test_solution_functions_cover_the_witness_class(m2):
    sols = solution_functions(load_ppa("m2b.ppa"), CMP, load_dfa("no_frown.dfa"))
    texts = {str(s) for _, s in sols}
    assert "p*q - 1/10*p - q + 1" in texts
    assert "1" in texts


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10), st.integers(0, 10), st.integers(0, 20), st.integers(0, 20))
def test_shrinking_regions_stay_justified(a, b, c, d):
    # premises on a sub-box are implied by premises on the box
    m1, m2 = load_ppa("m1.ppa"), load_ppa("m2.ppa")
    lo1, hi1 = sorted((F(a, 100), F(b, 100)))
    lo2, hi2 = sorted((F(c, 40), F(d, 40)))
    R1 = parse_region(f"p:[{lo1},{hi1}]")
    R2 = parse_region(f"p:[{lo2},{hi2}];q:[0,1]")
    cert = apply_asymmetric(m1, m2, R1, R2, A(), G(), grid=3)
    assert cert.justified
    assert cross_check(cert).agree
