"""Acceptance criteria 1-11, exact arithmetic (tolerance 0).

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import random
import time
from fractions import Fraction as F

import pytest
from conftest import (FIXTURES, load_dfa, load_ppa, load_strategy, random_pair, random_ppa,
                      random_table_strategy)
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ppag.algebra import RationalFunction, make_valuation, parse_polynomial, parse_region, region_grid
from ppag.automata import instantiate, parallel_compose
from ppag.cli import Loader, build_certificate, parse_rule_file
from ppag.objectives import CMP, query, region_sat, safety
from ppag.rules import JUSTIFIED, PREMISE_FAILED, apply_asymmetric, apply_monotonicity, cross_check
from ppag.semantics import (extremal_language_prob, finite_path_prob, language_prob_omega,
                            language_prob_reach, language_prob_safety, solution_function)
from ppag.strategies import bind_strategy, deterministic, priority_strategy, project_strategy, projection_data

criterion = pytest.mark.criterion
TENTH = make_valuation(p=F(1, 10), q=F(1, 10))


def composition():
    return parallel_compose(load_ppa("m1.ppa"), load_ppa("m2.ppa"))


def prefer_acf(N):
    return priority_strategy(N, ["a", "c", "frown"], ["b"])


# 1


@criterion(1, "reach-t3 on M2 at p=q=1/10 is 1/10")
def test_reach_t3_running_example():
    start = time.perf_counter()
    M2 = load_ppa("m2.ppa")
    value = language_prob_reach(M2, TENTH, load_strategy("m2_route_t1.strategy"), load_dfa("saw_frown.dfa"))
    assert value == (1 - F(1, 10)) * F(1, 10) + F(1, 10) * F(1, 10) == F(1, 10)
    assert time.perf_counter() - start < 1


# 2


def example_projection(v2):
    M1, M2 = load_ppa("m1.ppa"), load_ppa("m2.ppa")
    N = parallel_compose(M1, M2)
    return project_strategy(prefer_acf(N), M1, M2, 2, make_valuation(p=F(1, 10)), v2, 6)


@criterion(2, "projection of the composite strategy onto M2")
def test_projection_entries():
    start = time.perf_counter()
    sigma2 = example_projection(TENTH)
    assert sigma2.choice(("t0",)).get("a") == 1
    assert sigma2.choice(("t0", "a", "t2")).get("c") == F(1, 10)
    assert sigma2.choice(("t0", "a", "t2", "c", "t3")).get("frown") == F(1, 10)
    assert time.perf_counter() - start < 1


@criterion(2, "projection of the composite strategy onto M2")
def test_projection_mixed_valuation():
    start = time.perf_counter()
    same = example_projection(TENTH)
    mixed = example_projection(make_valuation(p=F(9, 10), q=F(9, 10)))
    assert mixed.table == same.table
    assert time.perf_counter() - start < 1


# 3


@criterion(3, "projected path measure equals lifted measure")
@settings(max_examples=200, deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2**32 - 1))
def test_projection_measure_equality(seed):
    rng = random.Random(seed)
    M1, M2 = random_pair(rng)
    v1 = make_valuation(p=F(rng.randint(0, 10), 10))
    v2 = make_valuation(q=F(rng.randint(0, 10), 10))
    N = parallel_compose(instantiate(M1, v1), instantiate(M2, v2))
    horizon = rng.randint(1, 4)
    sigma = random_table_strategy(rng, N, horizon)
    for i, (M, v) in enumerate(((M1, v1), (M2, v2)), 1):
        data = projection_data(sigma, M1, M2, i, v1, v2, horizon)
        for path, lifted in data.lifted.items():
            assert finite_path_prob(instantiate(M, v), v, data.strategy, path) == lifted


@criterion(3, "projected path measure equals lifted measure")
def test_projection_measure_runtime():
    start = time.perf_counter()
    for seed in range(200):
        rng = random.Random(seed)
        M1, M2 = random_pair(rng)
        v1, v2 = make_valuation(p=F(1, 3)), make_valuation(q=F(2, 7))
        N = parallel_compose(instantiate(M1, v1), instantiate(M2, v2))
        sigma = random_table_strategy(rng, N, 4)
        for i, (M, v) in enumerate(((M1, v1), (M2, v2)), 1):
            data = projection_data(sigma, M1, M2, i, v1, v2, 4)
            assert all(finite_path_prob(instantiate(M, v), v, data.strategy, path) == lifted
                       for path, lifted in data.lifted.items())
    assert time.perf_counter() - start < 60


# 4


@criterion(4, "projection is independent of the component's own valuation")
@settings(max_examples=100, deadline=None, derandomize=True)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.integers(1, 9), st.integers(1, 9))
def test_valuation_independence(seed, a, b, c):
    rng = random.Random(seed)
    M1, M2 = random_pair(rng)
    v1 = make_valuation(p=F(a, 10))
    v2, v2b = make_valuation(q=F(b, 10)), make_valuation(q=F(c, 10))
    N = parallel_compose(instantiate(M1, v1), instantiate(M2, v2))
    horizon = rng.randint(1, 4)
    sigma = random_table_strategy(rng, N, horizon)
    left = project_strategy(sigma, M1, M2, 2, v1, v2, horizon)
    right = project_strategy(sigma, M1, M2, 2, v1, v2b, horizon)
    assert left.table == right.table
    # and symmetrically for the first component
    v1b = make_valuation(p=F(c, 10))
    assert (project_strategy(sigma, M1, M2, 1, v1, v2, horizon).table
            == project_strategy(sigma, M1, M2, 1, v1b, v2, horizon).table)


# 5


@criterion(5, "Pr(frown) under the prefer-a,c,frown strategy is p^2/10 + p(1-p)q")
def test_composed_frown_probability():
    N = composition()
    sigma = prefer_acf(N)
    B = load_dfa("no_frown.dfa")
    sol = solution_function(N, sigma, B)
    frown = 1 - sol.value
    expected = RationalFunction(parse_polynomial("p^2/10 + p*(1-p)*q"))
    assert frown == expected
    assert str(frown) == str(expected)
    samples = region_grid(parse_region("p:[0,1];q:[0,1]"), 5)[:10]
    assert len(samples) == 10
    for v in samples:
        assert 1 - language_prob_safety(N, v, sigma, B) == frown.evaluate(v)


# 6


@criterion(6, "solution function 1 - (p^2/10 + (p-p^2)q)")
def test_solution_function_closed_form():
    N = composition()
    sigma = prefer_acf(N)
    B = load_dfa("no_frown.dfa")
    R = parse_region("p:[0,1];q:[0,1]")
    sol = solution_function(N, sigma, B, region=R, verify_samples=5)
    assert sol.value == RationalFunction(parse_polynomial("1 - (p^2/10 + (p-p^2)*q)"))
    assert str(sol) == "p^2*q - 1/10*p^2 - p*q + 1"
    for v in region_grid(R, 5)[::5]:
        assert sol.evaluate(v) == language_prob_safety(N, v, sigma, B)


# 7


def mono_certificate(param, direction):
    R2 = parse_region("p:[0,1];q:[0,1]")
    return apply_monotonicity(load_ppa("m1.ppa"), load_ppa("m2.ppa"), parse_region("p:[0,1]"), R2,
                              param, direction, load_dfa("no_frown.dfa"))


@criterion(7, "monotonicity rule: down(q) justified, up(p) premise fails")
def test_monotonicity_down_q():
    cert = mono_certificate("q", "down")
    assert cert.status == JUSTIFIED
    assert cross_check(cert).agree
    sol = solution_function(composition(), prefer_acf(composition()), load_dfa("no_frown.dfa"))
    assert sol.value.derivative("q") == RationalFunction(parse_polynomial("-(p - p^2)"))
    for v in region_grid(parse_region("p:[0,1];q:[0,1]"), 5):
        assert sol.value.derivative("q").evaluate(v) <= 0


@criterion(7, "monotonicity rule: down(q) justified, up(p) premise fails")
def test_monotonicity_up_p_fails_with_sign_flip():
    cert = mono_certificate("p", "up")
    assert cert.status == PREMISE_FAILED
    failed = [v for _, v in cert.premises if v.status == "VIOLATED"]
    assert failed and any(n.startswith("sign flip") for n in failed[0].notes)
    # the composed closed form changes sign in p: positive near p=9/10, q=1
    N = composition()
    sol = solution_function(N, bind_strategy(load_strategy("prefer_acf.strategy"), N), load_dfa("no_frown.dfa"))
    dp = sol.value.derivative("p")
    assert dp == RationalFunction(parse_polynomial("-p/5 - q + 2*p*q"))
    assert dp.evaluate(make_valuation(p=F(9, 10), q=1)) == F(31, 50)
    assert dp.evaluate(make_valuation(p=0, q=1)) < 0


# 8


def asymmetric_certificate():
    return apply_asymmetric(load_ppa("m1.ppa"), load_ppa("m2.ppa"), parse_region("p:[0,1/10]"),
                            parse_region("p:[0,1/2];q:[0,1]"),
                            query(safety(F(9, 10), load_dfa("at_most_one_a.dfa"))),
                            query(safety(F(4, 5), load_dfa("no_frown.dfa"))))


@criterion(8, "asymmetric rule on the running example")
def test_asymmetric_justified_and_agrees():
    cert = asymmetric_certificate()
    assert cert.status == JUSTIFIED
    report = cross_check(cert)
    assert report.agree
    assert report.verdict.status == "HOLDS-ON-SAMPLES"


@criterion(8, "asymmetric rule on the running example")
def test_asymmetric_region_strictly_contained():
    cert = asymmetric_certificate()
    v = make_valuation(p=F(1, 4), q=1)
    assert not cert.conclusion.region.contains(v)
    verdict = region_sat(composition(), parse_region("p:[1/4,1/4];q:[0,1]"), CMP,
                         query(safety(F(4, 5), load_dfa("no_frown.dfa"))))
    assert verdict.status == "HOLDS-ON-SAMPLES"
    assert verdict.extremes[0][1] == F(129, 160)


# 9


def random_safety_instances():
    B = load_dfa("at_most_one_a.dfa")
    for seed in range(50):
        rng = random.Random(seed)
        M = random_ppa(rng, "z", ["a", "b", "u"], "p")
        yield seed, M, make_valuation(p=F(rng.randint(0, 10), 10)), B


@criterion(9, "safety min/max over partial strategies equal those over complete ones")
def test_safety_min_partial_equals_complete():
    for seed, M, v, B in random_safety_instances():
        assert extremal_language_prob(M, v, B, "prt")[0] == extremal_language_prob(M, v, B, "cmp")[0], seed


@criterion(9, "safety min/max over partial strategies equal those over complete ones")
def test_safety_max_partial_equals_complete():
    # Stopping at once is a partial strategy with value 1, so this equality
    # fails whenever every complete strategy risks a bad prefix.
    for seed, M, v, B in random_safety_instances():
        assert extremal_language_prob(M, v, B, "prt")[1] == extremal_language_prob(M, v, B, "cmp")[1], seed


# 10


@criterion(10, "always-b on n1||n2 has Pr(L)=1 under prefix-closed semantics")
def test_prefix_closed_contrast():
    N = parallel_compose(load_ppa("n1.ppa"), load_ppa("n2.ppa"))
    B = load_dfa("at_most_one_a_ac.dfa")
    always_b = deterministic({s: next(a for a in N.enabled(s) if N.label(s, a) == "b") for s in N.states})
    assert language_prob_safety(N, {}, always_b, B) == 1
    assert language_prob_omega(N, {}, always_b, B) == 0


@criterion(10, "always-b on n1||n2 has Pr(L)=1 under prefix-closed semantics")
def test_prefix_closed_contrast_reported(capsys):
    from ppag.cli import main

    fx = str(FIXTURES)
    code = main(["prob", "--model", f"{fx}/n1.ppa", "--model", f"{fx}/n2.ppa", "--strategy",
                 f"{fx}/always_b.strategy", "--dfa", f"{fx}/at_most_one_a_ac.dfa", "--mode", "omega"])
    lines = capsys.readouterr().out.splitlines()
    assert code == 0
    assert "value: 0" in lines
    assert "prefix-closed value: 1" in lines


# 11


RULE_FILES = sorted(FIXTURES.glob("*.rule"))


@criterion(11, "every justified fixture certificate cross-checks AGREE")
def test_rule_soundness_sweep():
    start = time.perf_counter()
    rules = set()
    for path in RULE_FILES:
        opts = parse_rule_file(str(path))
        rules.add(opts["rule"])
        cert = build_certificate(opts, Loader(str(path.parent)), 5, int(opts.get("seed", 0)))
        assert cert.justified, path.name
        report = cross_check(cert, 5)
        assert report.status == "AGREE", path.name
    assert rules == {"asym", "asym-n", "circ", "conj", "inter", "reward-sum", "mono"}
    assert time.perf_counter() - start < 300
