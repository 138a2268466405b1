import random
from fractions import Fraction as F

import pytest
from conftest import load_ppa, load_strategy, random_pair, random_table_strategy
from hypothesis import given, settings
from hypothesis import strategies as st

from ppag.algebra import make_valuation
from ppag.automata import Idle, instantiate, parallel_compose, tau_extend
from ppag.errors import HorizonTooSmall, InvalidStrategy, NotComplete, NotMemoryless, ParseError
from ppag.semantics import finite_path_prob
from ppag.strategies import (Strategy, bind_strategy, check_strategy, composite_paths, deterministic,
                             enumerate_memoryless_deterministic, from_tau_strategy, is_fair_memoryless,
                             lift_paths, parse_strategy, path_length, priority_strategy, project_path,
                             project_strategy, projection_data, strategy_to_text, to_tau_strategy)

V1 = make_valuation(p=F(1, 10))
V2 = make_valuation(p=F(1, 10), q=F(1, 10))


@pytest.fixture
def example(m1, m2):
    N = parallel_compose(m1, m2)
    return m1, m2, N, priority_strategy(N, ["a", "c", "frown"], ["b"])


def brute_force_projection(sigma, N_inst, i, path_i, action, horizon):
    """Conditional probability of ``action`` after ``path_i`` straight from composite path masses."""
    k = i - 1
    num = den = F(0)
    for path in composite_paths(N_inst, horizon):
        proj = project_path(path, i)
        mass = finite_path_prob(N_inst, {}, sigma, path)
        steps = path[1::2]
        if proj == path_i and (len(steps) == 0 or not isinstance(steps[-1][k], Idle)):
            den += mass  # minimal lift: the last step moved component i
        if proj == path_i and path_length(path) < horizon:
            num += mass * sum(m for a, m in sigma.choice(path).items() if a[k] == action)
    return num / den


def test_example_projection_against_brute_force(example):
    M1, M2, N, sigma = example
    N_inst = parallel_compose(instantiate(M1, V1), instantiate(M2, V2))
    sigma2 = project_strategy(sigma, M1, M2, 2, V1, V2, 6)
    for path, action, expected in [(("t0",), "a", F(1)),
                                   (("t0", "a", "t2"), "c", F(1, 10)),
                                   (("t0", "a", "t1"), "a", F(1, 10)),
                                   (("t0", "a", "t2", "c", "t3"), "frown", F(1))]:
        assert sigma2.choice(path).get(action, 0) == expected
        assert brute_force_projection(sigma, N_inst, 2, path, action, 6) == expected


def test_example_projection_onto_first_component(example):
    M1, M2, N, sigma = example
    sigma1 = project_strategy(sigma, M1, M2, 1, V1, V2, 4)
    assert sigma1.choice(("s0",)) == {"a": 1}
    # after a, M1 at s1 can only ever take b
    assert sigma1.choice(("s0", "a", "s1")) == {"b": 1}


def test_projection_needs_long_enough_horizon(example):
    _, _, N, _ = example
    with pytest.raises(HorizonTooSmall):
        lift_paths(("t0", "a", "t1", "a", "t3"), N, 2, 1)


def test_lift_paths_project_back(example):
    _, _, N, _ = example
    target = ("t0", "a", "t2", "c", "t4")
    lifts = lift_paths(target, N, 2, 4)
    assert lifts and all(project_path(p, 2) == target for p in lifts)
    assert (("s0", "t0"), ("a", "a"), ("s0", "t2"), ("c", "c"), ("s0", "t4")) in lifts


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_numerator_identity(seed):
    # numerator as lifted extensions equals numerator as lifted paths times the strategy
    rng = random.Random(seed)
    M1, M2 = random_pair(rng)
    v1, v2 = make_valuation(p=F(rng.randint(0, 4), 4)), make_valuation(q=F(rng.randint(0, 4), 4))
    N = parallel_compose(instantiate(M1, v1), instantiate(M2, v2))
    horizon = rng.randint(1, 4)
    sigma = random_table_strategy(rng, N, horizon)
    for i in (1, 2):
        data = projection_data(sigma, M1, M2, i, v1, v2, horizon)
        nonzero = lambda d: {k: x for k, x in d.items() if x}  # noqa: E731
        assert nonzero(data.num_lifted) == nonzero(data.num_direct)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_projection_missing_mass_is_no_move_probability(seed):
    # for a complete strategy the unassigned mass at the root is the chance that
    # component i does not move within the horizon (or before a deadlock)
    rng = random.Random(seed)
    M1, M2 = random_pair(rng, 3)
    v1, v2 = make_valuation(p=F(1, 2)), make_valuation(q=F(1, 3))
    N = parallel_compose(instantiate(M1, v1), instantiate(M2, v2))
    sigma = Strategy({s: {N.enabled(s)[0]: 1} for s in N.states if N.enabled(s)})
    horizon = 4
    for i in (1, 2):
        k = i - 1
        proj = project_strategy(sigma, M1, M2, i, v1, v2, horizon)
        root = (N.initial[k],)
        ends = [p for p in composite_paths(N, horizon) if path_length(p) == horizon or not N.enabled(p[-1])]
        stuck = sum(finite_path_prob(N, {}, sigma, p) for p in ends
                    if all(isinstance(a[k], Idle) for a in p[1::2]))
        assert 1 - sum(proj.choice(root).values()) == stuck


def test_fairness_by_bscc(example):
    M1, M2, N, sigma = example
    inst = instantiate(N, make_valuation(p=F(1, 2), q=F(1, 2)))
    assert is_fair_memoryless(sigma, inst, [["b", "c", "frown"]])
    assert not is_fair_memoryless(sigma, inst, [["a", "c", "frown"]])
    assert is_fair_memoryless(sigma, inst, [])
    partial = Strategy({s: {} for s in N.states})
    with pytest.raises(NotComplete):
        is_fair_memoryless(partial, inst, [["b"]])
    with pytest.raises(NotMemoryless):
        is_fair_memoryless(Strategy(table={(N.initial,): {}}, horizon=1), inst, [])


def test_enumeration_counts(m1):
    assert len(list(enumerate_memoryless_deterministic(m1, "cmp"))) == 3
    assert len(list(enumerate_memoryless_deterministic(m1, "prt"))) == 8
    with pytest.raises(ValueError):
        list(enumerate_memoryless_deterministic(m1, "fair"))


def test_tau_conversion_round_trip(m1):
    sigma = Strategy({"s0": {"a": F(1, 3), "b": F(1, 3)}, "s1": {}})
    tau = to_tau_strategy(sigma, m1)
    T = tau_extend(m1)
    assert tau.at_state("s0")["tau"] == F(1, 3)
    assert tau.at_state("s1") == {"tau": 1}
    assert all(sum(tau.at_state(s).values()) == 1 for s in T.states)
    assert from_tau_strategy(tau, m1) == sigma


def test_check_strategy_rejects_bad_entries(m1):
    with pytest.raises(InvalidStrategy):
        check_strategy(deterministic({"s1": "a"}), m1)
    with pytest.raises(InvalidStrategy):
        check_strategy(Strategy({"s0": {"a": F(2, 3), "b": F(2, 3)}}), m1)


def test_strategy_text_round_trip_memoryless():
    sigma = load_strategy("m2_route_t1.strategy")
    text = strategy_to_text(sigma)
    assert parse_strategy(text) == sigma
    assert strategy_to_text(parse_strategy(text)) == text


def test_strategy_text_round_trip_table():
    sigma = Strategy(table={("t0",): {"a": 1}, ("t0", "a", "t2"): {"c": F(1, 10)}}, horizon=3, name="tbl")
    text = strategy_to_text(sigma)
    assert "horizon 3" in text
    assert parse_strategy(text) == sigma


def test_composite_actions_parse_and_bind(m1, m2):
    N = parallel_compose(m1, m2)
    sigma = bind_strategy(load_strategy("prefer_acf.strategy"), N)
    assert sigma.at_state(("s0", "t0")) == {("a", "a"): 1}
    assert sigma.at_state(("s1", "t3")) == {(Idle("frown"), "frown"): 1}


def test_strategy_parse_errors():
    with pytest.raises(ParseError):
        parse_strategy("strategy x\nkind sometimes\n")
    with pytest.raises(ParseError):
        parse_strategy("strategy x\nkind mless\nat s0 a s1 : a = 1\n")
    with pytest.raises(ParseError):
        parse_strategy("strategy x\nkind table\nat s0 : a = 1\n")
    with pytest.raises(ParseError):
        parse_strategy("strategy x\nkind mless\nat s0 : a 1\n")


def test_table_strategy_horizon_enforced():
    with pytest.raises(InvalidStrategy):
        Strategy(table={("s0", "a", "s1"): {}}, horizon=0)


def test_valuation_independence_on_example(example):
    M1, M2, _, sigma = example
    base = project_strategy(sigma, M1, M2, 2, V1, V2, 5)
    for q in (F(1, 3), F(9, 10)):
        for p in (F(1, 2), F(9, 10)):
            assert project_strategy(sigma, M1, M2, 2, V1, make_valuation(p=p, q=q), 5).table == base.table


def test_projection_depends_on_the_other_valuation(example):
    M1, M2, _, sigma = example
    a = project_strategy(sigma, M1, M2, 2, make_valuation(p=F(1, 10)), V2, 4)
    b = project_strategy(sigma, M1, M2, 2, make_valuation(p=F(1, 2)), V2, 4)
    assert a.choice(("t0", "a", "t2")) != b.choice(("t0", "a", "t2"))


def test_random_fixture_models_load():
    assert load_ppa("sender.ppa").params == {"c"}
