import random
from fractions import Fraction
from pathlib import Path

import pytest

from ppag.algebra import Polynomial
from ppag.automata import PPA, parse_dfa, parse_ppa
from ppag.semantics import parse_reward
from ppag.strategies import parse_strategy

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


def load_ppa(name: str) -> PPA:
    return parse_ppa(fixture_text(name), name)


def load_dfa(name: str):
    return parse_dfa(fixture_text(name), name)


def load_reward(name: str):
    return parse_reward(fixture_text(name), name)


def load_strategy(name: str):
    return parse_strategy(fixture_text(name), name)


@pytest.fixture
def m1():
    return load_ppa("m1.ppa")


@pytest.fixture
def m2():
    return load_ppa("m2.ppa")


def random_ppa(rng: random.Random, name: str, labels, param: str, max_states: int = 4,
               shared_labels=()) -> PPA:
    """Small random pPA over ``labels``; some rows use ``param`` and ``1-param``."""
    n = rng.randint(1, max_states)
    states = [f"{name}{k}" for k in range(n)]
    p = Polynomial.var(param)
    trans, lab = {}, {}
    for s in states:
        for a in rng.sample(list(labels), rng.randint(0, min(2, len(labels)))):
            succ = rng.sample(states, min(len(states), rng.randint(1, 2)))
            if len(succ) == 2 and rng.random() < 0.6:
                row = {succ[0]: p, succ[1]: 1 - p}
            elif len(succ) == 2:
                w = Fraction(rng.randint(1, 9), 10)
                row = {succ[0]: w, succ[1]: 1 - w}
            else:
                row = {succ[0]: 1}
            trans[(s, a)] = row
            lab[(s, a)] = a
    return PPA(name, states, states[0], [param], trans, lab, labels)


def random_pair(rng: random.Random, max_states: int = 4):
    M1 = random_ppa(rng, "x", ["a", "b", "u"], "p", max_states)
    M2 = random_ppa(rng, "y", ["a", "b", "w"], "q", max_states)
    return M1, M2


def random_table_strategy(rng: random.Random, N: PPA, horizon: int):
    """History-dependent subdistributions over enabled actions for every path below ``horizon``."""
    from ppag.strategies import Strategy, composite_paths, path_length

    table = {}
    for path in composite_paths(N, horizon - 1):
        acts = N.enabled(path[-1])
        if not acts:
            continue
        weights = [rng.randint(0, 3) for _ in acts]
        total = sum(weights) + rng.randint(0, 1)
        if total == 0:
            continue
        table[path] = {a: Fraction(w, total) for a, w in zip(acts, weights) if w}
    assert all(path_length(p) < horizon for p in table)
    return Strategy(table=table, horizon=horizon, name="random")


# one PASS/FAIL line per acceptance criterion in the terminal summary

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" and not report.failed:
        return
    number, text = mark.args
    entry = _CRITERIA.setdefault(number, {"text": text, "tests": {}})
    prev = entry["tests"].get(item.name, True)
    entry["tests"][item.name] = prev and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        ok = all(entry["tests"].values())
        failed = [name for name, passed in entry["tests"].items() if not passed]
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {entry['text']}"
        if failed:
            line += f" (failing: {', '.join(failed)})"
        terminalreporter.write_line(line)
