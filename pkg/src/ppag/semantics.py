"""Path measures, language probabilities, expected rewards and solution functions.

All numeric work is exact.  Induced Markov chains are built on the
reachable part of a model under a memoryless strategy; leftover mass of a
partial strategy simply leaves the chain (the path stops).  Safety
languages are given by bad-prefix DFAs, so Pr(L) = 1 - Pr(reach bad) in
the synchronised product.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import networkx as nx

from .algebra import (ONE, ZERO, Polynomial, RationalFunction, Region, Valuation,
                      parse_polynomial, region_sample)
from .automata import (DFA, PPA, Product, dfa_product, is_graph_preserving, is_well_defined,
                       query_product, render, sort_key, tau_extend)
from .errors import NegativeReward, ParseError, PPAError, SingularSystem
from .strategies import Strategy, deterministic, path_length


class _Infinite:
    """Distinguished value of a divergent expected total reward."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    __str__ = __repr__


INFINITE = _Infinite()


def compare(value, op: str, threshold: Fraction) -> bool:
    if value is INFINITE:
        return op in (">", ">=")
    return {"<": value < threshold, "<=": value <= threshold,
            ">": value > threshold, ">=": value >= threshold}[op]


def value_le(x, y) -> bool:
    if y is INFINITE:
        return True
    if x is INFINITE:
        return False
    return x <= y


# rewards


class RewardFunction:
    """Parametric reward per alphabet symbol; symbols outside the alphabet earn 0."""

    def __init__(self, rewards: Mapping[str, object], alphabet: Iterable[str] | None = None,
                 name: str = "rew"):
        self.name = name
        self.alphabet = frozenset(rewards if alphabet is None else alphabet)
        self.rewards = {a: Polynomial.coerce(rewards.get(a, ZERO)) for a in sorted(self.alphabet)}

    def __call__(self, symbol: str) -> Polynomial:
        return self.rewards.get(symbol, ZERO)

    @property
    def params(self) -> frozenset[str]:
        return frozenset().union(*(r.params for r in self.rewards.values()))

    def check(self, v: Valuation) -> None:
        for a, r in self.rewards.items():
            if r.evaluate(v) < 0:
                raise NegativeReward(f"reward {self.name} of {a} is {r.evaluate(v)} < 0")

    def __repr__(self):
        return f"RewardFunction({self.name!r})"


def reward_sum(R1: RewardFunction, R2: RewardFunction) -> RewardFunction:
    """Pointwise sum on shared symbols; each function alone elsewhere."""
    alphabet = R1.alphabet | R2.alphabet
    return RewardFunction({a: R1(a) + R2(a) for a in alphabet}, alphabet, f"{R1.name}+{R2.name}")


def reward_to_text(R: RewardFunction) -> str:
    lines = [f"reward {R.name}", "alphabet " + " ".join(sorted(R.alphabet))]
    lines += [f"{a} = {r}" for a, r in R.rewards.items()]
    return "\n".join(lines) + "\n"


def parse_reward(text: str, source: str = "<reward>") -> RewardFunction:
    name = None
    alphabet = None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if name is None:
            word, _, rest = line.partition(" ")
            if word != "reward" or not rest.strip():
                raise ParseError(source, lineno, "'reward <name>'", line)
            name = rest.strip()
        elif line.startswith("alphabet"):
            alphabet = line.split()[1:]
        else:
            sym, eq, poly = line.partition("=")
            sym = sym.strip()
            if not eq or not sym or " " in sym:
                raise ParseError(source, lineno, "'<symbol> = <polynomial>'", line)
            if alphabet is None:
                raise ParseError(source, lineno, "'alphabet ...' before reward lines", line)
            if sym not in alphabet:
                raise ParseError(source, lineno, "symbol of the declared alphabet", sym)
            if sym in values:
                raise ParseError(source, lineno, "each symbol once", sym)
            values[sym] = parse_polynomial(poly, None, source, lineno)
    if name is None:
        raise ParseError(source, 0, "'reward <name>'", "empty file")
    return RewardFunction(values, alphabet or [], name)


# finite paths


def finite_path_prob(M: PPA, v: Valuation, sigma: Strategy, path: Sequence) -> Fraction:
    if path[0] != M.initial:
        return Fraction(0)
    prob = Fraction(1)
    for j in range(1, len(path), 2):
        s, a, t = path[j - 1], path[j], path[j + 1]
        m = sigma.choice(tuple(path[:j])).get(a, 0)
        d = M.trans.get((s, a), {}).get(t)
        if not m or d is None:
            return Fraction(0)
        prob *= m * d.evaluate(v)
        if prob == 0:
            return prob
    return prob


def paths_of_length(M: PPA, k: int) -> Iterator[tuple]:
    frontier = [(M.initial,)]
    for _ in range(k):
        frontier = [p + (a, t) for p in frontier for a in M.enabled(p[-1]) for t in M.dist(p[-1], a)]
    yield from frontier


def bounded_bad_probability(M: PPA, v: Valuation, sigma: Strategy, B: DFA, horizon: int) -> Fraction:
    """Probability that a bad prefix of B is read within ``horizon`` steps (any strategy kind)."""
    if B.initial in B.accepting:
        return Fraction(1)
    total = Fraction(0)
    stack = [((M.initial,), B.initial, Fraction(1))]
    while stack:
        path, q, mass = stack.pop()
        if path_length(path) == horizon:
            continue
        s = path[-1]
        for a, m in sigma.choice(path).items():
            q2 = B.step(q, M.label(s, a))
            for t, d in M.dist(s, a).items():
                p = mass * m * d.evaluate(v)
                if p == 0:
                    continue
                if q2 in B.accepting:
                    total += p
                else:
                    stack.append((path + (a, t), q2, p))
    return total


# induced chains


def lookup_choice(sigma: Strategy, state) -> dict:
    """Memoryless choice at a product state, falling back to its model component."""
    table = sigma.memoryless
    if state in table:
        return table[state]
    if isinstance(state, tuple) and state and state[0] in table:
        return table[state[0]]
    return {}


@dataclass
class Chain:
    """Reachable induced chain; ``steps[s]`` lists (action, label, mass, successor row)."""

    initial: object
    order: list
    steps: dict

    def rows(self) -> dict:
        out = {}
        for s in self.order:
            row = {}
            for _, _, m, succ in self.steps[s]:
                for t, p in succ.items():
                    row[t] = row.get(t, 0) + m * p
            out[s] = row
        return out


def induced_chain(M: PPA, v: Valuation | None, choose: Callable) -> Chain:
    """Chain of ``M`` under memoryless ``choose(state) -> {action: mass}``.

    With ``v`` None the rows stay polynomial (parametric chain); edges follow
    nonzero entries.
    """
    order = [M.initial]
    seen = {M.initial}
    steps = {}
    i = 0
    while i < len(order):
        s = order[i]
        i += 1
        entries = []
        for a, m in choose(s).items():
            if m == 0:
                continue
            row = {}
            for t, d in M.dist(s, a).items():
                p = d if v is None else d.evaluate(v)
                if p == 0:
                    continue
                row[t] = p
                if t not in seen:
                    seen.add(t)
                    order.append(t)
            entries.append((a, M.label(s, a), m, row))
        steps[s] = entries
    return Chain(M.initial, order, steps)


def _backward_reach(rows: Mapping, targets: set) -> set:
    pred: dict = {}
    for s, row in rows.items():
        for t in row:
            pred.setdefault(t, set()).add(s)
    seen = set(t for t in targets if t in rows)
    stack = list(seen)
    while stack:
        t = stack.pop()
        for s in pred.get(t, ()):
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return seen


def solve_linear(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Exact Gauss-Jordan elimination with row pivoting."""
    n = len(matrix)
    A = [list(row) + [b] for row, b in zip(matrix, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise SingularSystem(f"no pivot in column {col}")
        A[col], A[piv] = A[piv], A[col]
        pivot_row = A[col]
        inv = 1 / pivot_row[col]
        for c in range(col, n + 1):
            pivot_row[c] *= inv
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                row = A[r]
                for c in range(col, n + 1):
                    if pivot_row[c]:
                        row[c] -= f * pivot_row[c]
    return [A[r][n] for r in range(n)]


def reach_probability(chain: Chain, targets: Iterable) -> Fraction:
    """Exact probability of eventually visiting ``targets`` in a numeric chain."""
    targets = set(targets)
    if chain.initial in targets:
        return Fraction(1)
    rows = chain.rows()
    can = _backward_reach(rows, targets)
    if chain.initial not in can:
        return Fraction(0)
    maybe = [s for s in chain.order if s in can and s not in targets]
    index = {s: k for k, s in enumerate(maybe)}
    matrix = []
    rhs = []
    for s in maybe:
        line = [Fraction(0)] * len(maybe)
        line[index[s]] += 1
        b = Fraction(0)
        for t, p in rows[s].items():
            if t in targets:
                b += p
            elif t in index:
                line[index[t]] -= p
        matrix.append(line)
        rhs.append(b)
    return solve_linear(matrix, rhs)[index[chain.initial]]


STOP = ("__stop__",)


def _recurrent_states(rows: Mapping, exact_mass: Callable) -> set:
    """States in bottom SCCs once leaking mass is routed to an explicit stop node."""
    G = nx.DiGraph()
    for s, row in rows.items():
        G.add_node(s)
        for t in row:
            G.add_edge(s, t)
        if exact_mass(s):
            G.add_edge(s, STOP)
    rec = set()
    C = nx.condensation(G)
    for c in C.nodes:
        if C.out_degree(c) == 0:
            rec |= set(C.nodes[c]["members"])
    rec.discard(STOP)
    return rec


def state_rewards(chain: Chain, R: RewardFunction, v: Valuation | None) -> dict:
    out = {}
    for s in chain.order:
        total = Fraction(0) if v is not None else ZERO
        for _, lab, m, _ in chain.steps[s]:
            r = R(lab)
            total = total + m * (r.evaluate(v) if v is not None else r)
        out[s] = total
    return out


def total_reward(chain: Chain, R: RewardFunction, v: Valuation):
    rows = chain.rows()
    rew = state_rewards(chain, R, v)
    leaks = lambda s: sum(rows[s].values()) != 1
    rec = _recurrent_states(rows, leaks)
    if any(rew[s] > 0 for s in rec):
        return INFINITE
    trans = [s for s in chain.order if s not in rec]
    if chain.initial in rec:
        return Fraction(0)
    index = {s: k for k, s in enumerate(trans)}
    matrix, rhs = [], []
    for s in trans:
        line = [Fraction(0)] * len(trans)
        line[index[s]] += 1
        for t, p in rows[s].items():
            if t in index:
                line[index[t]] -= p
        matrix.append(line)
        rhs.append(rew[s])
    return solve_linear(matrix, rhs)[index[chain.initial]]


# public measures


def language_prob_safety(M: PPA, v: Valuation, sigma: Strategy, B: DFA) -> Fraction:
    """Pr of the prefix-closed language with bad-prefix DFA B under a memoryless strategy.

    ``sigma`` may be keyed by product states ``(s, q)`` or by states of M.
    """
    P = dfa_product(M, B)
    chain = induced_chain(P.model, v, lambda x: lookup_choice(sigma, x))
    return 1 - reach_probability(chain, P.bad[0])


def language_prob_reach(M: PPA, v: Valuation, sigma: Strategy, B: DFA) -> Fraction:
    """Pr of eventually reading a word accepted by B."""
    return 1 - language_prob_safety(M, v, sigma, B)


def language_prob_omega(M: PPA, v: Valuation, sigma: Strategy, B: DFA) -> Fraction:
    """Pr that no bad prefix occurs and infinitely many symbols of A_B are read.

    This is the reading in which finite restricted traces are excluded from the
    language; it differs from the prefix-closed semantics when a strategy
    eventually stops producing symbols of the language alphabet.
    """
    P = dfa_product(M, B)
    chain = induced_chain(P.model, v, lambda x: lookup_choice(sigma, x))
    rows = chain.rows()
    rec = _recurrent_states(rows, lambda s: sum(rows[s].values()) != 1)
    G = nx.DiGraph()
    for s in rec:
        for t in rows[s]:
            if t in rec:
                G.add_edge(s, t)
        G.add_node(s)
    good = set()
    for comp in nx.strongly_connected_components(G):
        if comp & P.bad[0]:
            continue
        labels = {lab for s in comp for _, lab, m, _ in chain.steps[s] if m > 0}
        if labels & B.alphabet:
            good |= comp
    return reach_probability(chain, good) if good else Fraction(0)


def expected_total_reward(M: PPA, v: Valuation, sigma: Strategy, R: RewardFunction):
    R.check(v)
    chain = induced_chain(M, v, lambda x: lookup_choice(sigma, x))
    return total_reward(chain, R, v)


# witness class


def _product_signature_helpers(P: Product, rewards: Sequence[RewardFunction]):
    M = P.model
    status = {s: tuple(s in bad for bad in P.bad) for s in M.states}
    significant = set()
    for (s, a), row in M.trans.items():
        if any(not R(M.label(s, a)).is_zero() for R in rewards):
            significant.add(s)
        elif any(t[1] != s[1] for t in row):
            significant.add(s)
    rows = {s: {t: 1 for a in M.enabled(s) for t in M.dist(s, a)} for s in M.states}
    relevant = _backward_reach(rows, significant)
    return status, relevant


def witness_strategies(P: Product, rewards: Sequence[RewardFunction] = (),
                       merge: bool = True) -> Iterator[Strategy]:
    """Deterministic memoryless strategies of a product, up to equivalence.

    Only states reachable under the strategy get a choice.  With ``merge``,
    actions are identified when they cannot be told apart by any objective:
    same successor distribution after collapsing states from which no DFA
    component or reward can change any more, and the same rewards.  A
    reward-free self-loop is identified with a step into such a frozen state.
    States from which nothing can change get a fixed choice.
    """
    M = P.model
    status, relevant = _product_signature_helpers(P, rewards)
    position = {s: k for k, s in enumerate(M.states)}

    def succ_class(t):
        return ("frozen", status[t]) if t not in relevant else ("state", position[t])

    options: dict = {}
    for s in M.states:
        acts = M.enabled(s)
        if not acts:
            options[s] = [None]
        elif merge and s not in relevant:
            options[s] = [acts[0]]
        elif merge:
            seen = {}
            for a in acts:
                row = M.dist(s, a)
                rew = tuple(R(M.label(s, a)) for R in rewards)
                if len(row) == 1 and s in row and all(r.is_zero() for r in rew):
                    sig = (((("frozen", status[s]), ONE),), rew)
                else:
                    cls = {}
                    for t, p in row.items():
                        key = succ_class(t)
                        cls[key] = cls.get(key, ZERO) + p
                    sig = (tuple(sorted(cls.items(), key=lambda x: repr(x[0]))), rew)
                seen.setdefault(sig, a)
            options[s] = list(seen.values())
        else:
            options[s] = list(acts)

    counter = [0]

    def rec(assigned: dict, frontier: list):
        pending = [s for s in frontier if s not in assigned]
        if not pending:
            name = f"w{counter[0]}"
            counter[0] += 1
            yield deterministic(dict(assigned), name)
            return
        s = min(pending, key=position.get)
        rest = [x for x in pending if x != s]
        for a in options[s]:
            assigned[s] = a
            new = [] if a is None else [t for t in M.dist(s, a) if t not in assigned]
            yield from rec(assigned, rest + new)
            del assigned[s]

    yield from rec({}, [M.initial])


def count_witness_strategies(P: Product, rewards: Sequence[RewardFunction] = (), merge=True) -> int:
    return sum(1 for _ in witness_strategies(P, rewards, merge))


def extremal_language_prob(M: PPA, v: Valuation, B: DFA, completeness: str = "cmp"):
    """(min, max, argmin, argmax) of Pr(L) over deterministic memoryless strategies of the product."""
    base = tau_extend(M) if completeness == "prt" else M
    P = query_product(base, [B])
    lo = hi = None
    arg_lo = arg_hi = None
    for sigma in witness_strategies(P):
        chain = induced_chain(P.model, v, sigma.at_state)
        val = 1 - reach_probability(chain, P.bad[0])
        if lo is None or val < lo:
            lo, arg_lo = val, sigma
        if hi is None or val > hi:
            hi, arg_hi = val, sigma
    return lo, hi, arg_lo, arg_hi


# solution functions


@dataclass
class SolutionFunction:
    value: object  # RationalFunction or INFINITE
    kind: str  # "probability" or "expected-reward"
    domain_region: Region | None = None

    def evaluate(self, v: Valuation):
        return INFINITE if self.value is INFINITE else self.value.evaluate(v)

    def __str__(self):
        return str(self.value)


def bareiss_last(matrix: list[list[Polynomial]], rhs: list[Polynomial]) -> tuple[Polynomial, Polynomial]:
    """(numerator, denominator) of the last unknown of ``matrix x = rhs``.

    Fraction-free elimination keeps every entry polynomial; after the forward
    pass the last row holds det(A) and the determinant with the last column
    replaced by ``rhs`` (both up to the same sign).
    """
    n = len(matrix)
    A = [list(row) + [b] for row, b in zip(matrix, rhs)]
    prev = ONE
    for k in range(n - 1):
        piv = next((r for r in range(k, n) if not A[r][k].is_zero()), None)
        if piv is None:
            raise SingularSystem(f"zero pivot in column {k}")
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
        pk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            for j in range(k + 1, n + 1):
                val = pk * A[i][j] - aik * A[k][j]
                A[i][j] = val if prev == ONE else val.exact_div(prev)
            A[i][k] = ZERO
        prev = pk
    if A[n - 1][n - 1].is_zero():
        raise SingularSystem("zero pivot in the last column")
    return A[n - 1][n], A[n - 1][n - 1]


def _parametric_reach(chain: Chain, targets: set) -> RationalFunction:
    if chain.initial in targets:
        return RationalFunction(ONE)
    rows = chain.rows()
    can = _backward_reach(rows, targets)
    if chain.initial not in can:
        return RationalFunction(ZERO)
    maybe = [s for s in chain.order if s in can and s not in targets and s != chain.initial]
    maybe.append(chain.initial)
    return _parametric_solve(maybe, rows, {s: sum((p for t, p in rows[s].items() if t in targets), ZERO)
                                           for s in maybe})


def _parametric_solve(unknowns: list, rows: Mapping, rhs: Mapping) -> RationalFunction:
    index = {s: k for k, s in enumerate(unknowns)}
    matrix, b = [], []
    for s in unknowns:
        line = [ZERO] * len(unknowns)
        line[index[s]] = ONE
        for t, p in rows[s].items():
            if t in index:
                line[index[t]] = line[index[t]] - p
        matrix.append(line)
        b.append(rhs[s])
    num, den = bareiss_last(matrix, b)
    return RationalFunction(num, den)


def _parametric_reward(chain: Chain, R: RewardFunction):
    rows = chain.rows()
    rew = state_rewards(chain, R, None)
    rec = _recurrent_states(rows, lambda s: sum(rows[s].values(), ZERO) != ONE)
    if any(not rew[s].is_zero() for s in rec):
        return INFINITE
    if chain.initial in rec:
        return RationalFunction(ZERO)
    unknowns = [s for s in chain.order if s not in rec and s != chain.initial] + [chain.initial]
    return _parametric_solve(unknowns, rows, rew)


class SolutionMismatch(PPAError):
    pass


def _prepare_target(M: PPA, target):
    if isinstance(target, DFA):
        return dfa_product(M, target), "probability"
    return None, "expected-reward"


def solution_function(M: PPA, sigma: Strategy, target, region: Region | None = None,
                      verify_samples: int = 5, seed: int = 0) -> SolutionFunction:
    """Closed-form value of a memoryless strategy as a rational function of the parameters.

    ``target`` is a bad-prefix DFA (value = Pr of the safety language) or a
    RewardFunction (value = expected total reward).  With a region, the result
    is compared against exact numeric solves at up to ``verify_samples``
    graph-preserving sample points.
    """
    P, kind = _prepare_target(M, target)
    if P is not None:
        chain = induced_chain(P.model, None, lambda x: lookup_choice(sigma, x))
        value = 1 - _parametric_reach(chain, set(P.bad[0]))
        model = P.model
    else:
        chain = induced_chain(M, None, lambda x: lookup_choice(sigma, x))
        value = _parametric_reward(chain, target)
        model = M
    sol = SolutionFunction(value, kind, region)
    if region is not None and verify_samples:
        checked = 0
        for v in region_sample(region, 5, seed):
            if checked == verify_samples:
                break
            if not is_graph_preserving(model, v):
                continue
            if value is not INFINITE and value.den.evaluate(v) == 0:
                continue
            expected = numeric_value(M, v, sigma, target)
            if sol.evaluate(v) != expected:
                raise SolutionMismatch(f"closed form {value} gives {sol.evaluate(v)} but exact solve gives {expected}")
            checked += 1
    return sol


def numeric_value(M: PPA, v: Valuation, sigma: Strategy, target):
    if isinstance(target, DFA):
        return language_prob_safety(M, v, sigma, target)
    return expected_total_reward(M, v, sigma, target)
