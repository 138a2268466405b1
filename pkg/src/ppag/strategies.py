"""Strategies, path and strategy projection, fairness and enumeration.

Finite paths are flat tuples ``(s0, a0, s1, a1, ..., sn)``.  A strategy
holds an optional path table (authoritative for the paths it lists) and an
optional memoryless table used for every other path; a path found in
neither gets the empty subdistribution, i.e. the strategy stops there.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import networkx as nx

from .algebra import Valuation, parse_rational
from .automata import PPA, Idle, instantiate, parallel_compose, render, sort_key, tau_names
from .errors import HorizonTooSmall, InvalidStrategy, NotComplete, NotMemoryless, ParseError

Path = tuple
SubDist = Mapping  # action -> Fraction


def path_length(path: Path) -> int:
    return len(path) // 2


def path_last(path: Path):
    return path[-1]


def _clean(dist: Mapping) -> dict:
    return {a: Fraction(m) for a, m in sorted(dist.items(), key=lambda t: sort_key(t[0])) if m != 0}


class Strategy:
    """Memoryless table and/or finite-path table up to a declared horizon."""

    def __init__(self, memoryless: Mapping | None = None, table: Mapping | None = None,
                 horizon: int | None = None, name: str = "sigma"):
        self.name = name
        self.memoryless = {s: _clean(d) for s, d in (memoryless or {}).items()}
        self.table = {tuple(p): _clean(d) for p, d in (table or {}).items()}
        if self.table and horizon is None:
            horizon = max(path_length(p) for p in self.table)
        self.horizon = horizon
        for p in self.table:
            if path_length(p) > horizon:
                raise InvalidStrategy(f"table key of length {path_length(p)} exceeds horizon {horizon}")

    @property
    def kind(self) -> str:
        return "mless" if self.horizon is None else "table"

    def is_memoryless(self) -> bool:
        return self.horizon is None

    def choice(self, path: Path) -> dict:
        path = tuple(path)
        if path in self.table:
            return self.table[path]
        return self.memoryless.get(path[-1], {})

    def at_state(self, s) -> dict:
        if not self.is_memoryless():
            raise NotMemoryless(f"strategy {self.name} is not memoryless")
        return self.memoryless.get(s, {})

    def __eq__(self, other):
        return (isinstance(other, Strategy) and self.memoryless == other.memoryless
                and self.table == other.table and self.horizon == other.horizon)

    def __repr__(self):
        return f"Strategy({self.name!r}, kind={self.kind})"


def deterministic(choices: Mapping, name: str = "sigma") -> Strategy:
    """Memoryless strategy from ``state -> action`` (``None`` means stop)."""
    return Strategy({s: ({a: 1} if a is not None else {}) for s, a in choices.items()}, name=name)


def check_strategy(sigma: Strategy, M: PPA) -> None:
    entries = list(sigma.memoryless.items()) + [(p[-1], d) for p, d in sigma.table.items()]
    for s, dist in entries:
        enabled = set(M.enabled(s))
        for a, m in dist.items():
            if a not in enabled:
                raise InvalidStrategy(f"action {render(a)} is not enabled at {render(s)}")
            if m < 0 or m > 1:
                raise InvalidStrategy(f"mass {m} outside [0,1] at {render(s)}")
        if sum(dist.values()) > 1:
            raise InvalidStrategy(f"masses at {render(s)} sum to more than 1")


def is_complete_memoryless(sigma: Strategy, M: PPA, states: Iterable | None = None) -> bool:
    states = M.states if states is None else states
    return all(sum(sigma.at_state(s).values()) == 1 for s in states if M.enabled(s))


def priority_strategy(M: PPA, preferred: Sequence[str], fallback: Sequence[str] = (),
                      name: str = "priority") -> Strategy:
    """At each state pick the first enabled action whose label comes first in the lists."""
    order = list(preferred) + list(fallback)
    choices = {}
    for s in M.states:
        best = None
        for a in M.enabled(s):
            lab = M.label(s, a)
            if lab in order and (best is None or order.index(lab) < order.index(M.label(s, best))):
                best = a
        choices[s] = best
    return deterministic(choices, name)


# tau conversions


def to_tau_strategy(sigma: Strategy, M: PPA) -> Strategy:
    """Complete memoryless strategy on the tau-extension: leftover mass goes to tau."""
    tau, sink = tau_names(M)
    table = {}
    for s in M.states:
        dist = dict(sigma.at_state(s))
        rest = 1 - sum(dist.values())
        if rest:
            dist[tau] = rest
        table[s] = dist
    table[sink] = {tau: 1}
    return Strategy(table, name=sigma.name + "_tau")


def from_tau_strategy(sigma_tau: Strategy, M: PPA) -> Strategy:
    """Partial memoryless strategy on ``M``: drop the tau mass."""
    tau, _ = tau_names(M)
    table = {s: {a: m for a, m in sigma_tau.at_state(s).items() if a != tau} for s in M.states}
    return Strategy(table, name=sigma_tau.name.removesuffix("_tau"))


# projection


def project_path(path: Path, i: int) -> Path:
    """Restrict a composite path to the steps taken by component ``i`` (1 or 2)."""
    k = i - 1
    out = [path[0][k]]
    for j in range(1, len(path), 2):
        a = path[j][k]
        if not isinstance(a, Idle):
            out += [a, path[j + 1][k]]
    return tuple(out)


def _extend_projection(proj: Path, action, succ, k: int) -> tuple[Path, bool]:
    a = action[k]
    if isinstance(a, Idle):
        return proj, False
    return proj + (a, succ[k]), True


def composite_paths(N: PPA, horizon: int) -> Iterator[Path]:
    """All paths of ``N`` of length at most ``horizon`` along nonzero entries."""
    stack = [(N.initial,)]
    while stack:
        path = stack.pop()
        yield path
        if path_length(path) == horizon:
            continue
        s = path[-1]
        for a in reversed(N.enabled(s)):
            for t in reversed(list(N.dist(s, a))):
                stack.append(path + (a, t))


def lift_paths(path_i: Path, composition: PPA, i: int, horizon: int) -> list[Path]:
    """Composite paths of length at most ``horizon`` projecting onto ``path_i``."""
    if horizon < path_length(path_i):
        raise HorizonTooSmall(f"horizon {horizon} shorter than path length {path_length(path_i)}")
    k = i - 1
    if composition.initial[k] != path_i[0]:
        return []
    out = []
    stack = [((composition.initial,), (path_i[0],))]
    while stack:
        path, proj = stack.pop()
        if proj == path_i:
            out.append(path)
        if path_length(path) == horizon:
            continue
        s = path[-1]
        for a in composition.enabled(s):
            for t in composition.dist(s, a):
                new_proj, moved = _extend_projection(proj, a, t, k)
                if moved and new_proj != path_i[:len(new_proj)]:
                    continue
                stack.append((path + (a, t), new_proj))
    return sorted(out, key=lambda p: (len(p), render(p)))


@dataclass
class Projection:
    """Result of projecting a strategy, with the intermediate sums kept for inspection.

    ``lifted[pi]`` is the probability of the lifted path set of ``pi`` (mass of
    its minimal lifts within the horizon); ``num_lifted`` is the numerator as a
    sum of lifted extensions and ``num_direct`` the same numerator summed over
    lifted paths times the composite strategy.
    """

    strategy: Strategy
    lifted: dict
    num_lifted: dict
    num_direct: dict


def projection_data(sigma: Strategy, M1: PPA, M2: PPA, i: int, v1: Valuation, v2: Valuation,
                    horizon: int) -> Projection:
    N = parallel_compose(instantiate(M1, v1), instantiate(M2, v2))
    k = i - 1
    lifted: dict = {}
    num_direct: dict = {}
    stack = [((N.initial,), (N.initial[k],), Fraction(1), True)]
    while stack:
        path, proj, mass, minimal = stack.pop()
        if minimal:
            lifted[proj] = lifted.get(proj, 0) + mass
        n = path_length(path)
        if n == horizon:
            continue
        s = path[-1]
        choice = sigma.choice(path)
        for a, m in choice.items():
            if isinstance(a[k], Idle):
                pass
            else:
                key = (proj, a[k])
                num_direct[key] = num_direct.get(key, 0) + mass * m
            for t, prob in N.dist(s, a).items():
                p = prob.constant_value()
                if p == 0:
                    continue
                new_proj, moved = _extend_projection(proj, a, t, k)
                stack.append((path + (a, t), new_proj, mass * m * p, moved))
    num_lifted: dict = {}
    for proj, mass in lifted.items():
        if len(proj) >= 3:
            key = (proj[:-2], proj[-2])
            num_lifted[key] = num_lifted.get(key, 0) + mass
    table = {}
    for proj, den in lifted.items():
        if den == 0 or path_length(proj) >= horizon:
            continue
        dist = {a: num / den for (p, a), num in num_direct.items() if p == proj and num}
        table[proj] = dist
    name = f"{sigma.name}|{i}"
    return Projection(Strategy(table=table, horizon=horizon, name=name), lifted, num_lifted, num_direct)


def project_strategy(sigma: Strategy, M1: PPA, M2: PPA, i: int, v1: Valuation, v2: Valuation,
                     horizon: int) -> Strategy:
    """Projection of ``sigma`` on M1[v1] || M2[v2] onto component ``i`` up to ``horizon``.

    Paths whose lifted set has probability 0 get the empty subdistribution.
    """
    return projection_data(sigma, M1, M2, i, v1, v2, horizon).strategy


# fairness


def induced_graph(sigma: Strategy, N: PPA) -> nx.DiGraph:
    """Reachable part of the chain induced by a memoryless strategy on a parameter-free pPA."""
    G = nx.DiGraph()
    G.add_node(N.initial)
    stack = [N.initial]
    while stack:
        s = stack.pop()
        for a, m in sigma.at_state(s).items():
            if m == 0:
                continue
            for t, prob in N.dist(s, a).items():
                if prob.constant_value() == 0:
                    continue
                if t not in G:
                    G.add_node(t)
                    stack.append(t)
                G.add_edge(s, t)
    return G


def bottom_sccs(G: nx.DiGraph) -> list[set]:
    C = nx.condensation(G)
    return [set(C.nodes[c]["members"]) for c in C.nodes if C.out_degree(c) == 0]


def is_fair_memoryless(sigma: Strategy, N: PPA, classes: Iterable[Iterable[str]]) -> bool:
    if not sigma.is_memoryless():
        raise NotMemoryless(f"strategy {sigma.name} is not memoryless")
    G = induced_graph(sigma, N)
    if not is_complete_memoryless(sigma, N, G.nodes):
        raise NotComplete(f"strategy {sigma.name} is partial on a reachable state")
    classes = [frozenset(c) for c in classes]
    for bscc in bottom_sccs(G):
        seen = {N.label(s, a) for s in bscc for a, m in sigma.at_state(s).items() if m > 0}
        if any(not (c & seen) for c in classes):
            return False
    return True


# enumeration


def enumerate_memoryless_deterministic(N: PPA, completeness: str = "cmp") -> Iterator[Strategy]:
    """Every deterministic memoryless strategy; ``prt`` also allows stopping."""
    if completeness not in ("cmp", "prt"):
        raise ValueError("completeness must be 'cmp' or 'prt'")
    options = []
    for s in N.states:
        acts = list(N.enabled(s))
        if completeness == "prt" or not acts:
            acts.append(None)
        options.append(acts)
    for idx, combo in enumerate(itertools.product(*options)):
        yield deterministic(dict(zip(N.states, combo)), name=f"md{idx}")


# text format


def strategy_to_text(sigma: Strategy) -> str:
    lines = [f"strategy {sigma.name}", f"kind {sigma.kind}"]
    if sigma.kind == "table":
        lines.append(f"horizon {sigma.horizon}")
        entries = sorted(sigma.table.items(), key=lambda t: (len(t[0]), [render(x) for x in t[0]]))
        keys = [(" ".join(render(x) for x in p), d) for p, d in entries]
    else:
        keys = [(render(s), d) for s, d in sigma.memoryless.items()]
    for key, dist in keys:
        body = ", ".join(f"{render(a)} = {m}" for a, m in dist.items())
        lines.append(f"at {key} : {body}".rstrip())
    return "\n".join(lines) + "\n"


def _split_top(text: str) -> list[str]:
    """Split at commas outside parentheses, so composite actions stay whole."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def parse_strategy(text: str, source: str = "<strategy>") -> Strategy:
    name = None
    kind = None
    horizon = None
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        if name is None:
            if word != "strategy" or not rest:
                raise ParseError(source, lineno, "'strategy <name>'", line)
            name = rest
        elif word == "kind":
            if rest not in ("mless", "table"):
                raise ParseError(source, lineno, "'mless' or 'table'", rest)
            kind = rest
        elif word == "horizon":
            if not rest.isdigit():
                raise ParseError(source, lineno, "nonnegative integer horizon", rest)
            horizon = int(rest)
        elif word == "at":
            head, sep, tail = rest.partition(":")
            key = head.split()
            if not sep or not key or len(key) % 2 == 0:
                raise ParseError(source, lineno, "'at <state> [<action> <state>]* : ...'", rest)
            dist = {}
            for item in filter(None, (x.strip() for x in _split_top(tail))):
                a, eq, m = item.partition("=")
                if not eq or not a.strip():
                    raise ParseError(source, lineno, "'<action> = <mass>'", item)
                dist[a.strip()] = parse_rational(m, source, lineno)
            entries.append((lineno, tuple(key), dist))
        else:
            raise ParseError(source, lineno, "one of kind/horizon/at", word)
    if name is None:
        raise ParseError(source, 0, "'strategy <name>'", "empty file")
    if kind is None:
        raise ParseError(source, 0, "'kind mless|table'", "nothing")
    if kind == "mless":
        table = {}
        for lineno, key, dist in entries:
            if len(key) != 1:
                raise ParseError(source, lineno, "a single state key for kind mless", " ".join(key))
            table[key[0]] = dist
        return Strategy(table, name=name)
    if horizon is None:
        raise ParseError(source, 0, "'horizon H' for kind table", "nothing")
    table = {}
    for lineno, key, dist in entries:
        if path_length(key) > horizon:
            raise ParseError(source, lineno, f"path of length at most {horizon}", " ".join(key))
        table[key] = dist
    return Strategy(table=table, horizon=horizon, name=name)


def bind_strategy(sigma: Strategy, M: PPA) -> Strategy:
    """Replace the text keys of a parsed strategy by the states and actions of ``M``.

    Composite states and actions are matched through their rendering, so a
    strategy file for a composition can write ``at (s0,t0) : (a,a) = 1``.
    """
    names: dict = {}
    for x in list(M.states) + sorted(M.actions, key=render):
        names.setdefault(render(x), x)

    def lookup(text, what):
        if text not in names:
            raise InvalidStrategy(f"{what} {text!r} does not occur in {M.name}")
        return names[text]

    def dist(d):
        return {lookup(a, "action"): m for a, m in d.items()}

    memoryless = {lookup(s, "state"): dist(d) for s, d in sigma.memoryless.items()}
    table = {}
    for path, d in sigma.table.items():
        table[tuple(lookup(x, "state" if k % 2 == 0 else "action") for k, x in enumerate(path))] = dist(d)
    bound = Strategy(memoryless, table, sigma.horizon, sigma.name)
    check_strategy(bound, M)
    return bound
