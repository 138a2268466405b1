"""Parametric probabilistic automata, DFAs and the constructions between them.

A pPA maps (state, action) pairs to parametric distributions over
successor states and labels each such pair with an alphabet symbol.
Composite actions are tuples following the three cases of parallel
composition: ``(a1, a2)`` when both components synchronise on a shared
label, ``(a1, Idle(l))`` when only the left component moves and
``(Idle(l), a2)`` when only the right one does.  The ``Idle`` marker keeps
action ids and alphabet symbols apart, so projection stays syntactic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

from .algebra import ONE, Polynomial, Valuation, parse_polynomial
from .errors import (
    ActionAlphabetClash,
    AlphabetNotContained,
    DanglingSuccessor,
    InvalidDFA,
    InvalidModel,
    LabelOutsideAlphabet,
    NoInitialState,
    ParseError,
)

State = Hashable
Action = Hashable


@dataclass(frozen=True, order=True)
class Idle:
    """Slot of a composite action for a component that does not move."""

    label: str

    def __str__(self):
        return self.label


def render(x) -> str:
    """Canonical text for states and actions, including composite tuples."""
    if isinstance(x, tuple):
        return "(" + ",".join(render(y) for y in x) + ")"
    return str(x)


def sort_key(x):
    return render(x)


def fresh_name(base: str, taken: Iterable) -> str:
    taken = {render(t) for t in taken}
    name = base
    while name in taken:
        name += "'"
    return name


class PPA:
    """A parametric probabilistic automaton; treated as immutable."""

    def __init__(self, name: str, states: Sequence[State], initial: State,
                 params: Iterable[str], trans: Mapping[tuple, Mapping[State, Polynomial]],
                 labels: Mapping[tuple, str], alphabet: Iterable[str]):
        self.name = name
        self.states = tuple(states)
        self.initial = initial
        self.params = frozenset(params)
        self.trans = {}
        for key, dist in trans.items():
            row = {}
            for succ, prob in dist.items():
                prob = Polynomial.coerce(prob)
                if not prob.is_zero():
                    row[succ] = prob
            self.trans[key] = row
        self.labels = dict(labels)
        self.alphabet = frozenset(alphabet)
        enabled: dict[State, list] = {s: [] for s in self.states}
        for s, a in self.trans:
            enabled.setdefault(s, []).append(a)
        self._enabled = {s: sorted(acts, key=sort_key) for s, acts in enabled.items()}

    @property
    def actions(self) -> frozenset:
        return frozenset(a for _, a in self.trans)

    def enabled(self, s: State) -> list:
        return self._enabled.get(s, [])

    def dist(self, s: State, a: Action) -> dict[State, Polynomial]:
        return self.trans[(s, a)]

    def label(self, s: State, a: Action) -> str:
        return self.labels[(s, a)]

    def used_labels(self) -> frozenset[str]:
        return frozenset(self.labels.values())

    def __repr__(self):
        return f"PPA({self.name!r}, {len(self.states)} states)"


# validation and instantiation


@dataclass
class ValidationReport:
    valid: bool
    violations: list[tuple[str, str]] = field(default_factory=list)
    enabled: dict = field(default_factory=dict)

    def raise_first(self):
        if self.valid:
            return
        kind, msg = self.violations[0]
        exc = {
            "NoInitialState": NoInitialState,
            "DanglingSuccessor": DanglingSuccessor,
            "LabelOutsideAlphabet": LabelOutsideAlphabet,
        }.get(kind, InvalidModel)
        raise exc(msg)

    def lines(self) -> list[str]:
        out = [f"valid: {'yes' if self.valid else 'no'}"]
        out += [f"violation: {kind}: {msg}" for kind, msg in self.violations]
        for s, acts in self.enabled.items():
            out.append(f"enabled {render(s)}: {' '.join(render(a) for a in acts)}")
        return out


def validate_ppa(M: PPA) -> ValidationReport:
    v: list[tuple[str, str]] = []
    declared = set(M.states)
    if not M.states or M.initial not in declared:
        v.append(("NoInitialState", f"initial state {render(M.initial)} is not a declared state"))
    if len(declared) != len(M.states):
        v.append(("DuplicateState", "a state is declared twice"))
    for (s, a), row in M.trans.items():
        where = f"transition {render(s)} {render(a)}"
        if s not in declared:
            v.append(("UndeclaredState", f"{where}: source state is not declared"))
        if (s, a) not in M.labels:
            v.append(("MissingLabel", f"{where}: no label"))
        elif M.labels[(s, a)] not in M.alphabet:
            v.append(("LabelOutsideAlphabet", f"{where}: label {M.labels[(s, a)]!r} not in alphabet"))
        if not row:
            v.append(("EmptyDistribution", f"{where}: no successor with nonzero probability"))
        for succ, prob in row.items():
            if succ not in declared:
                v.append(("DanglingSuccessor", f"{where}: successor {render(succ)} is not declared"))
            extra = prob.params - M.params
            if extra:
                v.append(("UndeclaredParameter", f"{where}: parameters {sorted(extra)} not declared"))
    for key in M.labels:
        if key not in M.trans:
            v.append(("MissingTransition", f"label for {render(key[0])} {render(key[1])} without transition"))
    enabled = {s: M.enabled(s) for s in M.states}
    return ValidationReport(not v, v, enabled)


def _row_values(M: PPA, v: Valuation):
    for key, row in M.trans.items():
        yield key, row, {succ: prob.evaluate(v) for succ, prob in row.items()}


def is_well_defined(M: PPA, v: Valuation) -> bool:
    for _, _, vals in _row_values(M, v):
        if any(x < 0 or x > 1 for x in vals.values()) or sum(vals.values()) != 1:
            return False
    return True


def is_graph_preserving(M: PPA, v: Valuation) -> bool:
    for _, _, vals in _row_values(M, v):
        if any(x <= 0 or x > 1 for x in vals.values()) or sum(vals.values()) != 1:
            return False
    return True


def well_defined_diagnosis(M: PPA, v: Valuation) -> str | None:
    for (s, a), _, vals in _row_values(M, v):
        bad = [x for x in vals.values() if x < 0 or x > 1]
        total = sum(vals.values())
        if bad or total != 1:
            return f"row {render(s)} {render(a)} instantiates to {{{_fmt_row(vals)}}} (sum {total})"
    return None


def _fmt_row(vals):
    return ", ".join(f"{render(k)}: {x}" for k, x in sorted(vals.items(), key=lambda t: sort_key(t[0])))


def instantiate(M: PPA, v: Valuation) -> PPA:
    trans = {key: {succ: Polynomial.const(prob.evaluate(v)) for succ, prob in row.items()}
             for key, row in M.trans.items()}
    return PPA(M.name, M.states, M.initial, (), trans, M.labels, M.alphabet)


def reachable_states(M: PPA, start: State | None = None) -> list:
    start = M.initial if start is None else start
    seen = {start}
    order = [start]
    stack = [start]
    while stack:
        s = stack.pop()
        for a in M.enabled(s):
            for succ in M.trans[(s, a)]:
                if succ not in seen:
                    seen.add(succ)
                    order.append(succ)
                    stack.append(succ)
    return order


# composition and extensions


def parallel_compose(M1: PPA, M2: PPA) -> PPA:
    # Action ids never coincide with symbols here: idle slots carry an Idle
    # marker, so Act_i and A_1 u A_2 are disjoint by construction.  The
    # non-shared case pairs each action with its own label (Act_1 x (A_1\A_2)).
    for M in (M1, M2):
        if any(isinstance(a, Idle) for a in M.actions):
            raise ActionAlphabetClash(f"{M.name}: an action id is an idle marker")
    shared = M1.alphabet & M2.alphabet
    states = list(itertools.product(M1.states, M2.states))
    trans: dict = {}
    labels: dict = {}
    for s1, s2 in states:
        for a1 in M1.enabled(s1):
            l1 = M1.label(s1, a1)
            d1 = M1.dist(s1, a1)
            if l1 in shared:
                for a2 in M2.enabled(s2):
                    if M2.label(s2, a2) != l1:
                        continue
                    d2 = M2.dist(s2, a2)
                    key = ((s1, s2), (a1, a2))
                    trans[key] = {(t1, t2): p1 * p2 for t1, p1 in d1.items() for t2, p2 in d2.items()}
                    labels[key] = l1
            else:
                key = ((s1, s2), (a1, Idle(l1)))
                trans[key] = {(t1, s2): p1 for t1, p1 in d1.items()}
                labels[key] = l1
        for a2 in M2.enabled(s2):
            l2 = M2.label(s2, a2)
            if l2 in M1.alphabet:
                continue
            key = ((s1, s2), (Idle(l2), a2))
            trans[key] = {(s1, t2): p2 for t2, p2 in M2.dist(s2, a2).items()}
            labels[key] = l2
    return PPA(f"{M1.name}||{M2.name}", states, (M1.initial, M2.initial),
               M1.params | M2.params, trans, labels, M1.alphabet | M2.alphabet)


def compose_all(models: Sequence[PPA]) -> PPA:
    result = models[0]
    for M in models[1:]:
        result = parallel_compose(result, M)
    return result


def alphabet_extend(M: PPA, symbols: Iterable[str]) -> PPA:
    new = sorted(set(symbols) - M.alphabet)
    if not new:
        return M
    clash = [a for a in new if a in M.actions]
    if clash:
        raise ActionAlphabetClash(f"{M.name}: symbols {clash} are already action ids")
    trans = dict(M.trans)
    labels = dict(M.labels)
    for s in M.states:
        for a in new:
            trans[(s, a)] = {s: ONE}
            labels[(s, a)] = a
    return PPA(f"{M.name}^{{{','.join(new)}}}", M.states, M.initial, M.params,
               trans, labels, M.alphabet | set(new))


def tau_names(M: PPA) -> tuple[str, str]:
    """Deterministic fresh (tau symbol, sink state) names for ``M``."""
    tau = fresh_name("tau", set(M.alphabet) | set(M.actions))
    sink = fresh_name("s_" + tau, M.states)
    return tau, sink


def tau_extend(M: PPA) -> PPA:
    # The sink also gets a tau self-loop so that complete strategies exist
    # everywhere; the sink is absorbing either way.
    tau, sink = tau_names(M)
    trans = dict(M.trans)
    labels = dict(M.labels)
    for s in M.states + (sink,):
        trans[(s, tau)] = {sink: ONE}
        labels[(s, tau)] = tau
    return PPA(f"{M.name}_tau", M.states + (sink,), M.initial, M.params,
               trans, labels, M.alphabet | {tau})


# DFAs and products


class DFA:
    """Complete DFA whose accepting states recognise bad prefixes."""

    def __init__(self, name: str, states: Sequence, initial, accepting: Iterable,
                 alphabet: Iterable[str], edges: Mapping[tuple, object]):
        self.name = name
        self.states = tuple(states)
        self.initial = initial
        self.accepting = frozenset(accepting)
        self.alphabet = frozenset(alphabet)
        self.edges = dict(edges)

    def step(self, q, symbol: str):
        """Successor on ``symbol``; symbols outside the alphabet leave ``q`` fixed."""
        if symbol in self.alphabet:
            return self.edges[(q, symbol)]
        return q

    def run(self, word: Iterable[str]):
        q = self.initial
        for a in word:
            q = self.step(q, a)
        return q

    def has_bad_prefix(self, word: Sequence[str]) -> bool:
        q = self.initial
        if q in self.accepting:
            return True
        for a in word:
            q = self.step(q, a)
            if q in self.accepting:
                return True
        return False

    def __repr__(self):
        return f"DFA({self.name!r}, {len(self.states)} states)"


def validate_dfa(B: DFA) -> list[str]:
    problems = []
    declared = set(B.states)
    if B.initial not in declared:
        problems.append(f"initial state {B.initial} not declared")
    for q in B.accepting - declared:
        problems.append(f"accepting state {q} not declared")
    for q in B.states:
        for a in sorted(B.alphabet):
            if (q, a) not in B.edges:
                problems.append(f"missing edge from {q} on {a}")
            elif B.edges[(q, a)] not in declared:
                problems.append(f"edge from {q} on {a} leads to undeclared {B.edges[(q, a)]}")
            elif q in B.accepting and B.edges[(q, a)] not in B.accepting:
                problems.append(f"accepting state {q} is not absorbing on {a}")
    for (q, a) in B.edges:
        if a not in B.alphabet:
            problems.append(f"edge from {q} on {a} outside the alphabet")
    return problems


def check_dfa(B: DFA) -> DFA:
    problems = validate_dfa(B)
    if problems:
        raise InvalidDFA(f"{B.name}: " + "; ".join(problems))
    return B


def dfa_union(B1: DFA, B2: DFA) -> DFA:
    """Bad-prefix DFA of L1 u L2: a word is bad once both components saw a bad prefix."""
    alphabet = B1.alphabet | B2.alphabet
    states = list(itertools.product(B1.states, B2.states))
    edges = {((q1, q2), a): (B1.step(q1, a), B2.step(q2, a)) for q1, q2 in states for a in alphabet}
    accepting = [(q1, q2) for q1, q2 in states if q1 in B1.accepting and q2 in B2.accepting]
    return DFA(f"{B1.name}|{B2.name}", states, (B1.initial, B2.initial), accepting, alphabet, edges)


@dataclass
class Product:
    """pPA synchronised with DFAs; ``bad[i]`` holds states where DFA i accepts."""

    model: PPA
    dfas: tuple
    bad: tuple

    @property
    def any_bad(self) -> frozenset:
        return frozenset().union(*self.bad) if self.bad else frozenset()


def dfa_product(M: PPA, B: DFA) -> Product:
    if not B.alphabet <= M.alphabet:
        raise AlphabetNotContained(
            f"DFA {B.name} alphabet {sorted(B.alphabet - M.alphabet)} not in {M.name}")
    states = list(itertools.product(M.states, B.states))
    trans = {}
    labels = {}
    for s, q in states:
        for a in M.enabled(s):
            lab = M.label(s, a)
            q2 = B.step(q, lab)
            trans[((s, q), a)] = {(t, q2): p for t, p in M.dist(s, a).items()}
            labels[((s, q), a)] = lab
    P = PPA(f"{M.name}x{B.name}", states, (M.initial, B.initial), M.params, trans, labels, M.alphabet)
    bad = frozenset((s, q) for s, q in states if q in B.accepting)
    return Product(P, (B,), (bad,))


def query_product(M: PPA, dfas: Sequence[DFA]) -> Product:
    """Reachable part of M synchronised with every DFA; states are (s, (q1, ..., qk))."""
    for B in dfas:
        if not B.alphabet <= M.alphabet:
            raise AlphabetNotContained(
                f"DFA {B.name} alphabet {sorted(B.alphabet - M.alphabet)} not in {M.name}")
    init = (M.initial, tuple(B.initial for B in dfas))
    order = [init]
    seen = {init}
    trans = {}
    labels = {}
    i = 0
    while i < len(order):
        s, qs = order[i]
        i += 1
        for a in M.enabled(s):
            lab = M.label(s, a)
            q2 = tuple(B.step(q, lab) for B, q in zip(dfas, qs))
            row = {}
            for t, p in M.dist(s, a).items():
                succ = (t, q2)
                row[succ] = p
                if succ not in seen:
                    seen.add(succ)
                    order.append(succ)
            trans[((s, qs), a)] = row
            labels[((s, qs), a)] = lab
    P = PPA(M.name, order, init, M.params, trans, labels, M.alphabet)
    bad = tuple(frozenset(x for x in order if x[1][k] in B.accepting) for k, B in enumerate(dfas))
    return Product(P, tuple(dfas), bad)


# text formats


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _needs_renaming(items) -> bool:
    return any(not isinstance(x, str) or not x or any(c.isspace() or c in ",:=#" for c in x)
               for x in items)


def ppa_to_text(M: PPA) -> str:
    """Canonical file text; non-string state ids become dense integers."""
    lines = [f"ppa {_token(M.name)}"]
    rename = {s: str(i) for i, s in enumerate(M.states)} if _needs_renaming(M.states) else None
    st = (lambda s: rename[s]) if rename else str
    if rename:
        for s in M.states:
            lines.append(f"# {rename[s]} = {render(s)}")
    lines.append("alphabet " + " ".join(sorted(M.alphabet)))
    if M.params:
        lines.append("params " + " ".join(sorted(M.params)))
    lines.append("states " + " ".join(st(s) for s in M.states))
    lines.append(f"init {st(M.initial)}")
    for s in M.states:
        for a in M.enabled(s):
            row = M.dist(s, a)
            succ = ", ".join(f"{st(t)} = {row[t]}" for t in M.states if t in row)
            lines.append(f"trans {st(s)} {_token(render(a))} {M.label(s, a)} : {succ}")
    return "\n".join(lines) + "\n"


def _token(text: str) -> str:
    return text.replace(" ", "")


def parse_ppa(text: str, source: str = "<ppa>", check: bool = True) -> PPA:
    name = None
    alphabet: list[str] = []
    params: list[str] = []
    states: list[str] = []
    initial = None
    trans: dict = {}
    labels: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        if name is None:
            if word != "ppa" or not rest:
                raise ParseError(source, lineno, "'ppa <name>'", line)
            name = rest
        elif word == "alphabet":
            alphabet += rest.split()
        elif word == "params":
            params += rest.split()
        elif word == "states":
            states += rest.split()
        elif word == "init":
            if len(rest.split()) != 1:
                raise ParseError(source, lineno, "single initial state", rest)
            initial = rest
        elif word == "trans":
            head, sep, tail = rest.partition(":")
            parts = head.split()
            if len(parts) != 3:
                raise ParseError(source, lineno, "'trans <state> <action> <label> : ...'", head.strip())
            if not sep:
                raise ParseError(source, lineno, "':'", "end of line")
            s, a, lab = parts
            if (s, a) in trans:
                raise ParseError(source, lineno, "unique (state, action) pair", f"{s} {a}")
            row = {}
            for item in tail.split(","):
                succ, eq, poly = item.partition("=")
                succ = succ.strip()
                if not eq or not succ or " " in succ:
                    raise ParseError(source, lineno, "'<state> = <polynomial>'", item.strip())
                if succ in row:
                    raise ParseError(source, lineno, "each successor once", succ)
                row[succ] = parse_polynomial(poly, params, source, lineno)
            trans[(s, a)] = row
            labels[(s, a)] = lab
        else:
            raise ParseError(source, lineno, "one of alphabet/params/states/init/trans", word)
    if name is None:
        raise ParseError(source, 0, "'ppa <name>'", "empty file")
    M = PPA(name, states, initial, params, trans, labels, alphabet)
    if check:
        validate_ppa(M).raise_first()
    return M


def dfa_to_text(B: DFA) -> str:
    st = {q: render(q) for q in B.states}
    lines = [f"dfa {_token(B.name)}",
             "alphabet " + " ".join(sorted(B.alphabet)),
             "states " + " ".join(_token(st[q]) for q in B.states),
             f"init {_token(st[B.initial])}",
             "accepting " + " ".join(_token(st[q]) for q in B.states if q in B.accepting)]
    for q in B.states:
        for a in sorted(B.alphabet):
            lines.append(f"edge {_token(st[q])} {a} {_token(render(B.edges[(q, a)]))}")
    return "\n".join(lines) + "\n"


def parse_dfa(text: str, source: str = "<dfa>") -> DFA:
    name = None
    alphabet, states, accepting = [], [], []
    initial = None
    edges = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        if name is None:
            if word != "dfa" or not rest:
                raise ParseError(source, lineno, "'dfa <name>'", line)
            name = rest
        elif word == "alphabet":
            alphabet += rest.split()
        elif word == "states":
            states += rest.split()
        elif word == "init":
            initial = rest
        elif word == "accepting":
            accepting += rest.split()
        elif word == "edge":
            parts = rest.split()
            if len(parts) != 3:
                raise ParseError(source, lineno, "'edge <state> <symbol> <state>'", rest)
            q, a, q2 = parts
            if (q, a) in edges:
                raise ParseError(source, lineno, "one edge per (state, symbol)", f"{q} {a}")
            edges[(q, a)] = q2
        else:
            raise ParseError(source, lineno, "one of alphabet/states/init/accepting/edge", word)
    if name is None:
        raise ParseError(source, 0, "'dfa <name>'", "empty file")
    return check_dfa(DFA(name, states, initial, accepting, alphabet, edges))


def dot_lines(M: PPA, bad: Iterable = ()) -> Iterator[str]:
    """Graphviz rendering; polynomial labels are printed verbatim."""
    bad = set(bad)
    ids = {s: f"n{i}" for i, s in enumerate(M.states)}
    yield f'digraph "{M.name}" {{'
    yield "  rankdir=LR;"
    yield '  __init [shape=point, label=""];'
    for s in M.states:
        style = ", style=filled, fillcolor=salmon" if s in bad else ""
        yield f'  {ids[s]} [shape=circle, label="{render(s)}"{style}];'
    yield f"  __init -> {ids[M.initial]};"
    hubs = 0
    for s in M.states:
        for a in M.enabled(s):
            row = M.dist(s, a)
            lab = M.label(s, a)
            if len(row) == 1 and next(iter(row.values())) == ONE:
                t = next(iter(row))
                yield f'  {ids[s]} -> {ids[t]} [label="{lab}"];'
                continue
            hub = f"h{hubs}"
            hubs += 1
            yield f'  {hub} [shape=point, label=""];'
            yield f'  {ids[s]} -> {hub} [label="{lab}", arrowhead=none];'
            for t in M.states:
                if t in row:
                    yield f'  {hub} -> {ids[t]} [label="{row[t]}"];'
    yield "}"
