"""Objectives, mo-queries, region satisfaction and assume-guarantee triples.

Universal quantification is discharged on finite witness sets: valuations
come from ``region_sample`` and strategies are the deterministic memoryless
strategies of the model synchronised with every DFA of the query (partial
strategies through the tau-extension, fair ones filtered by a BSCC check).
Verdicts therefore say HOLDS-ON-SAMPLES, never more.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .algebra import Region, Valuation, format_valuation, parse_rational, region_sample
from .automata import (DFA, PPA, instantiate, is_graph_preserving, is_well_defined, query_product,
                       render, tau_extend, well_defined_diagnosis)
from .errors import ParseError, RegionNotGraphPreserving, RegionNotWellDefined
from .semantics import (INFINITE, RewardFunction, compare, induced_chain, reach_probability,
                        total_reward, witness_strategies)
from .strategies import Strategy, is_fair_memoryless

OPS = ("<", "<=", ">", ">=")


@dataclass(frozen=True, eq=False)
class Objective:
    """``P op threshold (SAFE|REACH)(dfa)`` or ``E op threshold (reward)``."""

    kind: str
    op: str
    threshold: Fraction
    dfa: DFA | None = None
    mode: str = "safe"
    reward: RewardFunction | None = None
    source: str = ""

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown comparison {self.op!r}")
        if self.kind == "prob":
            if not 0 <= self.threshold <= 1:
                raise ValueError("probability threshold outside [0,1]")
            if self.dfa is None or self.mode not in ("safe", "reach"):
                raise ValueError("probabilistic objective needs a DFA and mode safe/reach")
        elif self.kind == "reward":
            if self.threshold < 0 or self.reward is None:
                raise ValueError("reward objective needs a reward function and threshold >= 0")
        else:
            raise ValueError(f"unknown objective kind {self.kind!r}")

    @property
    def alphabet(self) -> frozenset[str]:
        return self.dfa.alphabet if self.kind == "prob" else self.reward.alphabet

    @property
    def is_safety(self) -> bool:
        return self.kind == "prob" and self.mode == "safe" and self.op == ">="

    def with_threshold(self, threshold) -> "Objective":
        return Objective(self.kind, self.op, Fraction(threshold), self.dfa, self.mode, self.reward, self.source)

    def __str__(self):
        if self.kind == "prob":
            name = self.source or self.dfa.name
            return f"P{self.op}{self.threshold} {self.mode.upper()}({name})"
        return f"E{self.op}{self.threshold} REW({self.source or self.reward.name})"


def safety(threshold, dfa: DFA, source: str = "") -> Objective:
    return Objective("prob", ">=", Fraction(threshold), dfa, "safe", source=source)


def prob_objective(op: str, threshold, dfa: DFA, mode: str = "safe", source: str = "") -> Objective:
    return Objective("prob", op, Fraction(threshold), dfa, mode, source=source)


def reward_objective(op: str, threshold, reward: RewardFunction, source: str = "") -> Objective:
    return Objective("reward", op, Fraction(threshold), reward=reward, source=source)


class MoQuery:
    """Conjunction of objectives; evaluated under one strategy and valuation."""

    def __init__(self, objectives: Iterable[Objective] = ()):
        unique = []
        for o in objectives:
            if o not in unique:
                unique.append(o)
        self.objectives = tuple(unique)

    @property
    def alphabet(self) -> frozenset[str]:
        return frozenset().union(*(o.alphabet for o in self.objectives))

    @property
    def is_safe(self) -> bool:
        return all(o.is_safety for o in self.objectives)

    def __and__(self, other: "MoQuery") -> "MoQuery":
        return MoQuery(self.objectives + other.objectives)

    def __iter__(self):
        return iter(self.objectives)

    def __len__(self):
        return len(self.objectives)

    def __str__(self):
        return "; ".join(str(o) for o in self.objectives) or "true"


def query(*objectives: Objective) -> MoQuery:
    return MoQuery(objectives)


@dataclass(frozen=True)
class StrategyClass:
    kind: str  # cmp, prt or fair
    classes: tuple = ()

    def __post_init__(self):
        if self.kind not in ("cmp", "prt", "fair"):
            raise ValueError(f"unknown strategy class {self.kind!r}")

    def __str__(self):
        if self.kind != "fair":
            return self.kind
        return "fair(" + ";".join(",".join(sorted(c)) for c in self.classes) + ")"


CMP = StrategyClass("cmp")
PRT = StrategyClass("prt")


def fair(*classes: Iterable[str]) -> StrategyClass:
    return StrategyClass("fair", tuple(sorted((frozenset(c) for c in classes), key=sorted)))


# evaluation


def objective_value(obj: Objective, chain, product, dfa_index: dict, v: Valuation):
    if obj.kind == "prob":
        reach = reach_probability(chain, product.bad[dfa_index[id(obj.dfa)]])
        return 1 - reach if obj.mode == "safe" else reach
    obj.reward.check(v)
    return total_reward(chain, obj.reward, v)


def check_objective(M: PPA, v: Valuation, sigma: Strategy, obj: Objective) -> tuple[bool, object]:
    """Exact measured value of one objective and whether it meets the threshold.

    ``sigma`` is memoryless, keyed by states of M or of M synchronised with the DFA.
    """
    from .semantics import expected_total_reward, language_prob_safety

    if obj.kind == "prob":
        value = language_prob_safety(M, v, sigma, obj.dfa)
        if obj.mode == "reach":
            value = 1 - value
    else:
        value = expected_total_reward(M, v, sigma, obj.reward)
    return compare(value, obj.op, obj.threshold), value


class _Engine:
    """Witness class of a model for a list of objectives."""

    def __init__(self, M: PPA, cls: StrategyClass, objectives: Sequence[Objective]):
        self.M = M
        self.cls = cls
        base = tau_extend(M) if cls.kind == "prt" else M
        dfas = []
        for o in objectives:
            if o.kind == "prob" and all(d is not o.dfa for d in dfas):
                dfas.append(o.dfa)
        self.dfa_index = {id(d): k for k, d in enumerate(dfas)}
        self.product = query_product(base, dfas)
        rewards = [o.reward for o in objectives if o.kind == "reward"]
        self.strategies = list(witness_strategies(self.product, rewards, merge=cls.kind != "fair"))
        self.objectives = list(objectives)

    def filter_fair(self, v: Valuation):
        if self.cls.kind != "fair":
            return
        N = instantiate(self.product.model, v)
        kept = []
        for sigma in self.strategies:
            complete = all(sigma.at_state(s) or not N.enabled(s) for s in sigma.memoryless)
            if complete and is_fair_memoryless(sigma, N, self.cls.classes):
                kept.append(sigma)
        self.strategies = kept

    def values(self, sigma: Strategy, v: Valuation) -> list:
        chain = induced_chain(self.product.model, v, sigma.at_state)
        return [objective_value(o, chain, self.product, self.dfa_index, v) for o in self.objectives]


def describe_strategy(sigma: Strategy) -> str:
    parts = []
    for s, dist in sigma.memoryless.items():
        act = next(iter(dist), None)
        parts.append(f"{render(s)}->{render(act) if act is not None else 'stop'}")
    return " ".join(parts)


def witness_class_text(cls: StrategyClass) -> str:
    base = {"cmp": "complete", "prt": "partial via tau-extension", "fair": f"complete {cls}"}[cls.kind]
    return f"memoryless deterministic on model x query DFAs ({base}; indistinguishable choices merged)"


@dataclass
class Verdict:
    statement: str
    status: str
    grid: int
    seed: int
    witness_class: str
    samples: int
    strategies: int
    extremes: list = field(default_factory=list)
    counterexample: dict | None = None
    notes: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.status != "VIOLATED"

    def lines(self, decimal: int | None = None) -> list[str]:
        out = [f"statement: {self.statement}", f"verdict: {self.status}",
               f"grid: {self.grid}", f"seed: {self.seed}",
               f"witness-class: {self.witness_class}",
               f"samples: {self.samples}", f"strategies: {self.strategies}"]
        for name, lo, hi in self.extremes:
            out.append(f"extremes {name}: min={fmt_value(lo, decimal)} max={fmt_value(hi, decimal)}")
        if self.counterexample:
            ce = self.counterexample
            out.append(f"counterexample-valuation: {format_valuation(ce['valuation'])}")
            out.append(f"counterexample-strategy: {ce['strategy']}")
            for name, val in ce["values"]:
                out.append(f"counterexample-value {name}: {fmt_value(val, decimal)}")
        out += [f"note: {n}" for n in self.notes]
        return out


def fmt_value(x, decimal: int | None = None) -> str:
    if x is None:
        return "-"
    if x is INFINITE:
        return "INFINITE"
    text = str(x)
    if decimal is not None and isinstance(x, Fraction) and x.denominator != 1:
        text += f" (~{float(x):.{decimal}f})"
    return text


def _check_samples(M: PPA, samples, cls: StrategyClass, rewards=()):
    for v in samples:
        if not is_well_defined(M, v):
            raise RegionNotWellDefined(f"{format_valuation(v)}: {well_defined_diagnosis(M, v)}")
        for R in rewards:
            R.check(v)
        if cls.kind == "fair" and not is_graph_preserving(M, v):
            raise RegionNotGraphPreserving(f"{format_valuation(v)} is not graph-preserving for {M.name}")


def _update(extremes, values):
    for k, val in enumerate(values):
        lo, hi = extremes[k]
        if lo is None or (val is not INFINITE and (lo is INFINITE or val < lo)):
            lo = val
        if hi is None or hi is not INFINITE and (val is INFINITE or val > hi):
            hi = val
        extremes[k] = (lo, hi)


def _pairs(engine: _Engine, samples, strategies_outer: bool):
    if strategies_outer:
        for sigma in engine.strategies:
            for v in samples:
                yield v, sigma
    else:
        for v in samples:
            for sigma in engine.strategies:
                yield v, sigma


def region_sat(M: PPA, R: Region, cls: StrategyClass, Q: MoQuery, grid: int = 5, seed: int = 0,
               keep: Callable | None = None, strategies_outer: bool = False) -> Verdict:
    samples = region_sample(R, grid, seed, keep)
    statement = f"{M.name}, {R} |=[{cls}] {Q}"
    if not len(Q) or not samples:
        return Verdict(statement, "HOLDS-ON-SAMPLES", grid, seed, witness_class_text(cls), len(samples), 0,
                       notes=["vacuous: empty query or no sample"])
    rewards = [o.reward for o in Q if o.kind == "reward"]
    _check_samples(M, samples, cls, rewards)
    engine = _Engine(M, cls, list(Q))
    engine.filter_fair(samples[0])
    extremes = [(None, None)] * len(Q)
    counter = None
    for v, sigma in _pairs(engine, samples, strategies_outer):
        values = engine.values(sigma, v)
        _update(extremes, values)
        if counter is None and not all(compare(x, o.op, o.threshold) for x, o in zip(values, Q)):
            counter = {"valuation": v, "strategy": describe_strategy(sigma),
                       "values": [(str(o), x) for o, x in zip(Q, values)]}
    status = "VIOLATED" if counter else "HOLDS-ON-SAMPLES"
    return Verdict(statement, status, grid, seed, witness_class_text(cls), len(samples),
                   len(engine.strategies), [(str(o), lo, hi) for o, (lo, hi) in zip(Q, extremes)], counter)


@dataclass
class AGTriple:
    model: PPA
    region: Region
    strategy_class: StrategyClass
    assumption: MoQuery
    guarantee: MoQuery
    keep: Callable | None = None

    def __str__(self):
        return f"<{self.assumption}> {self.model.name}, {self.region} [{self.strategy_class}] <{self.guarantee}>"


def check_ag_triple(T: AGTriple, grid: int = 5, seed: int = 0, strategies_outer: bool = False) -> Verdict:
    M, cls = T.model, T.strategy_class
    samples = region_sample(T.region, grid, seed, T.keep)
    statement = str(T)
    objectives = list(T.assumption) + [o for o in T.guarantee if o not in T.assumption.objectives]
    if not samples or not len(T.guarantee):
        return Verdict(statement, "HOLDS-ON-SAMPLES", grid, seed, witness_class_text(cls), len(samples), 0,
                       notes=["vacuous: empty guarantee or no sample"])
    rewards = [o.reward for o in objectives if o.kind == "reward"]
    _check_samples(M, samples, cls, rewards)
    engine = _Engine(M, cls, objectives)
    engine.filter_fair(samples[0])
    index = {id(o): k for k, o in enumerate(objectives)}
    extremes = [(None, None)] * len(T.guarantee)
    counter = None
    assumed = 0
    for v, sigma in _pairs(engine, samples, strategies_outer):
        values = engine.values(sigma, v)
        if not all(compare(values[index[id(o)]], o.op, o.threshold) for o in T.assumption):
            continue
        assumed += 1
        gvals = [values[index[id(o)]] for o in T.guarantee]
        _update(extremes, gvals)
        if counter is None and not all(compare(x, o.op, o.threshold) for x, o in zip(gvals, T.guarantee)):
            counter = {"valuation": v, "strategy": describe_strategy(sigma),
                       "values": [(str(o), values[index[id(o)]]) for o in objectives]}
    if counter:
        status = "VIOLATED"
    elif assumed == 0:
        status = "VACUOUS"
    else:
        status = "HOLDS-ON-SAMPLES"
    notes = [f"assumption satisfied by {assumed} (valuation, strategy) pairs"]
    return Verdict(statement, status, grid, seed, witness_class_text(cls), len(samples),
                   len(engine.strategies), [(str(o), lo, hi) for o, (lo, hi) in zip(T.guarantee, extremes)],
                   counter, notes)


# text syntax

_OBJ = re.compile(r"\s*([PE])\s*(<=|>=|<|>)\s*([0-9/.]+)\s+(SAFE|REACH|REW)\s*\(\s*([^()]+?)\s*\)\s*$")


def parse_objective(text: str, resolve: Callable[[str, str], object], source: str = "<query>",
                    line: int = 0) -> Objective:
    """Parse one objective; ``resolve(kind, name)`` loads the referenced DFA or reward."""
    m = _OBJ.match(text)
    if m is None:
        raise ParseError(source, line, "objective like 'P>=9/10 SAFE(file.dfa)'", text.strip())
    letter, op, thr, form, ref = m.groups()
    threshold = parse_rational(thr, source, line)
    if letter == "P":
        if form == "REW":
            raise ParseError(source, line, "SAFE or REACH after P", form)
        if not 0 <= threshold <= 1:
            raise ParseError(source, line, "probability threshold in [0,1]", thr)
        return Objective("prob", op, threshold, resolve("dfa", ref), form.lower(), source=ref)
    if form != "REW":
        raise ParseError(source, line, "REW after E", form)
    return Objective("reward", op, threshold, reward=resolve("reward", ref), source=ref)


def parse_query(text: str, resolve: Callable, source: str = "<query>", line: int = 0) -> MoQuery:
    parts = [p for p in text.split(";") if p.strip()]
    return MoQuery(parse_objective(p, resolve, source, line) for p in parts)


def parse_class(text: str, source: str = "<class>", line: int = 0) -> StrategyClass:
    text = text.strip()
    if text in ("cmp", "prt"):
        return StrategyClass(text)
    m = re.fullmatch(r"fair\((.*)\)", text)
    if m is None:
        raise ParseError(source, line, "cmp, prt or fair(...)", text)
    groups = []
    for g in m.group(1).split(";"):
        labels = [x.strip() for x in g.split(",") if x.strip()]
        if not labels and g.strip():
            raise ParseError(source, line, "comma-separated labels", g)
        if labels:
            groups.append(labels)
    return fair(*groups)
