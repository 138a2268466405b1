"""Assume-guarantee proof rules, monotonicity checks and certificates.

Every rule application checks its side conditions first (these raise), then
discharges each premise with the sample-based checks of ``objectives`` and
assembles a ``Certificate``.  ``cross_check`` re-verifies a certificate's
conclusion directly on the composed model, which is the soundness oracle
for the whole engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .algebra import Region, format_valuation, region_grid, region_sample
from .automata import DFA, PPA, alphabet_extend, dfa_union, is_graph_preserving, parallel_compose
from .errors import (AlphabetSideConditionViolated, ComponentsNotDisjoint, FairnessSideConditionViolated,
                     NotSafeQuery, RegionNotGraphPreserving)
from .objectives import (CMP, PRT, AGTriple, MoQuery, Objective, StrategyClass, Verdict, _check_samples,
                         _Engine, check_ag_triple, describe_strategy, fair, prob_objective,
                         region_sat, reward_objective, safety, witness_class_text)
from .semantics import INFINITE, RewardFunction, _parametric_reach, _parametric_reward, induced_chain, reward_sum

JUSTIFIED = "JUSTIFIED"
PREMISE_FAILED = "PREMISE-FAILED"
VACUOUS = "VACUOUS"


@dataclass(frozen=True)
class Variant:
    """Which column of a rule is applied.

    ``safety`` uses complete/partial strategies and needs safety queries;
    ``fair`` carries one family of label classes per premise (C1, C2, ...).
    """

    kind: str
    families: tuple = ()

    def __post_init__(self):
        if self.kind not in ("safety", "fair"):
            raise ValueError(f"unknown rule variant {self.kind!r}")

    def family(self, i: int) -> tuple:
        return self.families[i] if i < len(self.families) else ()

    def __str__(self):
        if self.kind == "safety":
            return "safety"
        return "fair(" + " | ".join(";".join(",".join(sorted(c)) for c in f) for f in self.families) + ")"


SAFETY = Variant("safety")


def fair_variant(*families: Iterable[Iterable[str]]) -> Variant:
    fams = [tuple(frozenset(c) for c in f) for f in families]
    while fams and not fams[-1]:
        fams.pop()
    return Variant("fair", tuple(fams))


def _fair_class(*families) -> StrategyClass:
    classes = []
    for f in families:
        for c in f:
            if c not in classes:
                classes.append(c)
    # fairness with no label class constrains nothing beyond completeness
    return fair(*classes) if classes else CMP


@dataclass
class SideCondition:
    name: str
    ok: bool
    detail: str


@dataclass
class Conclusion:
    """The judged statement: ``sat`` (M,R |= Q), ``triple`` or ``mono``."""

    kind: str
    model: PPA
    region: Region | None
    cls: StrategyClass
    query: MoQuery | None = None
    assumption: MoQuery | None = None
    param: str | None = None
    direction: str | None = None
    target: object = None

    def region_text(self) -> str:
        return "empty" if self.region is None else str(self.region)

    def __str__(self):
        where = f"{self.model.name}, {self.region_text()}"
        if self.kind == "sat":
            return f"{where} |=[{self.cls}] {self.query}"
        if self.kind == "triple":
            return f"<{self.assumption}> {where} [{self.cls}] <{self.query}>"
        return f"{where} [{self.cls}] {self.direction}({self.param}) of {_target_name(self.target)}"


@dataclass
class Certificate:
    rule: str
    variant: str
    side_conditions: list
    premises: list  # (label, Verdict | Certificate)
    conclusion: Conclusion
    status: str
    grid: int
    seed: int
    notes: list = field(default_factory=list)

    @property
    def justified(self) -> bool:
        return self.status in (JUSTIFIED, VACUOUS)

    def lines(self, decimal: int | None = None, indent: str = "") -> list[str]:
        out = [f"rule: {self.rule}", f"variant: {self.variant}", f"grid: {self.grid}", f"seed: {self.seed}"]
        for sc in self.side_conditions:
            out.append(f"side-condition {sc.name}: {'ok' if sc.ok else 'FAILED'} ({sc.detail})")
        for label, evidence in self.premises:
            status = evidence.status
            out.append(f"{label}: {status}")
            out += ["  " + x for x in evidence.lines(decimal)]
        out.append(f"conclusion: {self.conclusion}")
        out += [f"note: {n}" for n in self.notes]
        out.append(f"status: {self.status}")
        return [indent + x for x in out]


def _premise_holds(evidence) -> bool:
    return evidence.justified if isinstance(evidence, Certificate) else evidence.holds


def _finish(rule, variant, sides, premises, conclusion, grid, seed, notes=()) -> Certificate:
    if conclusion.region is None:
        status = VACUOUS
        notes = list(notes) + ["conclusion region is empty; the conclusion holds trivially"]
    elif all(_premise_holds(e) for _, e in premises):
        status = JUSTIFIED
    else:
        status = PREMISE_FAILED
    return Certificate(rule, str(variant), sides, premises, conclusion, status, grid, seed, list(notes))


def _fmt_set(xs) -> str:
    return "{" + ",".join(sorted(xs)) + "}"


def _subset(sides: list, name: str, sub, sup, error=AlphabetSideConditionViolated):
    sub, sup = frozenset(sub), frozenset(sup)
    if not sub <= sup:
        raise error(f"{name}: {_fmt_set(sub - sup)} outside {_fmt_set(sup)}")
    sides.append(SideCondition(name, True, f"{_fmt_set(sub)} within {_fmt_set(sup)}"))


def _fair_ok(sides: list, variant: Variant, i: int, allowed, name: str):
    if variant.kind != "fair":
        return
    allowed = frozenset(allowed)
    for c in variant.family(i):
        if not c <= allowed:
            raise FairnessSideConditionViolated(
                f"{name}: class {_fmt_set(c)} is not a subset of {_fmt_set(allowed)}")
    sides.append(SideCondition(name, True, f"every class of C{i + 1} within {_fmt_set(allowed)}"))


def _safe(sides: list, variant: Variant, **queries):
    if variant.kind != "safety":
        return
    for name, Q in queries.items():
        if not Q.is_safe:
            raise NotSafeQuery(f"{name} = {Q} is not a safety mo-query")
    sides.append(SideCondition("safety-queries", True, ", ".join(queries)))


def _meet(*regions) -> Region | None:
    out = regions[0]
    for R in regions[1:]:
        if out is None or R is None:
            return None
        out = out.intersect(R)
    return out


def _classes(variant: Variant, premise: Sequence[int], fallback: StrategyClass) -> StrategyClass:
    if variant.kind == "safety":
        return fallback
    return _fair_class(*(variant.family(i) for i in premise))


# asymmetric rule and its n-component fold


def _asymmetric(M1, M2, R1, R2, A: MoQuery, G: MoQuery, variant: Variant, grid, seed,
                left_families=(0,), right_family=1, premise1=None, rule="asymmetric") -> Certificate:
    sides: list = []
    _safe(sides, variant, A=A, G=G)
    _subset(sides, "alphabet(A) <= alphabet(M1)", A.alphabet, M1.alphabet)
    _subset(sides, "alphabet(G) <= alphabet(M2) u alphabet(A)", G.alphabet, M2.alphabet | A.alphabet)
    for i in left_families:
        _fair_ok(sides, variant, i, M1.alphabet, f"C{i + 1} <= P(alphabet(M1))")
    _fair_ok(sides, variant, right_family, M2.alphabet | A.alphabet, f"C{right_family + 1} <= P(alphabet(M2) u alphabet(A))")
    cls1 = _classes(variant, left_families, CMP)
    cls2 = _classes(variant, (right_family,), PRT)
    cls = _classes(variant, tuple(left_families) + (right_family,), CMP)
    region = _meet(R1, R2)
    conclusion = Conclusion("sat", parallel_compose(M1, M2), region, cls, query=G)
    if region is None:
        return _finish(rule, variant, sides, [], conclusion, grid, seed)
    if premise1 is None:
        premise1 = region_sat(M1, R1, cls1, A, grid, seed)
    premise2 = check_ag_triple(AGTriple(alphabet_extend(M2, A.alphabet), R2, cls2, A, G), grid, seed)
    return _finish(rule, variant, sides, [("premise 1", premise1), ("premise 2", premise2)],
                   conclusion, grid, seed)


def apply_asymmetric(M1: PPA, M2: PPA, R1: Region, R2: Region, A: MoQuery, G: MoQuery,
                     variant: Variant = SAFETY, grid: int = 5, seed: int = 0) -> Certificate:
    """M1,R1 |= A and <A> M2^A,R2 <G> give M1||M2, R1&R2 |= G."""
    return _asymmetric(M1, M2, R1, R2, A, G, variant, grid, seed)


def apply_asymmetric_n(models: Sequence[PPA], regions: Sequence[Region], assumptions: Sequence[MoQuery],
                       G: MoQuery, variant: Variant = SAFETY, grid: int = 5, seed: int = 0) -> Certificate:
    """Chain M1 |= A1, <A1> M2 <A2>, ..., <A(n-1)> Mn <G>, folded left to right.

    Each step after the first takes the previous certificate as its first
    premise, so the result nests n-1 asymmetric applications.
    """
    n = len(models)
    if n < 2 or len(regions) != n or len(assumptions) != n - 1:
        raise ValueError("need n >= 2 models, n regions and n-1 assumptions")
    guarantees = list(assumptions[1:]) + [G]
    cert = None
    left, left_region = models[0], regions[0]
    for k in range(1, n):
        cert = _asymmetric(left, models[k], left_region, regions[k], assumptions[k - 1], guarantees[k - 1],
                           variant, grid, seed, left_families=tuple(range(k)), right_family=k,
                           premise1=cert, rule="asymmetric" if n == 2 else f"asymmetric-n step {k}")
        left, left_region = cert.conclusion.model, cert.conclusion.region
    if n > 2:
        cert.rule = f"asymmetric-n (n={n})"
    return cert


def apply_circular(M1: PPA, M2: PPA, R1: Region, R2: Region, R3: Region, A1: MoQuery, A2: MoQuery,
                   G: MoQuery, variant: Variant = SAFETY, grid: int = 5, seed: int = 0) -> Certificate:
    """<A1> M1^A1 <A2>, <A2> M2^A2 <G> and M2 |= A1 give M1||M2 |= G."""
    sides: list = []
    _safe(sides, variant, A1=A1, A2=A2, G=G)
    _subset(sides, "alphabet(A1) <= alphabet(M2)", A1.alphabet, M2.alphabet)
    _subset(sides, "alphabet(A2) <= alphabet(M1) u alphabet(A1)", A2.alphabet, M1.alphabet | A1.alphabet)
    _subset(sides, "alphabet(G) <= alphabet(M2) u alphabet(A2)", G.alphabet, M2.alphabet | A2.alphabet)
    _fair_ok(sides, variant, 0, M1.alphabet | A1.alphabet, "C1 <= P(alphabet(M1) u alphabet(A1))")
    _fair_ok(sides, variant, 1, M2.alphabet | A2.alphabet, "C2 <= P(alphabet(M2) u alphabet(A2))")
    _fair_ok(sides, variant, 2, M2.alphabet, "C3 <= P(alphabet(M2))")
    region = _meet(R1, R2, R3)
    conclusion = Conclusion("sat", parallel_compose(M1, M2), region, _classes(variant, (0, 1, 2), CMP), query=G)
    if region is None:
        return _finish("circular", variant, sides, [], conclusion, grid, seed)
    premises = [
        ("premise 1", check_ag_triple(AGTriple(alphabet_extend(M1, A1.alphabet), R1,
                                               _classes(variant, (0,), PRT), A1, A2), grid, seed)),
        ("premise 2", check_ag_triple(AGTriple(alphabet_extend(M2, A2.alphabet), R2,
                                               _classes(variant, (1,), PRT), A2, G), grid, seed)),
        ("premise 3", region_sat(M2, R3, _classes(variant, (2,), CMP), A1, grid, seed)),
    ]
    return _finish("circular", variant, sides, premises, conclusion, grid, seed)


def apply_conjunction(M: PPA, R1: Region, R2: Region, A1: MoQuery, G1: MoQuery, A2: MoQuery, G2: MoQuery,
                      variant: Variant = SAFETY, grid: int = 5, seed: int = 0) -> Certificate:
    """Two triples on the same model combine into one on A1&A2 / G1&G2."""
    sides: list = []
    _safe(sides, variant, A1=A1, G1=G1, A2=A2, G2=G2)
    _subset(sides, "alphabet(G1) <= alphabet(M) u alphabet(A1)", G1.alphabet, M.alphabet | A1.alphabet)
    _subset(sides, "alphabet(G2) <= alphabet(M) u alphabet(A2)", G2.alphabet, M.alphabet | A2.alphabet)
    _fair_ok(sides, variant, 0, M.alphabet | A1.alphabet, "C1 <= P(alphabet(M) u alphabet(A1))")
    _fair_ok(sides, variant, 1, M.alphabet | A2.alphabet, "C2 <= P(alphabet(M) u alphabet(A2))")
    A, G = A1 & A2, G1 & G2
    region = _meet(R1, R2)
    conclusion = Conclusion("triple", alphabet_extend(M, A.alphabet), region, _classes(variant, (0, 1), PRT),
                            query=G, assumption=A)
    if region is None:
        return _finish("conjunction", variant, sides, [], conclusion, grid, seed)
    premises = [
        (f"premise {i + 1}", check_ag_triple(AGTriple(alphabet_extend(M, Ai.alphabet), Ri,
                                                      _classes(variant, (i,), PRT), Ai, Gi), grid, seed))
        for i, (Ri, Ai, Gi) in enumerate(((R1, A1, G1), (R2, A2, G2)))
    ]
    return _finish("conjunction", variant, sides, premises, conclusion, grid, seed)


def interleaving_threshold(p1, p2) -> Fraction:
    p1, p2 = Fraction(p1), Fraction(p2)
    return p1 + p2 - p1 * p2


def apply_interleaving(M1: PPA, M2: PPA, R1: Region, R2: Region, A1: MoQuery, A2: MoQuery,
                       L1: DFA, p1, L2: DFA, p2, comparison: str = ">=", variant: Variant = SAFETY,
                       grid: int = 5, seed: int = 0) -> Certificate:
    """Guarantees on non-synchronising components combine into one on L1 u L2."""
    sides: list = []
    if variant.kind == "safety" and comparison != ">=":
        raise NotSafeQuery("the safety variant needs the comparison >=")
    _safe(sides, variant, A1=A1, A2=A2)
    left, right = M1.alphabet | A1.alphabet, M2.alphabet | A2.alphabet
    if left & right:
        raise ComponentsNotDisjoint(f"shared symbols {_fmt_set(left & right)}")
    sides.append(SideCondition("disjoint components", True, f"{_fmt_set(left)} and {_fmt_set(right)}"))
    _subset(sides, "alphabet(L1) <= alphabet(M1) u alphabet(A1)", L1.alphabet, left)
    _subset(sides, "alphabet(L2) <= alphabet(M2) u alphabet(A2)", L2.alphabet, right)
    _fair_ok(sides, variant, 0, left, "C1 <= P(alphabet(M1) u alphabet(A1))")
    _fair_ok(sides, variant, 1, right, "C2 <= P(alphabet(M2) u alphabet(A2))")
    G1 = MoQuery([prob_objective(comparison, p1, L1)])
    G2 = MoQuery([prob_objective(comparison, p2, L2)])
    G = MoQuery([prob_objective(comparison, interleaving_threshold(p1, p2), dfa_union(L1, L2))])
    A = A1 & A2
    region = _meet(R1, R2)
    conclusion = Conclusion("triple", alphabet_extend(parallel_compose(M1, M2), A.alphabet), region,
                            _classes(variant, (0, 1), PRT), query=G, assumption=A)
    if region is None:
        return _finish("interleaving", variant, sides, [], conclusion, grid, seed)
    premises = [
        (f"premise {i + 1}", check_ag_triple(AGTriple(alphabet_extend(Mi, Ai.alphabet), Ri,
                                                      _classes(variant, (i,), PRT), Ai, Gi), grid, seed))
        for i, (Mi, Ri, Ai, Gi) in enumerate(((M1, R1, A1, G1), (M2, R2, A2, G2)))
    ]
    return _finish("interleaving", variant, sides, premises, conclusion, grid, seed)


def apply_reward_sum(M1: PPA, M2: PPA, R1: Region, R2: Region, A1: MoQuery, A2: MoQuery,
                     Rf1: RewardFunction, r1, Rf2: RewardFunction, r2, comparison: str = ">=",
                     grid: int = 5, seed: int = 0, variant: Variant | None = None) -> Certificate:
    """Expected-reward guarantees of two components add up on the composition.

    Only the fair column exists for this rule; without label classes it is
    the class of complete strategies.
    """
    variant = variant or Variant("fair")
    if variant.kind != "fair":
        raise ValueError("the reward-sum rule has only a fair variant")
    sides: list = []
    _subset(sides, "alphabet(R1) <= alphabet(M1) u alphabet(A1)", Rf1.alphabet, M1.alphabet | A1.alphabet)
    _subset(sides, "alphabet(R2) <= alphabet(M2) u alphabet(A2)", Rf2.alphabet, M2.alphabet | A2.alphabet)
    _fair_ok(sides, variant, 0, M1.alphabet | A1.alphabet, "C1 <= P(alphabet(M1) u alphabet(A1))")
    _fair_ok(sides, variant, 1, M2.alphabet | A2.alphabet, "C2 <= P(alphabet(M2) u alphabet(A2))")
    G1 = MoQuery([reward_objective(comparison, r1, Rf1)])
    G2 = MoQuery([reward_objective(comparison, r2, Rf2)])
    G = MoQuery([reward_objective(comparison, Fraction(r1) + Fraction(r2), reward_sum(Rf1, Rf2))])
    A = A1 & A2
    region = _meet(R1, R2)
    conclusion = Conclusion("triple", alphabet_extend(parallel_compose(M1, M2), A.alphabet), region,
                            _classes(variant, (0, 1), CMP), query=G, assumption=A)
    if region is None:
        return _finish("reward-sum", variant, sides, [], conclusion, grid, seed)
    premises = [
        (f"premise {i + 1}", check_ag_triple(AGTriple(alphabet_extend(Mi, Ai.alphabet), Ri,
                                                      _classes(variant, (i,), CMP), Ai, Gi), grid, seed))
        for i, (Mi, Ri, Ai, Gi) in enumerate(((M1, R1, A1, G1), (M2, R2, A2, G2)))
    ]
    return _finish("reward-sum", variant, sides, premises, conclusion, grid, seed)


# monotonicity


def _target_name(target) -> str:
    return target.name if target is not None else "-"


def _target_objective(target) -> Objective:
    if isinstance(target, DFA):
        return safety(0, target)
    return reward_objective(">=", 0, target)


def solution_functions(M: PPA, cls: StrategyClass, target, v_fair=None) -> list:
    """(strategy, closed-form value) for every witness strategy of ``M`` and ``target``.

    The closed forms live on the product of the (tau-extended, for prt)
    model with the target DFA; a reward target needs no product.
    """
    engine = _Engine(M, cls, [_target_objective(target)])
    if v_fair is not None:
        engine.filter_fair(v_fair)
    P = engine.product
    out = []
    for sigma in engine.strategies:
        chain = induced_chain(P.model, None, sigma.at_state)
        if isinstance(target, DFA):
            value = 1 - _parametric_reach(chain, set(P.bad[0]))
        else:
            value = _parametric_reward(chain, target)
        out.append((sigma, value))
    return out


def _wrong_sign(d, direction: str) -> bool:
    return d < 0 if direction == "up" else d > 0


def _wrong_order(lo, hi, direction: str) -> bool:
    return lo > hi if direction == "up" else lo < hi


def check_monotone(M: PPA, R: Region, param: str, direction: str, cls: StrategyClass = PRT, target=None,
                   grid: int = 5, seed: int = 0, keep=None) -> Verdict:
    """Is every witness solution function monotone in ``param`` on R?

    Two checks per strategy: the sign of the derivative numerator (the
    denominator is squared) at every sample, and the ordering of values on
    grid neighbours that differ only in ``param``.  Samples where the
    closed form's denominator vanishes are skipped.
    """
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    if target is None:
        raise ValueError("check_monotone needs a target DFA or reward function")
    samples = region_sample(R, grid, seed, keep)
    statement = f"{M.name}, {R} [{cls}] {direction}({param}) of {_target_name(target)}"
    wclass = witness_class_text(cls)
    if not samples:
        return Verdict(statement, "HOLDS-ON-SAMPLES", grid, seed, wclass, 0, 0, notes=["vacuous: no sample"])
    _check_samples(M, samples, cls, [target] if isinstance(target, RewardFunction) else [])
    sols = solution_functions(M, cls, target, samples[0] if cls.kind == "fair" else None)
    grid_points = [v for v in region_grid(R, grid) if keep is None or keep(v)]
    lo = hi = None
    counter = None
    notes = []
    skipped = 0
    for sigma, sol in sols:
        if sol is INFINITE:
            notes.append(f"{sigma.name}: value INFINITE, constant in {param}")
            continue
        dnum = sol.derivative_numerator(param)
        signs = []
        for v in samples:
            if sol.den.evaluate(v) == 0:
                skipped += 1
                continue
            d = dnum.evaluate(v)
            signs.append((d, v))
            lo = d if lo is None or d < lo else lo
            hi = d if hi is None or d > hi else hi
            if counter is None and _wrong_sign(d, direction):
                counter = {"valuation": v, "strategy": describe_strategy(sigma),
                           "values": [("solution", sol), (f"d/d{param} numerator", d)]}
                flip = [(e, w) for e, w in signs + [(dnum.evaluate(w), w) for w in samples
                                                     if sol.den.evaluate(w) != 0]
                        if not _wrong_sign(e, direction) and e != 0]
                if flip:
                    e, w = max(flip, key=lambda x: abs(x[0]))
                    notes.append(f"sign flip: d/d{param} numerator {d} at {format_valuation(v)} "
                                 f"and {e} at {format_valuation(w)}")
        if counter is None:
            bad = _ordering_violation(sol, grid_points, param, direction)
            if bad is not None:
                v, w, a, b = bad
                counter = {"valuation": v, "strategy": describe_strategy(sigma),
                           "values": [("solution", sol), ("value", a), (f"value at {format_valuation(w)}", b)]}
    if skipped:
        notes.append(f"{skipped} (sample, strategy) pairs skipped: closed-form denominator vanishes")
    status = "VIOLATED" if counter else "HOLDS-ON-SAMPLES"
    return Verdict(statement, status, grid, seed, wclass, len(samples), len(sols),
                   [(f"d/d{param} numerator", lo, hi)], counter, notes)


def _ordering_violation(sol, points, param, direction):
    lines: dict = {}
    for v in points:
        if param not in v:
            return None
        key = tuple(sorted((k, x) for k, x in v.items() if k != param))
        lines.setdefault(key, []).append(v)
    for line in lines.values():
        line.sort(key=lambda v: v[param])
        for v, w in zip(line, line[1:]):
            if sol.den.evaluate(v) == 0 or sol.den.evaluate(w) == 0:
                continue
            a, b = sol.evaluate(v), sol.evaluate(w)
            if _wrong_order(a, b, direction):
                return v, w, a, b
    return None


def _interior(R: Region, v) -> bool:
    return all(lo == hi or lo < v[n] < hi for n, (lo, hi) in R.bounds.items())


def _graph_preserving(sides: list, M: PPA, R: Region, grid, seed, interior_only: bool, name: str):
    samples = region_sample(R, grid, seed)
    checked = [v for v in samples if _interior(R, v)] if interior_only else samples
    for v in checked:
        if not is_graph_preserving(M, v):
            raise RegionNotGraphPreserving(f"{name}: {format_valuation(v)} changes the graph of {M.name}")
    where = "interior samples" if interior_only else "all samples"
    sides.append(SideCondition(name, True, f"{len(checked)} {where}"))


def apply_monotonicity(M1: PPA, M2: PPA, R1: Region, R2: Region, param: str, direction: str, target,
                       variant: Variant = SAFETY, grid: int = 5, seed: int = 0) -> Certificate:
    """Both extended components monotone in ``param`` give a monotone composition.

    For the partial-strategy column the graph-preservation requirement is
    checked on the interior of the box: closed forms are continuous, so
    monotonicity carries over to the boundary wherever they are defined.
    """
    sides: list = []
    alphabet = target.alphabet
    _subset(sides, "alphabet(target) <= alphabet(M1) u alphabet(M2)", alphabet, M1.alphabet | M2.alphabet)
    interior = variant.kind == "safety"
    _graph_preserving(sides, M1, R1, grid, seed, interior, "R1 graph-preserving for M1")
    _graph_preserving(sides, M2, R2, grid, seed, interior, "R2 graph-preserving for M2")
    _fair_ok(sides, variant, 0, M1.alphabet | alphabet, "C1 <= P(alphabet(M1) u alphabet(target))")
    _fair_ok(sides, variant, 1, M2.alphabet | alphabet, "C2 <= P(alphabet(M2) u alphabet(target))")
    region = _meet(R1, R2)
    conclusion = Conclusion("mono", parallel_compose(M1, M2), region, _classes(variant, (0, 1), PRT),
                            param=param, direction=direction, target=target)
    if region is None:
        return _finish("monotonicity", variant, sides, [], conclusion, grid, seed)
    premises = [
        (f"premise {i + 1}", check_monotone(alphabet_extend(Mi, alphabet), Ri, param, direction,
                                            _classes(variant, (i,), PRT), target, grid, seed))
        for i, (Mi, Ri) in enumerate(((M1, R1), (M2, R2)))
    ]
    return _finish("monotonicity", variant, sides, premises, conclusion, grid, seed)


# soundness oracle


@dataclass
class CrossCheck:
    status: str  # AGREE, SOUNDNESS-BUG or SKIPPED
    certificate_status: str
    verdict: Verdict | None
    grid: int
    seed: int

    @property
    def agree(self) -> bool:
        return self.status == "AGREE"

    def lines(self, decimal: int | None = None) -> list[str]:
        out = [f"certificate: {self.certificate_status}", f"grid: {self.grid}", f"seed: {self.seed}"]
        if self.verdict is not None:
            out += ["monolithic:"] + ["  " + x for x in self.verdict.lines(decimal)]
        if self.status == "SOUNDNESS-BUG":
            ce = self.verdict.counterexample
            out.append(f"disagreeing-sample: {format_valuation(ce['valuation'])}")
        out.append(f"cross-check: {self.status}")
        return out


def verify_conclusion(c: Conclusion, grid: int = 5, seed: int = 0) -> Verdict:
    """Check a conclusion directly on its (composed) model."""
    if c.kind == "sat":
        return region_sat(c.model, c.region, c.cls, c.query, grid, seed)
    if c.kind == "triple":
        return check_ag_triple(AGTriple(c.model, c.region, c.cls, c.assumption, c.query), grid, seed)
    return check_monotone(c.model, c.region, c.param, c.direction, c.cls, c.target, grid, seed)


def cross_check(cert: Certificate, grid: int | None = None, seed: int | None = None) -> CrossCheck:
    grid = cert.grid if grid is None else grid
    seed = cert.seed if seed is None else seed
    if cert.status == VACUOUS:
        return CrossCheck("AGREE", cert.status, None, grid, seed)
    if cert.status != JUSTIFIED:
        return CrossCheck("SKIPPED", cert.status, None, grid, seed)
    verdict = verify_conclusion(cert.conclusion, grid, seed)
    status = "SOUNDNESS-BUG" if verdict.status == "VIOLATED" else "AGREE"
    return CrossCheck(status, cert.status, verdict, grid, seed)
