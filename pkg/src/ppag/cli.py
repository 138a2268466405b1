"""Command-line front end.

Exit status: 0 when the verdict holds (HOLDS-ON-SAMPLES, VACUOUS, JUSTIFIED,
AGREE), 1 when it does not (VIOLATED, PREMISE-FAILED, SOUNDNESS-BUG, invalid
model), 2 on input or usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .algebra import make_valuation, parse_rational, parse_region
from .automata import (alphabet_extend, compose_all, dfa_product, dot_lines, instantiate, parallel_compose,
                       parse_dfa, parse_ppa, ppa_to_text, render, tau_extend, validate_dfa, validate_ppa)
from .errors import ParseError, PPAError
from .objectives import AGTriple, MoQuery, check_ag_triple, fmt_value, parse_class, parse_query, region_sat
from .rules import (SAFETY, Certificate, apply_asymmetric, apply_asymmetric_n, apply_circular,
                    apply_conjunction, apply_interleaving, apply_monotonicity, apply_reward_sum, check_monotone,
                    cross_check, fair_variant, Variant)
from .semantics import (expected_total_reward, language_prob_omega, language_prob_reach,
                        language_prob_safety, parse_reward, solution_function)
from .strategies import bind_strategy, parse_strategy, project_strategy, strategy_to_text


class UsageError(Exception):
    pass


# loading


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _header(text: str) -> str:
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            return line.split()[0]
    return ""


class Loader:
    """Loads files once; objectives that name the same DFA share one object."""

    def __init__(self, base: str = "."):
        self.base = base
        self.cache: dict = {}

    def path(self, name: str) -> str:
        return name if os.path.isabs(name) else os.path.join(self.base, name)

    def _load(self, kind: str, name: str):
        path = os.path.normpath(self.path(name))
        key = (kind, path)
        if key not in self.cache:
            text = _read(path)
            if kind == "ppa":
                self.cache[key] = parse_ppa(text, path)
            elif kind == "dfa":
                self.cache[key] = parse_dfa(text, path)
            elif kind == "reward":
                self.cache[key] = parse_reward(text, path)
            else:
                self.cache[key] = parse_strategy(text, path)
        return self.cache[key]

    def ppa(self, name):
        return self._load("ppa", name)

    def dfa(self, name):
        return self._load("dfa", name)

    def reward(self, name):
        return self._load("reward", name)

    def strategy(self, name):
        return self._load("strategy", name)

    def target(self, name):
        kind = {"dfa": "dfa", "reward": "reward"}.get(_header(_read(self.path(name))))
        if kind is None:
            raise UsageError(f"{name}: expected a dfa or reward file")
        return self._load(kind, name)

    def query(self, text: str, source: str) -> MoQuery:
        if text is None:
            return MoQuery()
        text = text.strip()
        if text in ("", "true"):
            return MoQuery()
        return parse_query(text, lambda kind, ref: self.dfa(ref) if kind == "dfa" else self.reward(ref), source)


def parse_valuation(text: str, source: str = "--at"):
    values = {}
    for item in filter(None, (x.strip() for x in (text or "").split(","))):
        name, eq, val = item.partition("=")
        if not eq or not name.strip():
            raise ParseError(source, 0, "'name=value'", item)
        values[name.strip()] = parse_rational(val, source)
    return make_valuation(values)


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _print(lines):
    for line in lines:
        print(line)


# simple commands


def cmd_validate(args, load: Loader) -> int:
    text = _read(args.file)
    if _header(text) == "dfa":
        name, problems = _dfa_problems(text, args.file)
        _print([f"dfa: {name}", f"valid: {'yes' if not problems else 'no'}"]
               + [f"violation: {p}" for p in problems])
        return 0 if not problems else 1
    M = parse_ppa(text, args.file, check=False)
    report = validate_ppa(M)
    _print([f"model: {M.name}", f"states: {len(M.states)}", f"transitions: {len(M.trans)}"] + report.lines())
    return 0 if report.valid else 1


def _dfa_problems(text: str, source: str):
    try:
        B = parse_dfa(text, source)
        return B.name, validate_dfa(B)
    except PPAError as exc:
        if isinstance(exc, ParseError):
            raise
        return _header_name(text), [str(exc)]


def _header_name(text: str) -> str:
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].split()
        if line:
            return line[1] if len(line) > 1 else "?"
    return "?"


def cmd_compose(args, load: Loader) -> int:
    M = compose_all([load.ppa(f) for f in args.files])
    _emit(ppa_to_text(M), args.output)
    if args.output:
        _print([f"model: {M.name}", f"states: {len(M.states)}", f"transitions: {len(M.trans)}"])
    return 0


def cmd_extend(args, load: Loader) -> int:
    symbols = [s for s in args.symbols.replace(",", " ").split() if s]
    _emit(ppa_to_text(alphabet_extend(load.ppa(args.file), symbols)), args.output)
    return 0


def cmd_tau(args, load: Loader) -> int:
    _emit(ppa_to_text(tau_extend(load.ppa(args.file))), args.output)
    return 0


def cmd_product(args, load: Loader) -> int:
    P = dfa_product(load.ppa(args.model), load.dfa(args.dfa))
    bad = [render(s) for s in P.model.states if s in P.bad[0]]
    text = ppa_to_text(P.model).rstrip("\n") + "\n" + f"# bad: {' '.join(bad)}\n"
    _emit(text, args.output)
    return 0


def cmd_instantiate(args, load: Loader) -> int:
    _emit(ppa_to_text(instantiate(load.ppa(args.file), parse_valuation(args.at))), args.output)
    return 0


def _model(load: Loader, files):
    return compose_all([load.ppa(f) for f in files])


def _bound(load: Loader, M, path):
    return bind_strategy(load.strategy(path), M)


def cmd_prob(args, load: Loader) -> int:
    M = _model(load, args.model)
    B = load.dfa(args.dfa)
    v = parse_valuation(args.at)
    sigma = _bound(load, M, args.strategy)
    fn = {"safe": language_prob_safety, "reach": language_prob_reach, "omega": language_prob_omega}[args.mode]
    value = fn(M, v, sigma, B)
    lines = [f"model: {M.name}", f"dfa: {B.name}", f"strategy: {sigma.name}", f"valuation: {args.at}",
             f"mode: {args.mode}", f"value: {fmt_value(value, args.decimal)}"]
    if args.mode == "omega":
        lines.append(f"prefix-closed value: {fmt_value(language_prob_safety(M, v, sigma, B), args.decimal)}")
    _print(lines)
    return 0


def cmd_reward(args, load: Loader) -> int:
    M = _model(load, args.model)
    R = load.reward(args.reward)
    sigma = _bound(load, M, args.strategy)
    value = expected_total_reward(M, parse_valuation(args.at), sigma, R)
    _print([f"model: {M.name}", f"reward: {R.name}", f"strategy: {sigma.name}", f"valuation: {args.at}",
            f"value: {fmt_value(value, args.decimal)}"])
    return 0


def cmd_project(args, load: Loader) -> int:
    M1, M2 = load.ppa(args.m1), load.ppa(args.m2)
    sigma = _bound(load, parallel_compose(M1, M2), args.strategy)
    v1 = parse_valuation(args.at1, "--at1")
    v2 = parse_valuation(args.at2 if args.at2 is not None else args.at1, "--at2")
    proj = project_strategy(sigma, M1, M2, args.component, v1, v2, args.horizon)
    _emit(strategy_to_text(proj), args.output)
    return 0


def cmd_solve(args, load: Loader) -> int:
    M = _model(load, args.model)
    target = load.target(args.target)
    sigma = _bound(load, M, args.strategy)
    region = parse_region(args.region, "--region") if args.region else None
    sol = solution_function(M, sigma, target, region, verify_samples=5, seed=args.seed)
    lines = [f"model: {M.name}", f"target: {target.name}", f"strategy: {sigma.name}", f"kind: {sol.kind}",
             f"solution: {sol}"]
    if region is not None:
        lines += [f"region: {region}", f"seed: {args.seed}", "verified: exact solves at up to 5 samples"]
    _print(lines)
    return 0


def cmd_check(args, load: Loader) -> int:
    M = load.ppa(args.model)
    verdict = region_sat(M, parse_region(args.region, "--region"), parse_class(args.cls, "--class"),
                         load.query(args.query, "--query"), args.grid, args.seed)
    _print(verdict.lines(args.decimal))
    return 0 if verdict.holds else 1


def cmd_triple(args, load: Loader) -> int:
    M = load.ppa(args.model)
    T = AGTriple(M, parse_region(args.region, "--region"), parse_class(args.cls, "--class"),
                 load.query(args.assume, "--assume"), load.query(args.guarantee, "--guarantee"))
    verdict = check_ag_triple(T, args.grid, args.seed)
    _print(verdict.lines(args.decimal))
    return 0 if verdict.holds else 1


def cmd_mono(args, load: Loader) -> int:
    M = load.ppa(args.model)
    verdict = check_monotone(M, parse_region(args.region, "--region"), args.param, args.direction,
                             parse_class(args.cls, "--class"), load.target(args.target), args.grid, args.seed)
    _print(verdict.lines(args.decimal))
    return 0 if verdict.holds else 1


def cmd_export_dot(args, load: Loader) -> int:
    chunks = []
    for f in args.files:
        M = load.ppa(f)
        bad = ()
        if args.dfa:
            P = dfa_product(M, load.dfa(args.dfa))
            M, bad = P.model, P.bad[0]
        chunks.append("\n".join(dot_lines(M, bad)) + "\n")
    _emit("".join(chunks), args.output)
    return 0


# rules


RULE_NAMES = {
    "asym": "asym", "asymmetric": "asym",
    "asym-n": "asym-n", "asymmetric-n": "asym-n",
    "circ": "circ", "circular": "circ",
    "conj": "conj", "conjunction": "conj",
    "inter": "inter", "interleaving": "inter",
    "reward-sum": "reward-sum", "sum": "reward-sum",
    "mono": "mono", "monotonicity": "mono",
}

RULE_KEYS = ("m1", "m2", "model", "region", "r1", "r2", "r3", "assume", "guarantee", "a1", "a2", "g1", "g2",
             "l1", "p1", "l2", "p2", "comparison", "rew1", "bound1", "rew2", "bound2", "param", "direction",
             "target", "variant", "c1", "c2", "c3", "grid", "seed")
REPEATED = ("model", "region", "assume")


def parse_rule_file(path: str) -> dict:
    """One rule instance per file: ``rule <name>`` then ``<key> <value>`` lines."""
    opts: dict = {}
    for lineno, raw in enumerate(_read(path).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        value = value.strip()
        if key == "rule":
            if value not in RULE_NAMES:
                raise ParseError(path, lineno, "a rule name (" + ", ".join(sorted(set(RULE_NAMES.values()))) + ")",
                                 value)
            opts["rule"] = RULE_NAMES[value]
        elif key in RULE_KEYS:
            if key in REPEATED:
                opts.setdefault(key, []).append(value)
            elif key in opts:
                raise ParseError(path, lineno, f"'{key}' once", key)
            else:
                opts[key] = value
        else:
            raise ParseError(path, lineno, "rule or a known key", key)
    if "rule" not in opts:
        raise ParseError(path, 0, "'rule <name>'", "nothing")
    return opts


def _families(text: str | None):
    if not text:
        return ()
    groups = []
    for g in text.split(";"):
        labels = [x.strip() for x in g.split(",") if x.strip()]
        if labels:
            groups.append(labels)
    return groups


def _variant(opts: dict) -> Variant:
    kind = (opts.get("variant") or "safety").strip()
    if kind == "safety":
        return SAFETY
    if kind != "fair":
        raise ParseError("--variant", 0, "'safety' or 'fair'", kind)
    return fair_variant(*(_families(opts.get(c)) for c in ("c1", "c2", "c3")))


def _need(opts: dict, *keys):
    missing = [k for k in keys if not opts.get(k)]
    if missing:
        raise UsageError(f"rule {opts['rule']} needs {', '.join('--' + k for k in missing)}")


def build_certificate(opts: dict, load: Loader, grid: int, seed: int) -> Certificate:
    rule = opts["rule"]
    variant = _variant(opts)
    region = lambda k: parse_region(opts[k], f"--{k}")  # noqa: E731
    q = lambda k: load.query(opts.get(k), f"--{k}")  # noqa: E731
    if rule == "asym":
        _need(opts, "m1", "m2", "r1", "r2", "assume", "guarantee")
        return apply_asymmetric(load.ppa(opts["m1"]), load.ppa(opts["m2"]), region("r1"), region("r2"),
                                load.query(opts["assume"][0], "--assume"), q("guarantee"), variant, grid, seed)
    if rule == "asym-n":
        _need(opts, "model", "region", "assume", "guarantee")
        models = [load.ppa(m) for m in opts["model"]]
        regions = [parse_region(r, "--region") for r in opts["region"]]
        assumptions = [load.query(a, "--assume") for a in opts["assume"]]
        if len(regions) != len(models) or len(assumptions) != len(models) - 1:
            raise UsageError("asym-n needs n models, n regions and n-1 assumptions")
        return apply_asymmetric_n(models, regions, assumptions, q("guarantee"), variant, grid, seed)
    if rule == "circ":
        _need(opts, "m1", "m2", "r1", "r2", "r3", "a1", "a2", "guarantee")
        return apply_circular(load.ppa(opts["m1"]), load.ppa(opts["m2"]), region("r1"), region("r2"),
                              region("r3"), q("a1"), q("a2"), q("guarantee"), variant, grid, seed)
    if rule == "conj":
        _need(opts, "model", "r1", "r2", "g1", "g2")
        return apply_conjunction(load.ppa(opts["model"][0]), region("r1"), region("r2"), q("a1"), q("g1"),
                                 q("a2"), q("g2"), variant, grid, seed)
    if rule == "inter":
        _need(opts, "m1", "m2", "r1", "r2", "l1", "p1", "l2", "p2")
        return apply_interleaving(load.ppa(opts["m1"]), load.ppa(opts["m2"]), region("r1"), region("r2"),
                                  q("a1"), q("a2"), load.dfa(opts["l1"]), parse_rational(opts["p1"], "--p1"),
                                  load.dfa(opts["l2"]), parse_rational(opts["p2"], "--p2"),
                                  opts.get("comparison") or ">=", variant, grid, seed)
    if rule == "reward-sum":
        _need(opts, "m1", "m2", "r1", "r2", "rew1", "bound1", "rew2", "bound2")
        if variant.kind != "fair":
            variant = Variant("fair")
        return apply_reward_sum(load.ppa(opts["m1"]), load.ppa(opts["m2"]), region("r1"), region("r2"),
                                q("a1"), q("a2"), load.reward(opts["rew1"]), parse_rational(opts["bound1"], "--bound1"),
                                load.reward(opts["rew2"]), parse_rational(opts["bound2"], "--bound2"),
                                opts.get("comparison") or ">=", grid, seed, variant)
    _need(opts, "m1", "m2", "r1", "r2", "param", "direction", "target")
    return apply_monotonicity(load.ppa(opts["m1"]), load.ppa(opts["m2"]), region("r1"), region("r2"),
                              opts["param"], opts["direction"], load.target(opts["target"]), variant, grid, seed)


def _rule_options(args) -> tuple[dict, Loader, int, int]:
    if args.file:
        opts = parse_rule_file(args.file)
        load = Loader(os.path.dirname(args.file) or ".")
    else:
        if not args.name:
            raise UsageError("give a rule name or --file")
        if args.name not in RULE_NAMES:
            raise UsageError(f"unknown rule {args.name!r}")
        opts = {"rule": RULE_NAMES[args.name]}
        load = Loader(".")
    for key in RULE_KEYS:
        value = getattr(args, key, None)
        if value is None or key in ("grid", "seed"):
            continue
        if key in REPEATED:
            opts.setdefault(key, [])
            opts[key] = list(value) if not args.file else opts[key] + list(value)
        else:
            opts[key] = value
    grid = args.grid if args.grid is not None else int(opts.get("grid", 5))
    seed = args.seed if args.seed is not None else int(opts.get("seed", 0))
    return opts, load, grid, seed


def cmd_rule(args, _load) -> int:
    opts, load, grid, seed = _rule_options(args)
    cert = build_certificate(opts, load, grid, seed)
    _print(cert.lines(args.decimal))
    return 0 if cert.justified else 1


def cmd_cross_check(args, _load) -> int:
    opts, load, grid, seed = _rule_options(args)
    cert = build_certificate(opts, load, grid, seed)
    report = cross_check(cert, grid, seed)
    _print(cert.lines(args.decimal) + report.lines(args.decimal))
    return 0 if report.agree else 1


# argument parsing


def _add_sampling(p):
    p.add_argument("--grid", type=int, default=5, help="grid points per axis (default 5)")
    p.add_argument("--seed", type=int, default=0, help="seed of the random sample batch (default 0)")
    p.add_argument("--decimal", type=int, default=None, help="also print k-digit decimal approximations")


def _add_rule_flags(p):
    p.add_argument("name", nargs="?", help="asym, asym-n, circ, conj, inter, reward-sum or mono")
    p.add_argument("--file", help="rule invocation file (one rule instance)")
    for key in RULE_KEYS:
        if key in ("grid", "seed"):
            continue
        flag = "--" + key
        if key in REPEATED:
            p.add_argument(flag, action="append")
        else:
            p.add_argument(flag)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--decimal", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppag", description="parametric probabilistic assume-guarantee checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model or DFA file")
    p.add_argument("file")
    p.set_defaults(run=cmd_validate)

    p = sub.add_parser("compose", help="parallel composition of models")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_compose)

    p = sub.add_parser("extend", help="alphabet extension by self-loops")
    p.add_argument("file")
    p.add_argument("--symbols", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_extend)

    p = sub.add_parser("tau", help="tau-extension")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_tau)

    p = sub.add_parser("product", help="model synchronised with a bad-prefix DFA")
    p.add_argument("model")
    p.add_argument("dfa")
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_product)

    p = sub.add_parser("instantiate", help="substitute a valuation")
    p.add_argument("file")
    p.add_argument("--at", required=True, help="valuation like p=1/10,q=1/2")
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_instantiate)

    p = sub.add_parser("prob", help="probability of a safety language under a strategy")
    p.add_argument("--model", action="append", required=True, help="repeat to compose")
    p.add_argument("--strategy", required=True)
    p.add_argument("--dfa", required=True)
    p.add_argument("--at", default="")
    p.add_argument("--mode", choices=("safe", "reach", "omega"), default="safe")
    p.add_argument("--decimal", type=int, default=None)
    p.set_defaults(run=cmd_prob)

    p = sub.add_parser("reward", help="expected total reward under a strategy")
    p.add_argument("--model", action="append", required=True, help="repeat to compose")
    p.add_argument("--strategy", required=True)
    p.add_argument("--reward", required=True)
    p.add_argument("--at", default="")
    p.add_argument("--decimal", type=int, default=None)
    p.set_defaults(run=cmd_reward)

    p = sub.add_parser("project", help="project a strategy of M1||M2 onto one component")
    p.add_argument("--m1", required=True)
    p.add_argument("--m2", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--component", type=int, choices=(1, 2), required=True)
    p.add_argument("--at1", default="")
    p.add_argument("--at2", default=None)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_project)

    p = sub.add_parser("solve", help="closed-form solution function of a memoryless strategy")
    p.add_argument("--model", action="append", required=True, help="repeat to compose")
    p.add_argument("--strategy", required=True)
    p.add_argument("--target", required=True, help="bad-prefix DFA or reward file")
    p.add_argument("--region", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("check", help="M, R |= query for a strategy class")
    p.add_argument("--model", required=True)
    p.add_argument("--region", required=True)
    p.add_argument("--class", dest="cls", default="cmp")
    p.add_argument("--query", required=True)
    _add_sampling(p)
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("triple", help="assume-guarantee triple")
    p.add_argument("--model", required=True)
    p.add_argument("--region", required=True)
    p.add_argument("--class", dest="cls", default="prt")
    p.add_argument("--assume", default="")
    p.add_argument("--guarantee", required=True)
    _add_sampling(p)
    p.set_defaults(run=cmd_triple)

    p = sub.add_parser("mono", help="monotonicity of all witness solution functions")
    p.add_argument("--model", required=True)
    p.add_argument("--region", required=True)
    p.add_argument("--param", required=True)
    p.add_argument("--direction", choices=("up", "down"), required=True)
    p.add_argument("--class", dest="cls", default="prt")
    p.add_argument("--target", required=True)
    _add_sampling(p)
    p.set_defaults(run=cmd_mono)

    p = sub.add_parser("rule", help="apply a proof rule and print its certificate")
    _add_rule_flags(p)
    p.set_defaults(run=cmd_rule)

    p = sub.add_parser("cross-check", help="apply a rule and re-verify its conclusion monolithically")
    _add_rule_flags(p)
    p.set_defaults(run=cmd_cross_check)

    p = sub.add_parser("export-dot", help="Graphviz DOT of models (optionally with a DFA product)")
    p.add_argument("files", nargs="+")
    p.add_argument("--dfa", default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_export_dot)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args, Loader("."))
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, PPAError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
