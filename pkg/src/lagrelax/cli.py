"""Command-line front end: ``lagrelax {run,gen,verify}``.

Instance files per problem (inside ``--instance-dir``, or listed in this
order with ``--instance``):

* parse-tag: ``grammar.txt``, ``tagger.txt``, ``sentence.txt``
* mrf: ``mrf.txt``
* tsp: ``graph.txt``
* phrase: ``phrases.txt``, ``lm.txt``
* toy: none (built in)

Exit status is 0 for any completed run, whether or not it e-converged, 1
when ``--verify`` finds a failing check, and 2 for usage, configuration or
instance errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import generate, oracles
from .core import (
    DEFAULT_STALL_EPS,
    DEFAULT_STALL_WINDOW,
    RunTrace,
    StepSizeSchedule,
    verify_convergence_bound,
)
from .exceptions import ConfigurationError, LagrelaxError
from .io import summary_dict, write_summary, write_trace_csv
from .mrf import MrfBackend, PairwiseMRF, dd_mrf_map
from .parsetag import toy
from .parsetag.dd import ParseTagBackend, dd_parse_tag
from .parsetag.grammar import Grammar
from .parsetag.tagger import TagModel
from .phrase import BigramLM, PhraseBackend, PhraseLexicon, dd_phrase
from .tsp import HeldKarpBackend, WeightedGraph, degree_residuals, hk_relaxation

PROBLEMS = ("parse-tag", "mrf", "tsp", "phrase", "toy")
STEP_KINDS = {"const": "constant", "inv-k": "inverse-k", "inv-sqrt": "inverse-sqrt-k", "adaptive": "adaptive"}
INSTANCE_FILES = {
    "parse-tag": ("grammar.txt", "tagger.txt", "sentence.txt"),
    "mrf": ("mrf.txt",),
    "tsp": ("graph.txt",),
    "phrase": ("phrases.txt", "lm.txt"),
    "toy": (),
}
GEN_KEYS = {
    "parse-tag": {"n": int, "tags": int, "vocab": int, "extra_nonterminals": int, "rule_prob": float,
                  "max_derivations": int},
    "mrf": {"rows": int, "cols": int, "coupling": float},
    "tsp": {"n": int, "low": int, "high": int},
    "phrase": {"n": int, "extra": int, "vocab": int},
    "toy": {},
}
TOL = 1e-9


@dataclass
class RunConfig:
    problem: str
    step: str = "adaptive"
    c: float | None = None
    max_iters: int = 500
    tighten: bool = False
    stall_window: int = DEFAULT_STALL_WINDOW
    stall_eps: float = DEFAULT_STALL_EPS
    seed: int | None = None
    verify: bool = False
    trace_out: str | None = None
    summary_out: str | None = None
    instances: list = field(default_factory=list)
    instance_dir: str | None = None
    gen: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigurationError(f"unknown problem {self.problem!r}")
        if self.tighten and self.problem not in ("parse-tag", "toy"):
            raise ConfigurationError("--tighten only applies to parse-tag and toy")
        if self.step not in STEP_KINDS:
            raise ConfigurationError(f"unknown step schedule {self.step!r}")

    @property
    def schedule(self) -> StepSizeSchedule:
        c = self.c if self.c is not None else (toy.DEFAULT_C if self.problem == "toy" else 1.0)
        return StepSizeSchedule(STEP_KINDS[self.step], c)


def parse_gen_params(problem: str, items) -> dict:
    allowed = GEN_KEYS[problem]
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in allowed:
            names = ", ".join(sorted(allowed)) or "none"
            raise ConfigurationError(f"bad --gen {item!r} for {problem} (keys: {names})")
        try:
            out[key] = allowed[key](val)
        except ValueError:
            raise ConfigurationError(f"bad value in --gen {item!r}") from None
    return out


# ---------------------------------------------------------------- instances

def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _instance_paths(config: RunConfig) -> list:
    names = INSTANCE_FILES[config.problem]
    if config.instance_dir:
        return [Path(config.instance_dir) / name for name in names]
    if len(config.instances) != len(names):
        raise ConfigurationError(
            f"{config.problem} needs {len(names)} instance file(s) ({', '.join(names)}), got {len(config.instances)}")
    return [Path(p) for p in config.instances]


def generate_instance(problem: str, seed: int, params: dict):
    if problem == "parse-tag":
        inst = generate.parse_tag_instance(seed, **params)
        return inst.grammar, inst.model, inst.sentence
    if problem == "mrf":
        return generate.mrf_grid_instance(seed, **params)
    if problem == "tsp":
        return (generate.tsp_instance(seed, **params),)
    if problem == "phrase":
        inst = generate.phrase_instance(seed, **params)
        return inst.lexicon, inst.lm
    return toy.toy_instance()


def load_instance(config: RunConfig):
    if config.problem == "toy":
        return toy.toy_instance()
    if not config.instances and not config.instance_dir:
        if config.seed is None:
            raise ConfigurationError("give --instance/--instance-dir, or --seed to generate an instance")
        return generate_instance(config.problem, config.seed, config.gen)
    paths = _instance_paths(config)
    for p in paths:
        if not p.is_file():
            raise ConfigurationError(f"instance file not found: {p}")
    if config.problem == "parse-tag":
        g, m, s = paths
        sentence = tuple(_read(s).split())
        return Grammar.from_text(_read(g), g), TagModel.from_text(_read(m), m), sentence
    if config.problem == "mrf":
        (p,) = paths
        mrf, cover = PairwiseMRF.from_text(_read(p), p)
        if cover is None:
            raise ConfigurationError(f"{p}: no TREE1/TREE2 lines and no GRID line to derive a cover")
        return mrf, cover
    if config.problem == "tsp":
        (p,) = paths
        return (WeightedGraph.from_text(_read(p), p),)
    lex, lm = paths
    return PhraseLexicon.from_text(_read(lex), lex), BigramLM.from_text(_read(lm), lm)


def write_instance(problem: str, instance, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = INSTANCE_FILES[problem]
    if problem == "parse-tag":
        grammar, model, sentence = instance
        texts = [grammar.to_text(), model.to_text(), " ".join(sentence) + "\n"]
    elif problem == "mrf":
        mrf, cover = instance
        texts = [mrf.to_text(cover)]
    elif problem == "tsp":
        texts = [instance[0].to_text()]
    elif problem == "phrase":
        texts = [instance[0].to_text(), instance[1].to_text()]
    else:
        raise ConfigurationError("the toy instance is built in; nothing to generate")
    paths = []
    for name, text in zip(names, texts):
        path = out / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths


# ---------------------------------------------------------------- running

def solve(config: RunConfig, instance) -> tuple:
    """Run the configured backend; returns (trace, backend used for the final phase)."""
    sched, kw = config.schedule, dict(max_iters=config.max_iters, stall_window=config.stall_window,
                                       stall_eps=config.stall_eps)
    if config.problem in ("parse-tag", "toy"):
        grammar, model, sentence = instance
        trace = dd_parse_tag(grammar, model, sentence, sched, tighten=config.tighten, **kw)
        backend = ParseTagBackend(grammar, model, sentence,
                                  [tuple(b) for b in trace.meta.get("bigram_constraints", [])])
    elif config.problem == "mrf":
        mrf, cover = instance
        trace, backend = dd_mrf_map(mrf, cover, sched, **kw), MrfBackend(mrf, cover)
    elif config.problem == "tsp":
        (graph,) = instance
        trace, backend = hk_relaxation(graph, sched, **kw), HeldKarpBackend(graph)
    else:
        lexicon, lm = instance
        trace, backend = dd_phrase(lexicon, lm, sched, **kw), PhraseBackend(lexicon, lm)
    return trace, backend


def brute_optimum(problem: str, instance) -> float:
    if problem in ("parse-tag", "toy"):
        return oracles.brute_joint_parse_tag(*instance)[2]
    if problem == "mrf":
        return oracles.brute_mrf_map(instance[0])[1]
    if problem == "tsp":
        return oracles.brute_tsp(instance[0])[1]
    return oracles.brute_phrase(instance[0], instance[1], "exactCover")[1]


def verification_checks(problem: str, instance, trace: RunTrace, backend) -> list:
    """(passed, message) pairs cross-checking a trace against the exact oracles."""
    checks = []
    opt = brute_optimum(problem, instance)
    low = min(r.dual for r in trace.records)
    checks.append((all(r.dual >= opt - TOL for r in trace.records),
                   f"dual bound >= brute-force optimum {opt!r} at all {trace.iterations} iterations (min dual {low!r})"))
    if trace.certified:
        checks.append((abs(trace.certificate_value - opt) <= TOL,
                       f"certificate value {trace.certificate_value!r} equals brute-force optimum {opt!r}"))
    else:
        checks.append((True, f"no certificate ({trace.status.value}); best dual {trace.best_dual!r} vs optimum {opt!r}"))
    bd = [r.best_dual for r in trace.records]
    bp = [r.best_primal for r in trace.records if r.best_primal is not None]
    checks.append((all(a >= b for a, b in zip(bd, bd[1:])) and all(a <= b for a, b in zip(bp, bp[1:])),
                   "best_dual non-increasing and best_primal non-decreasing"))
    G = trace.max_subgradient_norm()
    for name, ref in (("u0", {}), ("final u", trace.final_multipliers)):
        checks.append((verify_convergence_bound(trace, ref, G, backend),
                       f"convergence bound holds with reference {name}, G={G:.6g}"))
    if problem == "tsp":
        n = instance[0].n
        ok = all(len(r.structure.edges) == n and sum(degree_residuals(r.structure.edges, n).values()) == 0
                 for r in trace.records)
        checks.append((ok, "every 1-tree has n edges and degree residuals summing to 0"))
    return checks


def _fmt(x) -> str:
    return "none" if x is None else (repr(x) if not isinstance(x, float) or math.isfinite(x) else str(x))


def run_command(config: RunConfig, out=None) -> int:
    out = out or sys.stdout
    instance = load_instance(config)
    trace, backend = solve(config, instance)
    if config.trace_out:
        write_trace_csv(trace, config.trace_out)
    extra = {"problem": config.problem, "schedule": {"kind": config.schedule.kind, "c": config.schedule.c}}
    if config.summary_out:
        summary = write_summary(trace, config.summary_out, **extra)
    else:
        summary = summary_dict(trace, **extra)
    print(f"status={summary['status']} iterations={summary['iterations']} "
          f"best_dual={_fmt(summary['best_dual'])} best_primal={_fmt(summary['best_primal'])} "
          f"certified={str(summary['certified']).lower()}", file=out)
    if trace.certified:
        print(f"certificate_value={_fmt(trace.certificate_value)} at k={trace.converged_iteration}", file=out)
    if not config.verify:
        return 0
    failed = 0
    for passed, message in verification_checks(config.problem, instance, trace, backend):
        print(f"{'PASS' if passed else 'FAIL'}: {message}", file=out)
        failed += not passed
    return 1 if failed else 0


# ---------------------------------------------------------------- argparse

def _add_instance_args(p):
    p.add_argument("--problem", required=True, choices=PROBLEMS)
    p.add_argument("--instance", action="append", default=[], metavar="PATH",
                   help="instance file; repeat in the order listed in the module help")
    p.add_argument("--instance-dir", metavar="DIR", help="directory holding the standard instance files")
    p.add_argument("--seed", type=int, help="generate a random instance with this seed")
    p.add_argument("--gen", action="append", default=[], metavar="KEY=VAL", help="generator size parameter")


def _add_run_args(p):
    _add_instance_args(p)
    p.add_argument("--step", choices=sorted(STEP_KINDS), default="adaptive")
    p.add_argument("--c", type=float, help="step constant (default 1.0; 1.8 for toy)")
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tighten", action="store_true", help="add violated tag-bigram constraints (parse-tag, toy)")
    p.add_argument("--stall-window", type=int, default=DEFAULT_STALL_WINDOW)
    p.add_argument("--stall-eps", type=float, default=DEFAULT_STALL_EPS)
    p.add_argument("--trace-out", metavar="PATH")
    p.add_argument("--summary-out", metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lagrelax", description="Lagrangian relaxation solvers")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a backend and write its trace")
    _add_run_args(run)
    run.add_argument("--verify", action="store_true", help="cross-check against brute-force oracles")
    verify = sub.add_parser("verify", help="run a backend and cross-check it against the oracles")
    _add_run_args(verify)
    gen = sub.add_parser("gen", help="write a random instance to disk")
    gen.add_argument("--problem", required=True, choices=[p for p in PROBLEMS if p != "toy"])
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--gen", action="append", default=[], metavar="KEY=VAL")
    gen.add_argument("--out-dir", default=".", metavar="DIR")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            params = parse_gen_params(args.problem, args.gen)
            instance = generate_instance(args.problem, args.seed, params)
            for path in write_instance(args.problem, instance, args.out_dir):
                print(path)
            return 0
        config = RunConfig(
            problem=args.problem, step=args.step, c=args.c, max_iters=args.max_iters, tighten=args.tighten,
            stall_window=args.stall_window, stall_eps=args.stall_eps, seed=args.seed,
            verify=args.command == "verify" or args.verify, trace_out=args.trace_out,
            summary_out=args.summary_out, instances=args.instance, instance_dir=args.instance_dir,
            gen=parse_gen_params(args.problem, args.gen),
        )
        return run_command(config)
    except (LagrelaxError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
