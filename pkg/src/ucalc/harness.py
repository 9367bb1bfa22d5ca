"""Differential harness: check rewrite traces by evaluation under contexts.

For a term and a trace, both endpoints are plugged into sampled closing
contexts and evaluated.  A case where the original program hits undefined
behavior is vacuous (the rewrite owes nothing there); fuel exhaustion on
either side is unknown; otherwise the two observations must match on the
comparison alphabet (constants by value, functions by existence, errors
by label).  Traces built only from the unconditionally-sound rule
families are additionally compared without the undefined-behavior guard.

Sampling can only refute; an all-agree report is evidence, not proof.
"""

from dataclasses import dataclass, field
import json
import random

from .terms import free_vars, plug, print_term
from .reduction import Timeout, UndefHit, evaluate
from .rewrite import U_RULES, apply_trace, trace_to_text
from .safety import get_provider
from . import gen

observe = evaluate


@dataclass
class HarnessConfig:
    fuel: int = 10_000
    num_contexts: int = 20
    num_terms: int = 100
    seed: int = 0
    safety: str = "syntactic"

    def header(self):
        return (f"; fuel={self.fuel} contexts={self.num_contexts} "
                f"terms={self.num_terms} seed={self.seed} safety={self.safety}")


@dataclass
class HarnessCase:
    mode: str          # guarded | unconditional
    context: str
    verdict: str       # agree | vacuous-undef | disagree | unknown
    lhs: str
    rhs: str
    bundle: dict = None

    def to_json(self):
        d = {"mode": self.mode, "context": self.context, "verdict": self.verdict,
             "lhs": self.lhs, "rhs": self.rhs}
        if self.bundle:
            d["bundle"] = self.bundle
        return json.dumps(d, sort_keys=True)


@dataclass
class HarnessReport:
    config: HarnessConfig
    term: str
    trace: str
    cases: list = field(default_factory=list)

    def count(self, verdict, mode=None):
        return sum(1 for c in self.cases
                   if c.verdict == verdict and (mode is None or c.mode == mode))

    @property
    def disagreements(self):
        return [c for c in self.cases if c.verdict == "disagree"]

    def to_jsonl(self):
        return "\n".join(c.to_json() for c in self.cases)

    def summary(self):
        parts = [f"{v}={self.count(v)}"
                 for v in ("agree", "vacuous-undef", "unknown", "disagree")]
        return f"cases={len(self.cases)} " + " ".join(parts)


def _verdict(obs1, obs2, guarded):
    if isinstance(obs1, Timeout) or isinstance(obs2, Timeout):
        return "unknown"
    if guarded and isinstance(obs1, UndefHit):
        return "vacuous-undef"
    return "agree" if obs1 == obs2 else "disagree"


def sample_context(delta_vars, rng=None, seed=0, pool=None):
    rng = rng or random.Random(seed)
    return gen.sample_context(delta_vars, rng, pool=pool)


def check_pair(e, e2, delta_vars, config=None, contexts=None, unconditional=False,
               trace=None):
    """Compare e and e2 under closing contexts.  `unconditional` drops the
    undefined-behavior guard (both sides then must agree even on undef)."""
    config = config or HarnessConfig()
    if not free_vars(e) <= set(delta_vars) or not free_vars(e2) <= set(delta_vars):
        raise ValueError("free variables outside delta")
    if contexts is None:
        rng = random.Random(config.seed)
        contexts = [gen.sample_context(delta_vars, rng)
                    for _ in range(config.num_contexts)]
    report = HarnessReport(config, print_term(e),
                           trace_to_text(trace) if trace else "")
    modes = [("unconditional", False)] if unconditional else [("guarded", True)]
    for ctx in contexts:
        lhs = plug(ctx, e)
        rhs = plug(ctx, e2)
        obs1 = evaluate(lhs, config.fuel)
        obs2 = evaluate(rhs, config.fuel)
        for mode, guarded in modes:
            v = _verdict(obs1, obs2, guarded)
            bundle = None
            if v == "disagree":
                bundle = {
                    "term": print_term(e),
                    "rewritten": print_term(e2),
                    "context": print_term(ctx),
                    "trace": trace_to_text(trace) if trace else "",
                    "fuel": config.fuel,
                    "seed": config.seed,
                }
            report.cases.append(HarnessCase(mode, print_term(ctx), v,
                                            str(obs1), str(obs2), bundle))
    return report


def check_correctness(e, delta_vars, trace, config=None, contexts=None):
    """Replay the trace on e, then check the endpoints differentially.

    Guarded comparison always runs.  When the trace uses no branch
    elimination (no U steps) its soundness is unconditional, so the same
    cases are also compared unguarded.
    """
    config = config or HarnessConfig()
    provider = get_provider(config.safety)
    e2 = apply_trace(e, trace, provider)
    if contexts is None:
        rng = random.Random(config.seed)
        contexts = [gen.sample_context(delta_vars, rng)
                    for _ in range(config.num_contexts)]
    report = check_pair(e, e2, delta_vars, config, contexts, trace=trace)
    if trace and all(s.rule not in U_RULES for s in trace):
        extra = check_pair(e, e2, delta_vars, config, contexts,
                           unconditional=True, trace=trace)
        report.cases.extend(extra.cases)
    return report


# ---------------------------------------------------------------------------
# Rule-soundness fuzzing: random terms, one random rewrite step, sampled
# contexts.  P/M steps must agree unconditionally; U steps must agree on
# every case where the original does not hit undefined behavior.

@dataclass
class FuzzOutcome:
    attempted: int = 0
    checked: int = 0
    cases: int = 0
    disagreements: list = field(default_factory=list)
    by_rule: dict = field(default_factory=dict)

    def summary(self):
        rules = " ".join(f"{r}={n}" for r, n in sorted(self.by_rule.items()))
        return (f"terms={self.checked}/{self.attempted} cases={self.cases} "
                f"disagreements={len(self.disagreements)} [{rules}]")


def fuzz_rule_soundness(config=None, term_fuel=7, rules=None):
    from .rewrite import RewriteError, applicable_rules, apply_rule
    from .safety import SyntacticSafety

    config = config or HarnessConfig()
    provider = get_provider(config.safety)
    rng = random.Random(config.seed)
    out = FuzzOutcome()
    pool = gen.default_context_values()[:8]
    while out.checked < config.num_terms:
        out.attempted += 1
        if out.attempted > config.num_terms * 50:
            break
        delta_vars = tuple(f"x{i}" for i in range(rng.randint(0, 2)))
        e = gen.gen_rule_friendly_term(rng, term_fuel, scope=delta_vars)
        steps = applicable_rules(e, provider, budget=160, pool=pool, rules=rules)
        steps = [s for s in steps if s.param("template") is None]
        if not steps:
            continue
        # stratify by rule/direction so rare patterns still get exercised
        groups = {}
        for s in steps:
            groups.setdefault((s.rule, s.direction), []).append(s)
        step = rng.choice(groups[rng.choice(sorted(groups))])
        try:
            e2 = apply_rule(e, step, provider)
        except RewriteError:
            continue
        unconditional = step.rule not in U_RULES
        contexts = [gen.sample_context(delta_vars, rng)
                    for _ in range(config.num_contexts)]
        rep = check_pair(e, e2, delta_vars, config, contexts,
                         unconditional=unconditional, trace=[step])
        out.checked += 1
        out.cases += len(rep.cases)
        out.by_rule[step.rule] = out.by_rule.get(step.rule, 0) + 1
        for c in rep.disagreements:
            c.bundle["step"] = str(step)
            out.disagreements.append(c)
    return out
