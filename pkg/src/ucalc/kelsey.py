"""Translating Extended Vminus functions into closed calculus terms.

Each basic block becomes a function whose parameters are the block's phi
targets; branches become applications whose arguments are the phi
incomings for the branching predecessor.  Block functions are bound by
letrec nests arranged along the dominator tree, which reproduces SSA
scoping: a block's commands are in scope for everything it dominates.

The calculus has no letrec, so mutual recursion is encoded with a
call-by-value self-application knot; recursive references are
eta-expanded so evaluation terminates.  The sugar is characterized by its
unrolling behavior, not its spelling.
"""

from dataclasses import dataclass, field
import warnings

from .terms import (
    App, BinOp, Const, Err, If, Lam, UNREACHABLE, Var,
    bound_names, free_vars, fresh_name, substitute,
)
from .reduction import Timeout, UndefHit, evaluate
from .safety import IntegerModeSafety
from .rewrite import search_equiv
from . import vminus as vm


def make_let(name, bound, body):
    return App(Lam(name, body), bound)


@dataclass(frozen=True)
class LetrecSpec:
    bindings: tuple  # ((name, params, body_term), ...)
    body: object

    def __post_init__(self):
        names = [n for n, _, _ in self.bindings]
        if len(set(names)) != len(names):
            raise ValueError("duplicate letrec binding names")


def make_letrec(spec):
    """Pure-lambda mutual recursion.

    Every binding is abstracted over all binding names; a let chain binds
    the abstracted versions and recursive references become eta-expanded
    self-applications, so each reference re-ties the knot on demand (and
    stays a value, which call-by-value needs).
    """
    bindings = list(spec.bindings)
    names = [n for n, _, _ in bindings]
    avoid = set(names)
    for _, params, body in bindings:
        avoid |= set(params) | free_vars(body) | bound_names(body)
    avoid |= free_vars(spec.body) | bound_names(spec.body)

    knots = [fresh_name(f"%fx_{n.lstrip('%')}", avoid) for n in names]
    avoid |= set(knots)
    eta_v = fresh_name("%eta", avoid)

    def eta(j):
        call = Var(knots[j])
        for h in knots:
            call = App(call, Var(h))
        return Lam(eta_v, App(call, Var(eta_v)))

    def tie(term):
        for j, n in enumerate(names):
            term = substitute(term, n, eta(j))
        return term

    wrapped = []
    for n, params, body in bindings:
        inner = body
        for p in reversed(params):
            inner = Lam(p, inner)
        inner = tie(inner)
        for h in reversed(knots):
            inner = Lam(h, inner)
        wrapped.append(inner)

    out = tie(spec.body)
    for h, w in zip(reversed(knots), reversed(wrapped)):
        out = make_let(h, w, out)
    return out


# ---------------------------------------------------------------------------
# The block-to-function translation.

def _val_term(v):
    return Var(v) if vm.is_var(v) else Const(v)


def _dummy_param(label):
    return f"%_{label}"


def _jump(f, frm, to):
    """Application encoding the CFG edge frm -> to; arguments come from the
    phi nodes of the target, selected for the branching predecessor."""
    tb = f.block(to)
    out = Var(to)
    if not tb.phis:
        return App(out, Const(0))
    for p in tb.phis:
        arg = None
        for v, lbl in p.incomings:
            if lbl == frm:
                arg = _val_term(v)
                break
        if arg is None:
            raise vm.VminusError(
                f"{to}: phi {p.target} has no incoming for predecessor {frm}")
        out = App(out, arg)
    return out


def kh_term(f, label, dom=None):
    t = f.block(label).terminator
    if isinstance(t, vm.Ret):
        return _val_term(t.value)
    if isinstance(t, vm.UnreachableT):
        return UNREACHABLE
    if isinstance(t, vm.Br):
        return _jump(f, label, t.target)
    if isinstance(t, vm.BrCond):
        return If(_val_term(t.cond),
                  _jump(f, label, t.then_target),
                  _jump(f, label, t.else_target))
    raise vm.VminusError(f"unknown terminator in {label}")


def kh_cs(f, label, commands, dom=None):
    """Commands become nested lets; an error call ends the translation (the
    rest of the block is dead); after the last command the block's
    dominator-tree children are bound and the terminator is translated."""
    if dom is None:
        dom = vm.compute_dominators(f)
    commands = list(commands)
    if commands:
        c = commands[0]
        if isinstance(c, vm.CallError):
            return Err("user")
        rest = kh_cs(f, label, commands[1:], dom)
        return make_let(c.dest, BinOp(c.op, _val_term(c.left), _val_term(c.right)),
                        rest)
    kids = dom.children.get(label, ())
    tail = kh_term(f, label, dom)
    if not kids:
        return tail
    bindings = tuple((k, (), kh_jump(f, k, dom)) for k in kids)
    return make_letrec(LetrecSpec(bindings, tail))


def kh_jump(f, label, dom=None):
    """A block as a function over its phi targets (or one ignored parameter
    when it has none, keeping branch-equals-application uniform)."""
    if dom is None:
        dom = vm.compute_dominators(f)
    b = f.block(label)
    params = [p.target for p in b.phis] or [_dummy_param(label)]
    body = kh_cs(f, label, b.commands, dom)
    for p in reversed(params):
        body = Lam(p, body)
    return body


def kh_proc(f):
    """Whole function as a closed curried lambda over its parameters."""
    errors = vm.validate(f)
    if errors:
        raise vm.VminusError("invalid function:\n  " + "\n  ".join(errors))
    dom = vm.compute_dominators(f)
    dead = [b.label for b in f.blocks if b.label not in dom.reachable]
    if dead:
        warnings.warn(f"dropping blocks unreachable from entry: {dead}")
        for l in dead:
            f = f.drop_block(l)
        dom = vm.compute_dominators(f)
    entry = f.blocks[0]
    body = kh_cs(f, entry.label, entry.commands, dom)
    params = list(f.params) or ["%_arg"]
    for p in reversed(params):
        body = Lam(p, body)
    fv = free_vars(body)
    assert not fv, f"translation not closed: {sorted(fv)}"
    return body


def kh_apply(term, args):
    """Apply a translated function to integer arguments (a dummy constant
    for zero-parameter functions)."""
    if not args:
        return App(term, Const(0))
    for a in args:
        term = App(term, Const(a) if not isinstance(a, Const) else a)
    return term


# ---------------------------------------------------------------------------
# Desk-scale checking that simplification commutes with translation.

_WITNESS_RULES = frozenset({
    ("M3", "bwd"), ("M4", "fwd"), ("M1", "bwd"), ("M2", "bwd"), ("M5", "bwd"),
    ("U1", "fwd"), ("U2", "fwd"),
    ("P1", "fwd"), ("P2", "fwd"), ("P3", "fwd"), ("P4", "fwd"), ("P5", "fwd"),
})


@dataclass
class TranslationCheckConfig:
    samples: int = 8
    fuel: int = 30_000
    seed: int = 0
    lo: int = -3
    hi: int = 6
    search: bool = True
    search_max_blocks: int = 4
    depth: int = 12
    width: int = 16


@dataclass
class TranslationCheckReport:
    label: str
    cases: list = field(default_factory=list)  # (args, verdict, obs_str, obs_str)
    witness: object = None                     # trace, [] for identity, or None
    searched: bool = False

    def count(self, verdict):
        return sum(1 for c in self.cases if c[1] == verdict)

    @property
    def disagreements(self):
        return self.count("disagree")

    def summary(self):
        parts = [f"{v}={self.count(v)}"
                 for v in ("agree", "vacuous-undef", "unknown", "disagree")]
        w = "none"
        if self.witness is not None:
            w = f"{len(self.witness)} steps"
        elif self.searched:
            w = "not found"
        return f"block {self.label}: {' '.join(parts)} witness: {w}"


def check_simplify_translation(f, label, config=None):
    """Simplify the unreachable-terminated block `label`, translate both
    versions, and compare their evaluations on sampled integer inputs.
    Inputs on which the original translation hits undefined behavior are
    vacuous; fuel exhaustion on either side is unknown.  For small
    functions a rewrite-trace witness between the translations is also
    searched for."""
    import random

    config = config or TranslationCheckConfig()
    b = f.block(label)
    if not isinstance(b.terminator, vm.UnreachableT):
        raise vm.VminusError(f"{label} does not end in unreachable")
    dom = vm.compute_dominators(f)
    if label not in dom.reachable:
        raise vm.VminusError(f"{label} is not reachable from the entry")

    f2, _changed = vm.simplify_unreachable(f, label)
    t1 = kh_proc(f)
    t2 = kh_proc(f2)

    report = TranslationCheckReport(label=label)
    rng = random.Random(config.seed)
    for _ in range(config.samples):
        args = [rng.randint(config.lo, config.hi) for _ in f.params]
        o1 = evaluate(kh_apply(t1, args), config.fuel)
        o2 = evaluate(kh_apply(t2, args), config.fuel)
        if isinstance(o1, Timeout) or isinstance(o2, Timeout):
            verdict = "unknown"
        elif isinstance(o1, UndefHit):
            verdict = "vacuous-undef"
        elif o1 == o2:
            verdict = "agree"
        else:
            verdict = "disagree"
        report.cases.append((tuple(args), verdict, str(o1), str(o2)))

    if config.search and len(f.blocks) <= config.search_max_blocks:
        report.searched = True
        report.witness = search_equiv(
            t1, t2, depth=config.depth, width=config.width,
            safety=IntegerModeSafety(), pool=[], rules=_WITNESS_RULES)
    return report
