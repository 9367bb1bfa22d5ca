"""Run-time semantics: small-step standard reduction with fuel.

Single-step reduction works by unique decomposition of a closed non-answer
term into an evaluation context and a redex.  Reaching an error or an
``unreachable`` in evaluation position discards the whole context in one
step.  Bounded evaluation maps answers onto a small observation alphabet:
constant, function existence, labeled error, undefined-behavior hit, or
fuel exhaustion.
"""

from dataclasses import dataclass
from enum import Enum

from .terms import (
    App, BinOp, Const, Err, HOLE, If, Lam, Seq, Unreachable, FALSE,
    free_vars, is_answer, is_value, substitute,
)

DEFAULT_FUEL = 100_000

ERR_BETA = Err("beta")
ERR_DELTA = Err("delta")


class OpenTermError(Exception):
    pass


def _require_closed(e):
    fv = free_vars(e)
    if fv:
        raise OpenTermError(f"term has free variables: {sorted(fv)}")


# ---------------------------------------------------------------------------
# Delta: primitive operator meaning.  Returns a python int/bool, or None when
# the arguments are outside the operator's domain.

def delta_raw(op, a, b):
    a_bool = type(a) is bool
    b_bool = type(b) is bool
    ints = not a_bool and not b_bool
    if op == "+" and ints:
        return a + b
    if op == "-" and ints:
        return a - b
    if op == "*" and ints:
        return a * b
    if op == "<" and ints:
        return a < b
    if op == "<=" and ints:
        return a <= b
    if op == "=" and (ints or (a_bool and b_bool)):
        return a == b
    if op == "!=" and (ints or (a_bool and b_bool)):
        return a != b
    return None


def delta(op, c1, c2):
    """Const x Const -> Const, or None outside delta's domain."""
    if not isinstance(c1, Const) or not isinstance(c2, Const):
        return None
    v = delta_raw(op, c1.value, c2.value)
    return None if v is None else Const(v)


def truthy(c):
    """Everything except the constant false tests true."""
    return c != FALSE


# ---------------------------------------------------------------------------
# Decomposition.  For a closed non-answer term this finds the unique
# context/redex split.  The spine walk returns the redex path; the public
# decompose wraps it as a term-with-hole context.

def _find_redex(e):
    """(spine, redex) for a non-answer term; spine lists (node, child index)
    pairs from the root down to the redex position."""
    spine = []
    t = e
    while True:
        if isinstance(t, (Err, Unreachable)):
            return spine, t
        if isinstance(t, If):
            if is_value(t.test):
                return spine, t
            spine.append((t, 0))
            t = t.test
        elif isinstance(t, Seq):
            if is_value(t.first):
                return spine, t
            spine.append((t, 0))
            t = t.first
        elif isinstance(t, App):
            if not is_value(t.fn):
                spine.append((t, 0))
                t = t.fn
            elif not is_value(t.arg):
                spine.append((t, 1))
                t = t.arg
            else:
                return spine, t
        elif isinstance(t, BinOp):
            if not is_value(t.left):
                spine.append((t, 0))
                t = t.left
            elif not is_value(t.right):
                spine.append((t, 1))
                t = t.right
            else:
                return spine, t
        else:
            raise AssertionError(f"stuck at {t!r}")


def _node_children(n):
    if isinstance(n, If):
        return (n.test, n.then, n.orelse)
    if isinstance(n, Seq):
        return (n.first, n.second)
    if isinstance(n, App):
        return (n.fn, n.arg)
    if isinstance(n, BinOp):
        return (n.left, n.right)
    raise AssertionError


def _node_rebuild(n, kids):
    if isinstance(n, If):
        return If(kids[0], kids[1], kids[2])
    if isinstance(n, Seq):
        return Seq(kids[0], kids[1])
    if isinstance(n, App):
        return App(kids[0], kids[1])
    if isinstance(n, BinOp):
        return BinOp(n.op, kids[0], kids[1])
    raise AssertionError


def _rebuild_spine(spine, filler):
    out = filler
    for node, idx in reversed(spine):
        kids = list(_node_children(node))
        kids[idx] = out
        out = _node_rebuild(node, kids)
    return out


def decompose(e):
    """Return (context, redex) for a closed non-answer term, or None if e is
    already an answer.  The context is a term with one hole; the redex is
    either a primitive redex or an Err / Unreachable sitting in a
    non-empty context."""
    _require_closed(e)
    if is_answer(e):
        return None
    spine, redex = _find_redex(e)
    return _rebuild_spine(spine, HOLE), redex


def contract(redex):
    """Apply the matching notion of reduction to a primitive redex."""
    if isinstance(redex, If):
        if redex.test == FALSE:
            return redex.orelse
        return redex.then
    if isinstance(redex, Seq):
        return redex.second
    if isinstance(redex, App):
        if isinstance(redex.fn, Lam):
            return substitute(redex.fn.body, redex.fn.param, redex.arg)
        return ERR_BETA
    if isinstance(redex, BinOp):
        res = delta(redex.op, redex.left, redex.right)
        return ERR_DELTA if res is None else res
    raise AssertionError(f"not a redex: {redex!r}")


def _step_unchecked(e):
    if is_answer(e):
        return None
    spine, redex = _find_redex(e)
    if isinstance(redex, (Err, Unreachable)):
        return redex  # the whole context is discarded in a single step
    return _rebuild_spine(spine, contract(redex))


def step(e):
    """One standard-reduction step; None if e is already an answer."""
    _require_closed(e)
    return _step_unchecked(e)


# ---------------------------------------------------------------------------
# Bounded evaluation and observations.

@dataclass(frozen=True)
class Value:
    const: Const

    def __str__(self):
        return f"value {self.const}"


@dataclass(frozen=True)
class Function:
    def __str__(self):
        return "function"


@dataclass(frozen=True)
class ErrK:
    label: str

    def __str__(self):
        return f"error {self.label}"


@dataclass(frozen=True)
class UndefHit:
    def __str__(self):
        return "undef"


@dataclass(frozen=True)
class Timeout:
    steps: int

    def __str__(self):
        return "timeout"


Observation = (Value, Function, ErrK, UndefHit, Timeout)


def run(e, fuel=DEFAULT_FUEL):
    """Iterate steps; returns (final term, steps used, finished flag)."""
    _require_closed(e)
    steps = 0
    while steps < fuel:
        nxt = _step_unchecked(e)
        if nxt is None:
            return e, steps, True
        e = nxt
        steps += 1
    return e, steps, is_answer(e)


def observe_answer(a):
    if isinstance(a, Const):
        return Value(a)
    if isinstance(a, Lam):
        return Function()
    if isinstance(a, Err):
        return ErrK(a.label)
    if isinstance(a, Unreachable):
        return UndefHit()
    raise AssertionError(f"not an answer: {a!r}")


def evaluate(e, fuel=DEFAULT_FUEL):
    """Evaluate to an Observation within the given step budget."""
    final, steps, finished = run(e, fuel)
    if not finished:
        return Timeout(steps)
    return observe_answer(final)


class UndefVerdict(Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


def is_undef(e, fuel=DEFAULT_FUEL):
    """Bounded check whether e standard-reduces to unreachable."""
    obs = evaluate(e, fuel)
    if isinstance(obs, UndefHit):
        return UndefVerdict.YES
    if isinstance(obs, Timeout):
        return UndefVerdict.UNKNOWN
    return UndefVerdict.NO
