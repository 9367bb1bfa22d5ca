"""Safety checking: does an expression always evaluate to a value?

Two complementary checkers, because the definition quantifies over all
closing substitutions and is undecidable in general:

* a conservative syntactic checker (never wrong when it says safe),
* a sampling oracle (never wrong when it says unsafe, ships a witness).

Rewrite rules consume safety through a small provider interface so the
assumption regime is explicit and replayable.  The ``integer`` provider
reproduces pipelines whose variables are known to range over integers
only; plain mathematical arithmetic is then total.
"""

from dataclasses import dataclass, field
from enum import Enum
import random

from .terms import (
    BinOp, Const, If, Lam, Seq, Var, ARITH_OPS, CMP_OPS, EQ_OPS,
    free_vars, is_value, substitute,
)
from .reduction import DEFAULT_FUEL, Value, Function, delta, evaluate


class Verdict(Enum):
    SAFE = "safe"
    UNSAFE = "unsafe"
    UNKNOWN = "unknown"


@dataclass
class SafetyResult:
    verdict: Verdict
    witness: dict = field(default_factory=dict)  # name -> Term, when UNSAFE


def safe_syntactic(e):
    """Sound under-approximation of safety.

    Safe terms: values, variables, If/Seq of safe parts, and operator
    applications whose operands are literal constants inside the operator's
    domain.  Applications, open operator uses, errors, and unreachable are
    all flagged unsafe.
    """
    if is_value(e) or isinstance(e, Var):
        return Verdict.SAFE
    if isinstance(e, If):
        parts = (e.test, e.then, e.orelse)
    elif isinstance(e, Seq):
        parts = (e.first, e.second)
    elif isinstance(e, BinOp):
        if not (isinstance(e.left, Const) and isinstance(e.right, Const)):
            return Verdict.UNSAFE
        if delta(e.op, e.left, e.right) is None:
            return Verdict.UNSAFE
        return Verdict.SAFE
    else:
        return Verdict.UNSAFE
    if all(safe_syntactic(p) is Verdict.SAFE for p in parts):
        return Verdict.SAFE
    return Verdict.UNSAFE


def default_value_pool():
    return [
        Const(0), Const(1), Const(2), Const(-1), Const(7),
        Const(True), Const(False),
        Lam("y", Var("y")),
        Lam("y", Const(0)),
        Lam("y", Const(True)),
        Lam("y", Const(False)),
    ]


def safe_oracle(e, delta_vars, samples=20, fuel=DEFAULT_FUEL, seed=0, pool=None):
    """Sampling refuter for safety.

    Substitutes random closing value tuples and evaluates; an unsafe verdict
    carries the substitution that produced a non-value.  Never claims SAFE.
    """
    if not free_vars(e) <= set(delta_vars):
        raise ValueError("free variables outside delta")
    rng = random.Random(seed)
    pool = list(pool) if pool is not None else default_value_pool()
    names = sorted(set(delta_vars))
    for _ in range(max(1, samples)):
        subst = {n: rng.choice(pool) for n in names}
        closed = e
        for n, v in subst.items():
            closed = substitute(closed, n, v)
        obs = evaluate(closed, fuel)
        if isinstance(obs, (Value, Function)):
            continue
        return SafetyResult(Verdict.UNSAFE, subst)
    return SafetyResult(Verdict.UNKNOWN)


# ---------------------------------------------------------------------------
# Providers used by the rewrite engine's side conditions.

class SafetyProvider:
    name = "abstract"

    def is_safe(self, e):
        raise NotImplementedError


class SyntacticSafety(SafetyProvider):
    name = "syntactic"

    def is_safe(self, e):
        return safe_syntactic(e) is Verdict.SAFE


_INT, _BOOL, _FUN, _ANY = "int", "bool", "fun", "any"


def _integer_mode_type(e):
    """Type of e assuming every free variable is an integer; None if e can
    fail to produce a value under that assumption."""
    if isinstance(e, Var):
        return _INT
    if isinstance(e, Const):
        return _BOOL if type(e.value) is bool else _INT
    if isinstance(e, Lam):
        return _FUN
    if isinstance(e, BinOp):
        lt = _integer_mode_type(e.left)
        rt = _integer_mode_type(e.right)
        if lt is None or rt is None:
            return None
        if e.op in ARITH_OPS or e.op in CMP_OPS:
            if lt == rt == _INT:
                return _INT if e.op in ARITH_OPS else _BOOL
            return None
        if e.op in EQ_OPS:
            if lt == rt and lt in (_INT, _BOOL):
                return _BOOL
            return None
        return None
    if isinstance(e, If):
        tt = _integer_mode_type(e.test)
        at = _integer_mode_type(e.then)
        bt = _integer_mode_type(e.orelse)
        if tt is None or at is None or bt is None:
            return None
        return at if at == bt else _ANY
    if isinstance(e, Seq):
        ft = _integer_mode_type(e.first)
        st = _integer_mode_type(e.second)
        if ft is None or st is None:
            return None
        return st
    # App may diverge or err; Err/Unreachable/Hole are not values.
    return None


class IntegerModeSafety(SafetyProvider):
    """Safety assuming free variables range over integers only."""

    name = "integer"

    def is_safe(self, e):
        return _integer_mode_type(e) is not None


_PROVIDERS = {p.name: p for p in (SyntacticSafety(), IntegerModeSafety())}


def get_provider(name):
    try:
        return _PROVIDERS[name]
    except KeyError:
        raise ValueError(f"unknown safety provider {name!r}")
