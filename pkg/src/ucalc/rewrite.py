"""Compile-time rewriting: legality rules, traces, normalization, search.

Three rule families act at arbitrary positions inside a term:

* P rules propagate ``unreachable``: delete code downstream of it, let it
  eat safe code upstream, and reshape applications/operators around it
  into sequences.  Legal in both directions.
* U rules eliminate a conditional branch that is marked unreachable.
  Forward only; reinserting an unknown unreachable is not legal.
* M rules are general meaning-preserving moves (forward/backward partial
  evaluation, code motion into tail position, branch-knowledge rewrites).
  Legal in both directions.

A rewrite step names a rule, a direction, a path, and any parameters the
rule needs (injected terms, the safety provider that justified a side
condition).  A trace is a replayable list of steps, the artifact's witness
format for multi-step compile-time equalities.
"""

from dataclasses import dataclass
import itertools

from .terms import (
    App, BinOp, Const, Err, Hole, HOLE, If, Lam, Seq, Term, Unreachable,
    UNREACHABLE, Var, FALSE, TRUE, OPS,
    all_paths, alpha_eq, canonical, children, free_vars, fresh_name,
    format_path, parse_path, print_term, replace_at, size,
    subterm_at, substitute, with_children, PathError, _Reader, _tokenize,
)
from .reduction import delta
from .safety import SyntacticSafety, get_provider

P_RULES = ("P1", "P2", "P3", "P4", "P5")
U_RULES = ("U1", "U2")
M_RULES = tuple(f"M{i}" for i in range(1, 11))
ALL_RULES = P_RULES + U_RULES + M_RULES

_TERM_PARAM_KEYS = ("term", "term2", "body", "value", "const", "const2")
_SYM_PARAM_KEYS = ("safety", "var", "op", "shape")


class RewriteError(Exception):
    pass


class NonMatchingError(RewriteError):
    pass


class SideConditionFailedError(RewriteError):
    def __init__(self, condition):
        super().__init__(f"side condition failed: {condition}")
        self.condition = condition


class IllegalDirectionError(RewriteError):
    pass


class PathInvalidError(RewriteError):
    pass


class TraceError(RewriteError):
    def __init__(self, index, cause):
        super().__init__(f"step {index} failed: {cause}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class RewriteStep:
    rule: str
    direction: str = "fwd"
    path: tuple = ()
    params: tuple = ()

    def __post_init__(self):
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))
        if isinstance(self.path, str):
            object.__setattr__(self, "path", parse_path(self.path))

    def param(self, key, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    def with_param(self, key, value):
        d = dict(self.params)
        d[key] = value
        return RewriteStep(self.rule, self.direction, self.path, d)

    def __str__(self):
        return step_to_text(self)


def _fmt_param(key, value):
    if key == "hole":
        return format_path(value)
    if isinstance(value, Term):
        return print_term(value)
    return str(value)


def step_to_text(step):
    base = f"{step.rule} {step.direction} {format_path(step.path)}"
    if not step.params:
        return base
    parts = " ".join(f"({k} {_fmt_param(k, v)})" for k, v in step.params)
    return f"{base} ({parts})"


def step_from_text(line):
    toks = line.split(None, 3)
    if len(toks) < 3:
        raise RewriteError(f"malformed trace line: {line!r}")
    rule, direction, path = toks[0], toks[1], toks[2]
    if rule not in ALL_RULES:
        raise RewriteError(f"unknown rule {rule!r}")
    if direction not in ("fwd", "bwd"):
        raise RewriteError(f"unknown direction {direction!r}")
    params = {}
    if len(toks) == 4:
        params = _parse_params(toks[3])
    return RewriteStep(rule, direction, parse_path(path), params)


def _parse_params(text):
    rd = _Reader(_tokenize(text))
    rd.expect("(")
    params = {}
    while True:
        nxt = rd.peek()
        if nxt is None:
            raise RewriteError("unclosed parameter list")
        if nxt[0] == ")":
            rd.next()
            break
        rd.expect("(")
        key, _, _ = rd.symbol()
        if key == "hole":
            tok, _, _ = rd.next()
            params[key] = parse_path(tok)
        elif key in _SYM_PARAM_KEYS:
            tok, _, _ = rd.next()
            params[key] = tok
        elif key in _TERM_PARAM_KEYS:
            params[key] = rd.read()
        else:
            raise RewriteError(f"unknown parameter key {key!r}")
        rd.expect(")")
    extra = rd.peek()
    if extra is not None:
        raise RewriteError(f"trailing input in parameters: {extra[0]!r}")
    return params


def trace_to_text(trace):
    return "\n".join(step_to_text(s) for s in trace) + ("\n" if trace else "")


def trace_from_text(text):
    steps = []
    for line in text.splitlines():
        line = line.split(";", 1)[0].strip()
        if line:
            steps.append(step_from_text(line))
    return steps


# ---------------------------------------------------------------------------
# Rule application.

def _is_val(t):
    return isinstance(t, (Const, Lam))


def _val_or_var(t):
    return _is_val(t) or isinstance(t, Var)


def _eplus_valid(t, path):
    """Path validity in the generalized evaluation-context grammar: the hole
    may only sit in next-to-evaluate position, where already-evaluated
    slots may also hold variables."""
    for i in path:
        if isinstance(t, App):
            ok = i == 0 or (i == 1 and _val_or_var(t.fn))
        elif isinstance(t, BinOp):
            ok = i == 0 or (i == 1 and _val_or_var(t.left))
        elif isinstance(t, (If, Seq)):
            ok = i == 0
        else:
            ok = False
        if not ok:
            return False
        t = children(t)[i]
    return True


def _ambient_names(e, path):
    names = set(free_vars(e))
    t = e
    for i in path:
        if isinstance(t, Lam):
            names.add(t.param)
        t = children(t)[i]
    return names


def _step_provider(step, default):
    name = step.param("safety")
    return get_provider(name) if name is not None else default


def _need(cond, what):
    if not cond:
        raise NonMatchingError(what)


def _need_param(step, key):
    v = step.param(key)
    if v is None:
        raise RewriteError(f"rule {step.rule} {step.direction} needs parameter {key!r}")
    return v


def _need_safe(provider, t, what):
    if not provider.is_safe(t):
        raise SideConditionFailedError(f"{what} not safe under {provider.name!r} provider")


def apply_rule(e, step, safety=None):
    """Apply one rewrite step to e; raises a RewriteError subclass when the
    pattern, the direction, the path, or a side condition does not hold."""
    provider = _step_provider(step, safety or SyntacticSafety())
    try:
        t = subterm_at(e, step.path)
    except PathError as exc:
        raise PathInvalidError(str(exc))
    out = _apply_at(t, step, provider)
    extra = free_vars(out) - _ambient_names(e, step.path)
    if extra:
        raise SideConditionFailedError(
            f"injected term uses variables {sorted(extra)} not in scope")
    return replace_at(e, step.path, out)


def _apply_at(t, step, provider):
    rule, d = step.rule, step.direction
    if d not in ("fwd", "bwd"):
        raise RewriteError(f"unknown direction {d!r}")
    if rule in U_RULES and d == "bwd":
        raise IllegalDirectionError(f"{rule} is forward-only")
    handler = _RULES.get(rule)
    if handler is None:
        raise RewriteError(f"unknown rule {rule!r}")
    return handler(t, step, d, provider)


def _rule_p1(t, step, d, provider):
    if d == "fwd":
        _need(isinstance(t, Seq) and isinstance(t.second, Unreachable),
              "expected (seq e (unreachable))")
        _need_safe(provider, t.first, "sequence head")
        return UNREACHABLE
    _need(isinstance(t, Unreachable), "expected (unreachable)")
    inj = _need_param(step, "term")
    _need_safe(provider, inj, "injected term")
    return Seq(inj, UNREACHABLE)


def _rule_p2(t, step, d, provider):
    if d == "fwd":
        _need(isinstance(t, Seq) and isinstance(t.first, Unreachable),
              "expected (seq (unreachable) e)")
        return UNREACHABLE
    _need(isinstance(t, Unreachable), "expected (unreachable)")
    return Seq(UNREACHABLE, _need_param(step, "term"))


def _rule_p3(t, step, d, provider):
    if d == "fwd":
        if isinstance(t, App) and isinstance(t.arg, Unreachable):
            return Seq(t.fn, UNREACHABLE)
        if isinstance(t, BinOp) and isinstance(t.right, Unreachable):
            return Seq(t.left, UNREACHABLE)
        raise NonMatchingError("expected application or operator with unreachable argument")
    _need(isinstance(t, Seq) and isinstance(t.second, Unreachable),
          "expected (seq e (unreachable))")
    shape = _need_param(step, "shape")
    if shape == "app":
        return App(t.first, UNREACHABLE)
    if shape == "binop":
        op = _need_param(step, "op")
        _need(op in OPS, f"unknown operator {op!r}")
        return BinOp(op, t.first, UNREACHABLE)
    raise RewriteError(f"bad shape {shape!r} for P3")


def _rule_p4(t, step, d, provider):
    if d == "fwd":
        _need(isinstance(t, App) and isinstance(t.fn, Unreachable),
              "expected ((unreachable) e)")
        return UNREACHABLE
    _need(isinstance(t, Unreachable), "expected (unreachable)")
    return App(UNREACHABLE, _need_param(step, "term"))


def _rule_p5(t, step, d, provider):
    if d == "fwd":
        if isinstance(t, BinOp) and isinstance(t.left, Unreachable):
            return UNREACHABLE
        if isinstance(t, If) and isinstance(t.test, Unreachable):
            return UNREACHABLE
        raise NonMatchingError("expected operator or conditional headed by unreachable")
    _need(isinstance(t, Unreachable), "expected (unreachable)")
    shape = _need_param(step, "shape")
    if shape == "binop":
        op = _need_param(step, "op")
        _need(op in OPS, f"unknown operator {op!r}")
        return BinOp(op, UNREACHABLE, _need_param(step, "term"))
    if shape == "if":
        return If(UNREACHABLE, _need_param(step, "term"), _need_param(step, "term2"))
    raise RewriteError(f"bad shape {shape!r} for P5")


def _rule_u1(t, step, d, provider):
    _need(isinstance(t, If) and isinstance(t.orelse, Unreachable),
          "expected (if e e (unreachable))")
    return Seq(t.test, t.then)


def _rule_u2(t, step, d, provider):
    _need(isinstance(t, If) and isinstance(t.then, Unreachable),
          "expected (if e (unreachable) e)")
    return Seq(t.test, t.orelse)


def _rule_m1(t, step, d, provider):
    if d == "fwd":
        v = _need_param(step, "value")
        _need(_is_val(v), "guard must be a value")
        if v == FALSE:
            raise SideConditionFailedError("guard must not be false")
        return If(v, t, _need_param(step, "term"))
    _need(isinstance(t, If), "expected conditional")
    _need(_is_val(t.test), "test must be a value")
    if t.test == FALSE:
        raise SideConditionFailedError("test must not be false")
    return t.then


def _rule_m2(t, step, d, provider):
    if d == "fwd":
        return If(FALSE, _need_param(step, "term"), t)
    _need(isinstance(t, If) and t.test == FALSE, "expected (if false e e)")
    return t.orelse


def _rule_m3(t, step, d, provider):
    if d == "fwd":
        x = _need_param(step, "var")
        body = _need_param(step, "body")
        arg = _need_param(step, "term")
        _need_safe(provider, arg, "lifted expression")
        if not alpha_eq(substitute(body, x, arg), t):
            raise NonMatchingError("body[var := term] does not match the redex")
        return App(Lam(x, body), arg)
    _need(isinstance(t, App) and isinstance(t.fn, Lam), "expected ((lambda (x) e) e)")
    _need_safe(provider, t.arg, "argument")
    return substitute(t.fn.body, t.fn.param, t.arg)


def _rule_m4(t, step, d, provider):
    if d == "fwd":
        _need(isinstance(t, Seq), "expected (seq e e)")
        _need_safe(provider, t.first, "sequence head")
        return t.second
    inj = _need_param(step, "term")
    _need_safe(provider, inj, "injected term")
    return Seq(inj, t)


def _rule_m5(t, step, d, provider):
    if d == "fwd":
        _need(isinstance(t, Const), "expected constant")
        op = _need_param(step, "op")
        c1 = _need_param(step, "const")
        c2 = _need_param(step, "const2")
        _need(isinstance(c1, Const) and isinstance(c2, Const), "operands must be constants")
        res = delta(op, c1, c2)
        if res is None or res != t:
            raise SideConditionFailedError("operands do not evaluate to the constant")
        return BinOp(op, c1, c2)
    _need(isinstance(t, BinOp) and isinstance(t.left, Const)
          and isinstance(t.right, Const), "expected operator on constants")
    res = delta(t.op, t.left, t.right)
    if res is None:
        raise SideConditionFailedError("operator undefined on these constants")
    return res


def _hole_param(step, scope):
    q = step.param("hole")
    if q is None:
        raise RewriteError(f"rule {step.rule} {step.direction} needs parameter 'hole'")
    if not q:
        raise NonMatchingError("hole path must be non-empty")
    try:
        subterm_at(scope, q)
    except PathError:
        raise PathInvalidError("hole path does not resolve")
    if not _eplus_valid(scope, q):
        raise SideConditionFailedError("hole not in evaluation position")
    return q


def _rule_m6(t, step, d, provider):
    if d == "fwd":
        q = _hole_param(step, t)
        inner = subterm_at(t, q)
        _need(isinstance(inner, Seq), "hole must point at a sequence")
        return Seq(inner.first, replace_at(t, q, inner.second))
    _need(isinstance(t, Seq), "expected (seq e e)")
    q = _hole_param(step, t.second)
    moved = subterm_at(t.second, q)
    return replace_at(t.second, q, Seq(t.first, moved))


def _rule_m7(t, step, d, provider):
    if d == "fwd":
        q = _hole_param(step, t)
        inner = subterm_at(t, q)
        _need(isinstance(inner, If), "hole must point at a conditional")
        return If(inner.test, replace_at(t, q, inner.then), replace_at(t, q, inner.orelse))
    _need(isinstance(t, If), "expected conditional")
    q = _hole_param(step, t.then)
    try:
        other = subterm_at(t.orelse, q)
    except PathError:
        raise NonMatchingError("branches do not share the context shape")
    if replace_at(t.then, q, HOLE) != replace_at(t.orelse, q, HOLE):
        raise NonMatchingError("branch contexts differ outside the hole")
    return replace_at(t.then, q, If(t.test, subterm_at(t.then, q), other))


def _rule_m8(t, step, d, provider):
    _need(isinstance(t, If) and isinstance(t.test, Var), "expected (if x e e)")
    x = t.test.name
    if d == "fwd":
        return If(t.test, t.then, substitute(t.orelse, x, FALSE))
    proto = _need_param(step, "term")
    if not alpha_eq(substitute(proto, x, FALSE), t.orelse):
        raise NonMatchingError("term[x := false] does not match the else branch")
    return If(t.test, t.then, proto)


def _rule_m9(t, step, d, provider):
    _need(isinstance(t, If), "expected conditional")
    if d == "fwd":
        inner = t.test
        _need(isinstance(inner, If), "test must be a conditional")
        _need(_is_val(inner.then) and inner.then != FALSE,
              "inner then-branch must be a non-false value")
        _need(inner.orelse == FALSE, "inner else-branch must be false")
        return If(inner.test, t.then, t.orelse)
    v1 = _need_param(step, "value")
    _need(_is_val(v1), "inner then-branch must be a value")
    if v1 == FALSE:
        raise SideConditionFailedError("inner then-branch must not be false")
    return If(If(t.test, v1, FALSE), t.then, t.orelse)


def _match_eq_chain(t):
    if (isinstance(t, If) and isinstance(t.test, BinOp) and t.test.op == "="
            and isinstance(t.test.left, Var) and isinstance(t.test.right, Const)
            and isinstance(t.orelse, If)):
        inner = t.orelse
        if (isinstance(inner.test, BinOp) and inner.test.op == "="
                and isinstance(inner.test.left, Var)
                and isinstance(inner.test.right, Const)
                and inner.test.left.name == t.test.left.name
                and inner.test.right != t.test.right):
            return t.test.left, t.test.right, t.then, inner.test.right, inner.then, inner.orelse
    return None


def _rule_m10(t, step, d, provider):
    m = _match_eq_chain(t)
    _need(m is not None, "expected nested equality checks on one variable")
    x, c1, e1, c2, e2, e3 = m
    return If(BinOp("=", x, c2), e2, If(BinOp("=", x, c1), e1, e3))


_RULES = {
    "P1": _rule_p1, "P2": _rule_p2, "P3": _rule_p3, "P4": _rule_p4, "P5": _rule_p5,
    "U1": _rule_u1, "U2": _rule_u2,
    "M1": _rule_m1, "M2": _rule_m2, "M3": _rule_m3, "M4": _rule_m4, "M5": _rule_m5,
    "M6": _rule_m6, "M7": _rule_m7, "M8": _rule_m8, "M9": _rule_m9, "M10": _rule_m10,
}


def apply_trace(e, trace, safety=None):
    """Fold apply_rule over a trace; reports the first failing step index."""
    for i, step in enumerate(trace):
        try:
            e = apply_rule(e, step, safety)
        except RewriteError as exc:
            raise TraceError(i, exc)
    return e


# ---------------------------------------------------------------------------
# Applicability enumeration.

def default_injection_pool():
    return [Const(0), Const(1), Const(2), TRUE, FALSE, Lam("y", Var("y"))]


def _m5_preimages(c):
    cands = []
    if type(c.value) is bool:
        pairs = [("<", 0, 1), ("<", 1, 0), ("<=", 0, 0), ("=", 0, 0),
                 ("=", 0, 1), ("!=", 0, 1), ("!=", 0, 0)]
    else:
        v = c.value
        pairs = [("+", v - 1, 1), ("+", 0, v), ("+", 1, v - 1),
                 ("-", v + 1, 1), ("*", 1, v), ("*", v, 1)]
    for op, a, b in pairs:
        if delta(op, Const(a), Const(b)) == c:
            cands.append((op, Const(a), Const(b)))
    return cands


def _eplus_positions(t, limit=16):
    """Non-empty hole paths valid in the generalized evaluation-context
    grammar, paired with the subterm they point at."""
    out = []

    def go(node, path):
        if len(out) >= limit:
            return
        if path:
            out.append((path, node))
        if isinstance(node, App):
            go(node.fn, path + (0,))
            if _val_or_var(node.fn):
                go(node.arg, path + (1,))
        elif isinstance(node, BinOp):
            go(node.left, path + (0,))
            if _val_or_var(node.left):
                go(node.right, path + (1,))
        elif isinstance(node, (If, Seq)):
            go(children(node)[0], path + (0,))

    go(t, ())
    return out


def applicable_rules(e, safety=None, budget=400, pool=None, rules=None):
    """Enumerate rewrite steps applicable to e.

    Pattern-matched instances (every forward rule plus the parameter-free
    backward rules) come first and are concrete.  Instances that need
    injected terms follow: instantiated from `pool` when one is given,
    otherwise reported once per site as templates (params contain
    {"template": ...}) that cannot be applied as-is.
    """
    provider = safety or SyntacticSafety()
    concrete = []
    injected = []

    def want(rule, direction):
        if rules is None:
            return True
        return rule in rules or (rule, direction) in rules

    def add(rule, direction, path, params=None, to=None):
        dest = concrete if to is None else to
        if want(rule, direction):
            dest.append(RewriteStep(rule, direction, path, params or {}))

    def add_injected(rule, direction, path, key, candidates, base=None,
                     needs_safe=False):
        if not want(rule, direction):
            return
        if pool is None:
            params = dict(base or {})
            params["template"] = key
            add(rule, direction, path, params, to=injected)
            return
        for cand in candidates:
            if needs_safe and not provider.is_safe(cand):
                continue
            params = dict(base or {})
            params[key] = cand
            if needs_safe:
                params["safety"] = provider.name
            add(rule, direction, path, params, to=injected)

    the_pool = list(pool) if pool is not None else []

    for path, t in all_paths(e):
        if len(concrete) >= budget:
            break
        if isinstance(t, Seq):
            if isinstance(t.first, Unreachable):
                add("P2", "fwd", path)
            if isinstance(t.second, Unreachable):
                if provider.is_safe(t.first):
                    add("P1", "fwd", path, {"safety": provider.name})
                add("P3", "bwd", path, {"shape": "app"})
                for op in OPS:
                    add("P3", "bwd", path, {"shape": "binop", "op": op})
            if provider.is_safe(t.first):
                add("M4", "fwd", path, {"safety": provider.name})
            for q, _sub in _eplus_positions(t.second):
                add("M6", "bwd", path, {"hole": q})
        if isinstance(t, App):
            if isinstance(t.arg, Unreachable):
                add("P3", "fwd", path)
            if isinstance(t.fn, Unreachable):
                add("P4", "fwd", path)
            if isinstance(t.fn, Lam) and provider.is_safe(t.arg):
                add("M3", "bwd", path, {"safety": provider.name})
        if isinstance(t, BinOp):
            if isinstance(t.right, Unreachable):
                add("P3", "fwd", path)
            if isinstance(t.left, Unreachable):
                add("P5", "fwd", path)
            if isinstance(t.left, Const) and isinstance(t.right, Const) \
                    and delta(t.op, t.left, t.right) is not None:
                add("M5", "bwd", path)
        if isinstance(t, If):
            if isinstance(t.test, Unreachable):
                add("P5", "fwd", path)
            if isinstance(t.orelse, Unreachable):
                add("U1", "fwd", path)
            if isinstance(t.then, Unreachable):
                add("U2", "fwd", path)
            if _is_val(t.test) and t.test != FALSE:
                add("M1", "bwd", path)
            if t.test == FALSE:
                add("M2", "bwd", path)
            if isinstance(t.test, Var):
                add("M8", "fwd", path)
                if t.test.name not in free_vars(t.orelse):
                    add("M8", "bwd", path, {"term": t.orelse})
            if isinstance(t.test, If) and _is_val(t.test.then) \
                    and t.test.then != FALSE and t.test.orelse == FALSE:
                add("M9", "fwd", path)
            if _match_eq_chain(t) is not None:
                add("M10", "fwd", path)
                add("M10", "bwd", path)
            if want("M7", "bwd"):
                for q, _sub in _eplus_positions(t.then):
                    try:
                        if replace_at(t.then, q, HOLE) == replace_at(t.orelse, q, HOLE):
                            add("M7", "bwd", path, {"hole": q})
                    except PathError:
                        pass
        if isinstance(t, Const):
            for op, c1, c2 in _m5_preimages(t):
                add("M5", "fwd", path, {"op": op, "const": c1, "const2": c2})
        for q, sub in _eplus_positions(t):
            if isinstance(sub, Seq):
                add("M6", "fwd", path, {"hole": q})
            if isinstance(sub, If):
                add("M7", "fwd", path, {"hole": q})

        # introduction instances needing injected terms
        if isinstance(t, Unreachable):
            add_injected("P1", "bwd", path, "term", the_pool, needs_safe=True)
            add_injected("P2", "bwd", path, "term", the_pool)
            add_injected("P4", "bwd", path, "term", the_pool)
            ops = OPS if pool is not None else OPS[:1]
            for op in ops:
                add_injected("P5", "bwd", path, "term", the_pool,
                             base={"shape": "binop", "op": op})
            if pool is None:
                add("P5", "bwd", path, {"template": "term", "shape": "if"},
                    to=injected)
            else:
                for a in the_pool[:4]:
                    for b in the_pool[:2]:
                        add("P5", "bwd", path,
                            {"shape": "if", "term": a, "term2": b}, to=injected)
        if isinstance(t, If):
            add_injected("M9", "bwd", path, "value",
                         [v for v in the_pool if _is_val(v) and v != FALSE])
        guards = [v for v in the_pool if _is_val(v) and v != FALSE][:3]
        if pool is None:
            add("M1", "fwd", path, {"template": "value term"}, to=injected)
        else:
            for v in guards:
                for ef in the_pool[:4]:
                    add("M1", "fwd", path, {"value": v, "term": ef}, to=injected)
        add_injected("M2", "fwd", path, "term", the_pool)
        add_injected("M4", "bwd", path, "term", the_pool, needs_safe=True)
        if want("M3", "fwd"):
            if pool is None:
                add("M3", "fwd", path, {"template": "var body term"}, to=injected)
            else:
                _m3_forward_instances(t, path, the_pool, provider,
                                      lambda *a, **kw: add(*a, to=injected, **kw))

    return (concrete + injected)[:budget]


def _m3_forward_instances(t, path, pool, provider, add):
    seen = set()
    for cand in pool:
        if not provider.is_safe(cand):
            continue
        key = print_term(cand)
        if key in seen:
            continue
        seen.add(key)
        x = fresh_name("x", free_vars(t) | free_vars(cand))
        occurrences = [p for p, s in all_paths(t) if s == cand]
        if occurrences:
            body = t
            for p in occurrences:
                body = replace_at(body, p, Var(x))
            add("M3", "fwd", path,
                {"var": x, "body": body, "term": cand, "safety": provider.name})
        add("M3", "fwd", path,
            {"var": x, "body": t, "term": cand, "safety": provider.name})


# ---------------------------------------------------------------------------
# Greedy normalizer: run the unreachable-elimination rules to a fixpoint,
# innermost first, recording a replayable trace.

def normalize_unreachable(e, safety=None):
    provider = safety or SyntacticSafety()
    trace = []

    def node_rule(t):
        if isinstance(t, Seq) and isinstance(t.first, Unreachable):
            return "P2", {}, UNREACHABLE
        if isinstance(t, App) and isinstance(t.fn, Unreachable):
            return "P4", {}, UNREACHABLE
        if isinstance(t, BinOp) and isinstance(t.left, Unreachable):
            return "P5", {}, UNREACHABLE
        if isinstance(t, If) and isinstance(t.test, Unreachable):
            return "P5", {}, UNREACHABLE
        if isinstance(t, Seq) and isinstance(t.second, Unreachable) \
                and provider.is_safe(t.first):
            return "P1", {"safety": provider.name}, UNREACHABLE
        if isinstance(t, App) and isinstance(t.arg, Unreachable):
            return "P3", {}, Seq(t.fn, UNREACHABLE)
        if isinstance(t, BinOp) and isinstance(t.right, Unreachable):
            return "P3", {}, Seq(t.left, UNREACHABLE)
        if isinstance(t, If) and isinstance(t.orelse, Unreachable):
            return "U1", {}, Seq(t.test, t.then)
        if isinstance(t, If) and isinstance(t.then, Unreachable):
            return "U2", {}, Seq(t.test, t.orelse)
        if isinstance(t, Seq) and provider.is_safe(t.first):
            return "M4", {"safety": provider.name}, t.second
        return None

    def norm(t, path):
        kids = children(t)
        if kids:
            t = with_children(t, tuple(norm(k, path + (i,)) for i, k in enumerate(kids)))
        while True:
            m = node_rule(t)
            if m is None:
                return t
            rule, params, result = m
            trace.append(RewriteStep(rule, "fwd", path, params))
            t = result

    while True:
        before = len(trace)
        e = norm(e, ())
        if len(trace) == before:
            return e, trace


# ---------------------------------------------------------------------------
# Bounded equivalence search: find a replayable trace from e to target.

def _labels(t):
    out = {}
    for _, s in all_paths(t):
        if isinstance(s, Var):
            k = "var"
        elif isinstance(s, Const):
            k = f"c:{s.value!r}"
        elif isinstance(s, BinOp):
            k = f"op:{s.op}"
        elif isinstance(s, Err):
            k = f"err:{s.label}"
        else:
            k = type(s).__name__
        out[k] = out.get(k, 0) + 1
    return out


def _distance(a_labels, a_size, b_labels, b_size):
    diff = 0
    for k in set(a_labels) | set(b_labels):
        diff += abs(a_labels.get(k, 0) - b_labels.get(k, 0))
    return abs(a_size - b_size) + diff


def _search_pool(e, target, extra=()):
    pool = []
    seen = set()
    for t in itertools.chain(
            (s for _, s in all_paths(e)), (s for _, s in all_paths(target)), extra,
            default_injection_pool()):
        if size(t) > 5 or isinstance(t, Hole):
            continue
        k = print_term(t)
        if k not in seen:
            seen.add(k)
            pool.append(t)
    return pool


def search_equiv(e, target, depth=8, width=32, safety=None, pool=None,
                 rules=None, per_state=96):
    """Beam search for a compile-time trace rewriting e into target (up to
    renaming of bound variables).  Returns a verified trace, or None.

    Injection parameters are drawn from small subterms of both endpoints
    plus a handful of constants; the relation itself is infinitely
    branching, so absence of a witness within the bounds proves nothing.
    """
    provider = safety or SyntacticSafety()
    if alpha_eq(e, target):
        return []
    if pool is None:
        pool = _search_pool(e, target)
    t_labels, t_size = _labels(target), size(target)

    def key(t):
        return print_term(canonical(t))

    def score(t):
        return _distance(_labels(t), size(t), t_labels, t_size)

    counter = itertools.count()
    frontier = [(score(e), next(counter), e, [])]
    visited = {key(e)}
    for _level in range(depth):
        nxt = []
        for _sc, _tb, t, tr in frontier:
            for st in applicable_rules(t, provider, budget=per_state,
                                       pool=pool, rules=rules):
                if st.param("template") is not None:
                    continue
                try:
                    t2 = apply_rule(t, st, provider)
                except RewriteError:
                    continue
                k = key(t2)
                if k in visited:
                    continue
                visited.add(k)
                tr2 = tr + [st]
                if alpha_eq(t2, target):
                    assert alpha_eq(apply_trace(e, tr2, provider), target)
                    return tr2
                nxt.append((score(t2), next(counter), t2, tr2))
        nxt.sort(key=lambda s: (s[0], s[1]))
        frontier = nxt[:width]
        if not frontier:
            break
    return None
