"""Core term language: syntax, binding, substitution, parsing and printing.

The expression language is a call-by-value lambda calculus extended with
integer/boolean constants, binary operators, conditionals, sequencing,
labeled errors, and an ``unreachable`` form whose evaluation counts as
undefined behavior.  Terms are immutable trees; every operation here is
pure.
"""

from dataclasses import dataclass
import re

OPS = ("+", "-", "*", "<", "<=", "=", "!=")
ARITH_OPS = ("+", "-", "*")
CMP_OPS = ("<", "<=")
EQ_OPS = ("=", "!=")

RESERVED = {"lambda", "if", "seq", "err", "unreachable", "true", "false", "hole"}


class Term:
    """Base class for expressions. Concrete nodes are frozen dataclasses."""

    __slots__ = ()

    def __str__(self):
        return print_term(self)


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True, eq=False)
class Const(Term):
    value: object  # python int (arbitrary precision) or bool

    # bool is a subclass of int in Python; Const(True) must not equal Const(1).
    def __eq__(self, other):
        return (
            isinstance(other, Const)
            and type(other.value) is type(self.value)
            and other.value == self.value
        )

    def __hash__(self):
        return hash((type(self.value).__name__, self.value))


@dataclass(frozen=True)
class Lam(Term):
    param: str
    body: Term


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class BinOp(Term):
    op: str
    left: Term
    right: Term


@dataclass(frozen=True)
class If(Term):
    test: Term
    then: Term
    orelse: Term


@dataclass(frozen=True)
class Seq(Term):
    first: Term
    second: Term


@dataclass(frozen=True)
class Err(Term):
    label: str


@dataclass(frozen=True)
class Unreachable(Term):
    pass


@dataclass(frozen=True)
class Hole(Term):
    """Context hole. Only used by contexts; never a runnable term."""


UNREACHABLE = Unreachable()
HOLE = Hole()
TRUE = Const(True)
FALSE = Const(False)


def is_value(e):
    return isinstance(e, (Const, Lam))


def is_answer(e):
    return is_value(e) or isinstance(e, (Err, Unreachable))


# ---------------------------------------------------------------------------
# Tree navigation.  A path is a tuple of child indices from the root.

def children(e):
    if isinstance(e, Lam):
        return (e.body,)
    if isinstance(e, App):
        return (e.fn, e.arg)
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, If):
        return (e.test, e.then, e.orelse)
    if isinstance(e, Seq):
        return (e.first, e.second)
    return ()


def with_children(e, kids):
    if isinstance(e, Lam):
        return Lam(e.param, kids[0])
    if isinstance(e, App):
        return App(kids[0], kids[1])
    if isinstance(e, BinOp):
        return BinOp(e.op, kids[0], kids[1])
    if isinstance(e, If):
        return If(kids[0], kids[1], kids[2])
    if isinstance(e, Seq):
        return Seq(kids[0], kids[1])
    return e


class PathError(Exception):
    pass


def subterm_at(e, path):
    for i in path:
        kids = children(e)
        if i < 0 or i >= len(kids):
            raise PathError(f"path step {i} invalid at {type(e).__name__}")
        e = kids[i]
    return e


def replace_at(e, path, new):
    if not path:
        return new
    kids = list(children(e))
    i = path[0]
    if i < 0 or i >= len(kids):
        raise PathError(f"path step {i} invalid at {type(e).__name__}")
    kids[i] = replace_at(kids[i], path[1:], new)
    return with_children(e, kids)


def all_paths(e):
    """Yield (path, subterm) pairs in preorder."""
    stack = [((), e)]
    while stack:
        path, t = stack.pop()
        yield path, t
        kids = children(t)
        for i in range(len(kids) - 1, -1, -1):
            stack.append((path + (i,), kids[i]))


def size(e):
    return 1 + sum(size(k) for k in children(e))


def format_path(path):
    if not path:
        return "."
    return ".".join(str(i) for i in path)


def parse_path(text):
    if text == ".":
        return ()
    try:
        return tuple(int(p) for p in text.split("."))
    except ValueError:
        raise PathError(f"bad path {text!r}")


# ---------------------------------------------------------------------------
# Binding structure.

def free_vars(e):
    """Free variables of e, as a frozenset (cached on the node; terms are
    immutable so the cache is sound)."""
    cached = e.__dict__.get("_fv") if hasattr(e, "__dict__") else None
    if cached is not None:
        return cached
    if isinstance(e, Var):
        out = frozenset((e.name,))
    elif isinstance(e, Lam):
        out = free_vars(e.body) - {e.param}
    else:
        out = frozenset()
        for k in children(e):
            out |= free_vars(k)
    object.__setattr__(e, "_fv", out)
    return out


def is_well_formed(delta, e):
    """True iff every free variable of e is in the set delta."""
    return free_vars(e) <= set(delta)


def bound_names(e):
    out = set()
    for _, t in all_paths(e):
        if isinstance(t, Lam):
            out.add(t.param)
    return out


def fresh_name(base, avoid):
    if base not in avoid:
        return base
    i = 1
    while f"{base}_{i}" in avoid:
        i += 1
    return f"{base}_{i}"


def substitute(e, name, repl):
    """Capture-avoiding substitution e[name := repl]."""
    fv_repl = free_vars(repl)

    def go(t):
        if isinstance(t, Var):
            return repl if t.name == name else t
        if isinstance(t, Lam):
            if t.param == name:
                return t
            if name not in free_vars(t.body):
                return t
            if t.param in fv_repl:
                p2 = fresh_name(t.param, fv_repl | free_vars(t.body) | {name})
                body = substitute(t.body, t.param, Var(p2))
                return Lam(p2, go(body))
            return Lam(t.param, go(t.body))
        kids = children(t)
        if not kids:
            return t
        return with_children(t, tuple(go(k) for k in kids))

    return go(e)


def alpha_eq(a, b):
    """Equality up to consistent renaming of bound variables."""

    def go(x, y, mx, my, depth):
        if type(x) is not type(y):
            return False
        if isinstance(x, Var):
            return mx.get(x.name, ("f", x.name)) == my.get(y.name, ("f", y.name))
        if isinstance(x, Const):
            return x == y
        if isinstance(x, Err):
            return x.label == y.label
        if isinstance(x, BinOp) and x.op != y.op:
            return False
        if isinstance(x, Lam):
            mx2 = dict(mx)
            my2 = dict(my)
            mx2[x.param] = ("b", depth)
            my2[y.param] = ("b", depth)
            return go(x.body, y.body, mx2, my2, depth + 1)
        kx, ky = children(x), children(y)
        if len(kx) != len(ky):
            return False
        return all(go(a2, b2, mx, my, depth) for a2, b2 in zip(kx, ky))

    return go(a, b, {}, {}, 0)


def canonical(e):
    """Rename bound variables to a canonical scheme; alpha-equivalent terms
    become identical."""
    free = free_vars(e)
    counter = [0]

    def next_name():
        while True:
            n = f"_v{counter[0]}"
            counter[0] += 1
            if n not in free:
                return n

    def go(t, env):
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, Lam):
            n = next_name()
            env2 = dict(env)
            env2[t.param] = n
            return Lam(n, go(t.body, env2))
        kids = children(t)
        if not kids:
            return t
        return with_children(t, tuple(go(k, env) for k in kids))

    return go(e, {})


# ---------------------------------------------------------------------------
# Context helpers.  A context is a Term containing exactly one Hole.

def hole_path(ctx):
    paths = [p for p, t in all_paths(ctx) if isinstance(t, Hole)]
    if len(paths) != 1:
        raise ValueError(f"context must contain exactly one hole, found {len(paths)}")
    return paths[0]


def plug(ctx, e):
    """Literal hole filling; deliberately capture-permitting."""
    return replace_at(ctx, hole_path(ctx), e)


def binders_above_hole(ctx):
    out = set()
    t = ctx
    for i in hole_path(ctx):
        if isinstance(t, Lam):
            out.add(t.param)
        t = children(t)[i]
    return out


def context_closes(ctx, delta):
    """True iff plugging any e with free_vars(e) <= delta yields a closed term."""
    if free_vars(ctx):
        return False
    return set(delta) <= binders_above_hole(ctx)


# ---------------------------------------------------------------------------
# Surface syntax: s-expressions.
#
#   e ::= INT | true | false | SYMBOL
#       | (lambda (x y ...) e)        multi-parameter lambdas curry
#       | (OP e e)                    OP in + - * < <= = !=
#       | (if e e e)
#       | (seq e e ...)               n-ary seq nests to the right
#       | (err SYMBOL)
#       | (unreachable)
#       | (e e ...)                   application, curried to the left
#
# Comments run from ';' to end of line.

class ParseError(Exception):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_INT_RE = re.compile(r"-?[0-9]+\Z")


def _tokenize(text):
    toks = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            col += 1
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            toks.append((c, line, col))
            col += 1
            i += 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();":
                j += 1
            toks.append((text[i:j], line, col))
            col += j - i
            i = j
    return toks


def _atom(tok, line, col):
    if _INT_RE.match(tok):
        return Const(int(tok))
    if tok == "true":
        return TRUE
    if tok == "false":
        return FALSE
    if tok in RESERVED or tok in "()":
        raise ParseError(f"unexpected {tok!r}", line, col)
    return Var(tok)


class _Reader:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        if self.pos >= len(self.toks):
            return None
        return self.toks[self.pos]

    def next(self):
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else ("", 1, 1)
            raise ParseError("unexpected end of input", last[1], last[2])
        self.pos += 1
        return t

    def expect(self, what):
        tok, line, col = self.next()
        if tok != what:
            raise ParseError(f"expected {what!r}, got {tok!r}", line, col)

    def symbol(self):
        tok, line, col = self.next()
        if tok in "()" or _INT_RE.match(tok):
            raise ParseError(f"expected symbol, got {tok!r}", line, col)
        return tok, line, col

    def read(self):
        tok, line, col = self.next()
        if tok == ")":
            raise ParseError("unexpected ')'", line, col)
        if tok != "(":
            return _atom(tok, line, col)
        head = self.peek()
        if head is None:
            raise ParseError("unclosed '('", line, col)
        htok, hline, hcol = head
        if htok == "lambda":
            self.next()
            self.expect("(")
            params = []
            while True:
                t2 = self.peek()
                if t2 is None:
                    raise ParseError("unclosed parameter list", hline, hcol)
                if t2[0] == ")":
                    self.next()
                    break
                name, l2, c2 = self.symbol()
                if name in RESERVED or name in OPS:
                    raise ParseError(f"bad parameter name {name!r}", l2, c2)
                params.append(name)
            if not params:
                raise ParseError("lambda needs at least one parameter", hline, hcol)
            body = self.read()
            self.expect(")")
            for p in reversed(params):
                body = Lam(p, body)
            return body
        if htok == "if":
            self.next()
            t1, t2, t3 = self.read(), self.read(), self.read()
            self.expect(")")
            return If(t1, t2, t3)
        if htok == "seq":
            self.next()
            parts = [self.read(), self.read()]
            while self.peek() is not None and self.peek()[0] != ")":
                parts.append(self.read())
            self.expect(")")
            out = parts[-1]
            for p in reversed(parts[:-1]):
                out = Seq(p, out)
            return out
        if htok == "err":
            self.next()
            label, _, _ = self.symbol()
            self.expect(")")
            return Err(label)
        if htok == "unreachable":
            self.next()
            self.expect(")")
            return UNREACHABLE
        if htok == "hole":
            self.next()
            self.expect(")")
            return HOLE
        if htok in OPS:
            self.next()
            l, r = self.read(), self.read()
            self.expect(")")
            return BinOp(htok, l, r)
        # application
        fn = self.read()
        args = [self.read()]
        while self.peek() is not None and self.peek()[0] != ")":
            args.append(self.read())
        self.expect(")")
        for a in args:
            fn = App(fn, a)
        return fn


def parse_term(text):
    toks = _tokenize(text)
    if not toks:
        raise ParseError("empty input", 1, 1)
    rd = _Reader(toks)
    e = rd.read()
    extra = rd.peek()
    if extra is not None:
        raise ParseError(f"trailing input {extra[0]!r}", extra[1], extra[2])
    return e


def print_term(e):
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        if type(e.value) is bool:
            return "true" if e.value else "false"
        return str(e.value)
    if isinstance(e, Lam):
        return f"(lambda ({e.param}) {print_term(e.body)})"
    if isinstance(e, App):
        return f"({print_term(e.fn)} {print_term(e.arg)})"
    if isinstance(e, BinOp):
        return f"({e.op} {print_term(e.left)} {print_term(e.right)})"
    if isinstance(e, If):
        return f"(if {print_term(e.test)} {print_term(e.then)} {print_term(e.orelse)})"
    if isinstance(e, Seq):
        return f"(seq {print_term(e.first)} {print_term(e.second)})"
    if isinstance(e, Err):
        return f"(err {e.label})"
    if isinstance(e, Unreachable):
        return "(unreachable)"
    if isinstance(e, Hole):
        return "(hole)"
    raise TypeError(f"not a term: {e!r}")


# ---------------------------------------------------------------------------
# Machine-integer addition, desugared to guarded mathematical addition.

def desugar_plus_int(x, y, max_int, min_int):
    """Bounded signed addition as a double overflow guard: out-of-range sums
    are declared unreachable, in-range sums fall through to exact addition."""
    total = BinOp("+", x, y)
    return If(
        BinOp("<", Const(max_int), total),
        UNREACHABLE,
        If(BinOp("<", total, Const(min_int)), UNREACHABLE, total),
    )
