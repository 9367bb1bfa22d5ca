"""Extended Vminus: a minimal SSA control-flow-graph language.

A function is an ordered list of labeled basic blocks; the first block is
the entry.  Blocks hold phi nodes, then binary-operation / error-call
commands, then exactly one terminator (ret, unconditional branch,
conditional branch, or unreachable).  Operand values are SSA variables
(spelled %name) or integer literals; comparison results are booleans that
feed conditional branches.

Also here: CFG utilities, immediate-dominator computation, a fuel-bounded
interpreter, and the unreachable-driven CFG simplification pass (erase
trailing commands before an unreachable terminator, prune incoming edges,
delete the dead block).
"""

from dataclasses import dataclass, replace

from .reduction import delta_raw

OPS = ("+", "-", "*", "<", "<=", "=", "!=")

KEYWORDS = {"fun", "phi", "call", "error", "ret", "br", "unreachable"}


@dataclass(frozen=True)
class Phi:
    target: str
    incomings: tuple  # ((value, pred_label), ...)


@dataclass(frozen=True)
class Assign:
    dest: str
    op: str
    left: object  # var name or int
    right: object


@dataclass(frozen=True)
class CallError:
    pass


@dataclass(frozen=True)
class Ret:
    value: object


@dataclass(frozen=True)
class Br:
    target: str


@dataclass(frozen=True)
class BrCond:
    cond: object
    then_target: str
    else_target: str


@dataclass(frozen=True)
class UnreachableT:
    pass


@dataclass(frozen=True)
class Block:
    label: str
    phis: tuple
    commands: tuple
    terminator: object


@dataclass(frozen=True)
class VFunction:
    name: str
    params: tuple
    blocks: tuple

    def block(self, label):
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(f"no block {label!r}")

    def has_block(self, label):
        return any(b.label == label for b in self.blocks)

    def entry(self):
        return self.blocks[0]

    def labels(self):
        return [b.label for b in self.blocks]

    def replace_block(self, label, new_block):
        return replace(self, blocks=tuple(
            new_block if b.label == label else b for b in self.blocks))

    def drop_block(self, label):
        return replace(self, blocks=tuple(
            b for b in self.blocks if b.label != label))

    def __str__(self):
        return print_vminus(self)


class VminusError(Exception):
    pass


def is_var(v):
    return isinstance(v, str)


def _term_targets(t):
    if isinstance(t, Br):
        return (t.target,)
    if isinstance(t, BrCond):
        return (t.then_target, t.else_target)
    return ()


def successors(f, label):
    return set(_term_targets(f.block(label).terminator))


def predecessors(f, label):
    f.block(label)
    return {b.label for b in f.blocks if label in _term_targets(b.terminator)}


def reachable_blocks(f):
    seen = set()
    stack = [f.blocks[0].label]
    while stack:
        l = stack.pop()
        if l in seen:
            continue
        seen.add(l)
        for s in _term_targets(f.block(l).terminator):
            if f.has_block(s):
                stack.append(s)
    return seen


# ---------------------------------------------------------------------------
# Dominators: iterative RPO dataflow on the reachable subgraph.

def idom_map(entry, succ):
    """Immediate dominators for every reachable node except the entry."""
    order = []
    seen = set()

    def dfs(u):
        seen.add(u)
        for v in succ.get(u, ()):
            if v not in seen and v in succ:
                dfs(v)
        order.append(u)

    dfs(entry)
    rpo = list(reversed(order))
    index = {l: i for i, l in enumerate(rpo)}
    preds = {l: [] for l in rpo}
    for u in rpo:
        for v in succ.get(u, ()):
            if v in index:
                preds[v].append(u)

    idom = {entry: entry}

    def intersect(a, b):
        while a != b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for b in rpo[1:]:
            cands = [p for p in preds[b] if p in idom]
            new = cands[0]
            for p in cands[1:]:
                new = intersect(new, p)
            if idom.get(b) != new:
                idom[b] = new
                changed = True
    return {l: d for l, d in idom.items() if l != entry}


@dataclass(frozen=True)
class DomTree:
    entry: str
    idom: dict    # label -> immediate dominator; entry absent
    children: dict
    reachable: frozenset

    def dominates(self, a, b):
        """a dominates b (reflexively) among reachable blocks."""
        cur = b
        while True:
            if cur == a:
                return True
            cur = self.idom.get(cur)
            if cur is None:
                return False

    def strictly_dominates(self, a, b):
        return a != b and self.dominates(a, b)


def compute_dominators(f):
    entry = f.blocks[0].label
    succ = {b.label: _term_targets(b.terminator) for b in f.blocks}
    idom = idom_map(entry, succ)
    children = {l: [] for l in succ}
    for l, d in idom.items():
        children[d].append(l)
    order = {l: i for i, l in enumerate(f.labels())}
    children = {l: tuple(sorted(c, key=order.get)) for l, c in children.items()}
    reachable = frozenset(idom) | {entry}
    return DomTree(entry, idom, children, reachable)


# ---------------------------------------------------------------------------
# Validation.

def validate(f):
    """All structural errors in f, as strings; empty list means valid."""
    errors = []
    if not f.blocks:
        return ["function has no blocks"]
    labels = f.labels()
    seen = set()
    for l in labels:
        if l in seen:
            errors.append(f"duplicate label {l!r}")
        seen.add(l)
    if errors:
        return errors

    entry = labels[0]
    for b in f.blocks:
        for t in _term_targets(b.terminator):
            if t not in seen:
                errors.append(f"{b.label}: branch to unknown label {t!r}")
            elif t == entry:
                errors.append(f"{b.label}: branch targets the entry block")
        for p in b.phis:
            for _, lbl in p.incomings:
                if lbl not in seen:
                    errors.append(f"{b.label}: phi {p.target} names unknown "
                                  f"predecessor {lbl!r}")
    if errors:
        return errors

    # single assignment across params, phis, commands
    defs = {}
    for p in f.params:
        defs[p] = ("param", None, 0)
    for b in f.blocks:
        for p in b.phis:
            if p.target in defs:
                errors.append(f"{b.label}: variable {p.target} assigned more than once")
            defs[p.target] = ("phi", b.label, 0)
        for i, c in enumerate(b.commands):
            if isinstance(c, Assign):
                if c.dest in defs:
                    errors.append(f"{b.label}: variable {c.dest} assigned more than once")
                defs[c.dest] = ("cmd", b.label, i)

    # phi incomings agree with predecessors
    for b in f.blocks:
        preds = predecessors(f, b.label)
        for p in b.phis:
            incs = [lbl for _, lbl in p.incomings]
            if len(set(incs)) != len(incs):
                errors.append(f"{b.label}: phi {p.target} lists a predecessor twice")
            if set(incs) != preds:
                errors.append(
                    f"{b.label}: phi {p.target} incomings {sorted(incs)} do not "
                    f"match predecessors {sorted(preds)}")
        if b.label == entry and b.phis:
            errors.append("entry block must not have phi nodes")

    dom = compute_dominators(f)

    def use_ok(var, blk, pos):
        """pos: commands are 0..n-1, terminator is n."""
        d = defs.get(var)
        if d is None:
            return f"use of undefined variable {var}"
        kind, dblk, didx = d
        if kind == "param":
            return None
        if dblk == blk.label:
            if kind == "phi" or didx < pos:
                return None
            return f"variable {var} used before its definition"
        if blk.label not in dom.reachable:
            return None  # scoping is vacuous off the reachable subgraph
        if dom.strictly_dominates(dblk, blk.label):
            return None
        return f"definition of {var} (in {dblk}) does not dominate its use"

    for b in f.blocks:
        for p in b.phis:
            for v, pred in p.incomings:
                if is_var(v):
                    d = defs.get(v)
                    if d is None:
                        errors.append(f"{b.label}: use of undefined variable {v}")
                    elif d[0] != "param" and pred in dom.reachable \
                            and not dom.dominates(d[1], pred):
                        errors.append(
                            f"{b.label}: phi operand {v} not defined on the "
                            f"edge from {pred}")
        for i, c in enumerate(b.commands):
            if isinstance(c, Assign):
                for v in (c.left, c.right):
                    if is_var(v):
                        msg = use_ok(v, b, i)
                        if msg:
                            errors.append(f"{b.label}.{i}: {msg}")
        npos = len(b.commands)
        t = b.terminator
        vals = ()
        if isinstance(t, Ret):
            vals = (t.value,)
        elif isinstance(t, BrCond):
            vals = (t.cond,)
        for v in vals:
            if is_var(v):
                msg = use_ok(v, b, npos)
                if msg:
                    errors.append(f"{b.label}: {msg}")
    return errors


# ---------------------------------------------------------------------------
# Interpreter.

@dataclass(frozen=True)
class Returned:
    value: object

    def __str__(self):
        v = self.value
        if type(v) is bool:
            return f"ret {'true' if v else 'false'}"
        return f"ret {v}"


@dataclass(frozen=True)
class Errored:
    def __str__(self):
        return "error"


@dataclass(frozen=True)
class HitUnreachable:
    def __str__(self):
        return "undef"


@dataclass(frozen=True)
class OutOfFuel:
    def __str__(self):
        return "timeout"


def _vm_truthy(v):
    if type(v) is bool:
        return v
    return v != 0


def eval_vminus(f, args, fuel=100_000):
    """Execute f on integer arguments.  Fuel counts executed instructions
    (phis, commands, terminators)."""
    if len(args) != len(f.params):
        raise VminusError(
            f"arity mismatch: {len(f.params)} parameters, {len(args)} arguments")
    env = dict(zip(f.params, args))

    def val(v):
        return env[v] if is_var(v) else v

    cur = f.blocks[0].label
    prev = None
    while fuel > 0:
        b = f.block(cur)
        if b.phis:
            updates = {}
            for p in b.phis:
                fuel -= 1
                chosen = None
                for v, lbl in p.incomings:
                    if lbl == prev:
                        chosen = val(v)
                        break
                if chosen is None:
                    raise VminusError(
                        f"{cur}: phi {p.target} has no incoming for {prev!r}")
                updates[p.target] = chosen
            env.update(updates)
            if fuel <= 0:
                break
        stopped = False
        for c in b.commands:
            fuel -= 1
            if isinstance(c, CallError):
                return Errored()
            r = delta_raw(c.op, val(c.left), val(c.right))
            if r is None:
                return Errored()
            env[c.dest] = r
            if fuel <= 0:
                stopped = True
                break
        if stopped:
            break
        t = b.terminator
        fuel -= 1
        if isinstance(t, Ret):
            return Returned(val(t.value))
        if isinstance(t, UnreachableT):
            return HitUnreachable()
        if isinstance(t, Br):
            prev, cur = cur, t.target
        else:
            taken = _vm_truthy(val(t.cond))
            prev, cur = cur, (t.then_target if taken else t.else_target)
    return OutOfFuel()


# ---------------------------------------------------------------------------
# The simplification pass.

def simplify_unreachable(f, label):
    """One round of unreachable-block simplification at `label`.

    Pops trailing commands (never past a call error()); if none remain,
    retargets every predecessor away from the block and deletes it (the
    entry block is emptied instead of deleted).  Returns (new function,
    changed flag); `changed` reports structural change so the caller's
    fixpoint loop terminates.
    """
    b = f.block(label)
    if not isinstance(b.terminator, UnreachableT):
        raise VminusError(f"{label} does not end in unreachable")
    cmds = list(b.commands)
    changed = False
    while cmds and not isinstance(cmds[-1], CallError):
        cmds.pop()
        changed = True
    if cmds:
        if changed:
            f = f.replace_block(label, replace(b, commands=tuple(cmds)))
        return f, changed

    preds = sorted(predecessors(f, label),
                   key=lambda l: [x.label for x in f.blocks].index(l))
    for pl in preds:
        pb = f.block(pl)
        t = pb.terminator
        if isinstance(t, BrCond):
            other = t.else_target if t.then_target == label else t.then_target
            if other == label:
                new_t = UnreachableT()  # both arms led here; nothing is left
            else:
                new_t = Br(other)
            f = f.replace_block(pl, replace(pb, terminator=new_t))
            changed = True
        elif isinstance(t, Br) and t.target == label:
            f = f.replace_block(pl, replace(pb, terminator=UnreachableT()))
            changed = True

    if label != f.blocks[0].label:
        f = f.drop_block(label)
        changed = True
    else:
        if b.phis or b.commands:
            f = f.replace_block(label, Block(label, (), (), UnreachableT()))
            changed = True
    return f, changed


def simplify_function_cfg(f):
    """Run simplify_unreachable over unreachable-terminated blocks until a
    fixed point; returns the simplified function and the list of block
    labels whose simplification changed the function, in application order."""
    trace = []
    changed_any = True
    while changed_any:
        changed_any = False
        for label in f.labels():
            if not f.has_block(label):
                continue
            if isinstance(f.block(label).terminator, UnreachableT):
                f, ch = simplify_unreachable(f, label)
                if ch:
                    trace.append(label)
                    changed_any = True
    return f, trace


# ---------------------------------------------------------------------------
# Text format.

class VminusParseError(Exception):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_PUNCT = ("(", ")", "{", "}", "[", "]", ",", ":")
_TWO_CHAR = ("<=", "!=")
_ONE_CHAR = ("=", "<", "+", "-", "*")


def _vm_tokenize(text):
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
            continue
        if c in " \t\r":
            col += 1
            i += 1
            continue
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        two = text[i:i + 2]
        if two in _TWO_CHAR:
            toks.append((two, line, col))
            i += 2
            col += 2
            continue
        if c in _PUNCT or c in _ONE_CHAR:
            toks.append((c, line, col))
            i += 1
            col += 1
            continue
        j = i
        while j < n and (text[j].isalnum() or text[j] in "%_."):
            j += 1
        if j == i:
            raise VminusParseError(f"unexpected character {c!r}", line, col)
        toks.append((text[i:j], line, col))
        col += j - i
        i = j
    return toks


class _VmReader:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self):
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else ("", 1, 1)
            raise VminusParseError("unexpected end of input", last[1], last[2])
        self.pos += 1
        return t

    def expect(self, what):
        tok, line, col = self.next()
        if tok != what:
            raise VminusParseError(f"expected {what!r}, got {tok!r}", line, col)

    def name(self, kind):
        tok, line, col = self.next()
        if tok in _PUNCT or tok in _ONE_CHAR or tok in _TWO_CHAR \
                or tok in KEYWORDS or tok[0].isdigit():
            raise VminusParseError(f"expected {kind}, got {tok!r}", line, col)
        return tok, line, col

    def val(self):
        tok, line, col = self.next()
        if tok == "-":
            num, l2, c2 = self.next()
            if not num.isdigit():
                raise VminusParseError(f"expected integer after '-'", l2, c2)
            return -int(num)
        if tok.isdigit():
            return int(tok)
        if tok.startswith("%"):
            return tok
        raise VminusParseError(f"expected value, got {tok!r}", line, col)

    def var(self):
        tok, line, col = self.next()
        if not tok.startswith("%"):
            raise VminusParseError(f"expected %variable, got {tok!r}", line, col)
        return tok

    def label(self):
        tok, line, col = self.name("label")
        if tok.startswith("%"):
            raise VminusParseError(f"expected label, got {tok!r}", line, col)
        return tok


def parse_vminus(text, validate_result=True):
    rd = _VmReader(_vm_tokenize(text))
    rd.expect("fun")
    name, _, _ = rd.name("function name")
    rd.expect("(")
    params = []
    while True:
        nxt = rd.peek()
        if nxt is None:
            raise VminusParseError("unclosed parameter list", 1, 1)
        if nxt[0] == ")":
            rd.next()
            break
        if nxt[0] == ",":
            rd.next()
            continue
        params.append(rd.var())
    rd.expect("{")
    blocks = []
    while True:
        nxt = rd.peek()
        if nxt is None:
            raise VminusParseError("unclosed function body", 1, 1)
        if nxt[0] == "}":
            rd.next()
            break
        blocks.append(_parse_block(rd))
    extra = rd.peek()
    if extra is not None:
        raise VminusParseError(f"trailing input {extra[0]!r}", extra[1], extra[2])
    fn = VFunction(name, tuple(params), tuple(blocks))
    if validate_result:
        errors = validate(fn)
        if errors:
            raise VminusError("invalid function:\n  " + "\n  ".join(errors))
    return fn


def _parse_block(rd):
    label = rd.label()
    rd.expect(":")
    phis = []
    cmds = []
    term = None
    while term is None:
        tok, line, col = rd.next()
        if tok == "ret":
            term = Ret(rd.val())
        elif tok == "unreachable":
            term = UnreachableT()
        elif tok == "br":
            nxt = rd.peek()
            if nxt is None:
                raise VminusParseError("dangling br", line, col)
            if nxt[0].startswith("%") or nxt[0].isdigit() or nxt[0] == "-":
                cond = rd.val()
                term = BrCond(cond, rd.label(), rd.label())
            else:
                term = Br(rd.label())
        elif tok == "call":
            rd.expect("error")
            rd.expect("(")
            rd.expect(")")
            cmds.append(CallError())
        elif tok.startswith("%"):
            rd.expect("=")
            nxt = rd.peek()
            if nxt is not None and nxt[0] == "phi":
                rd.next()
                if cmds:
                    raise VminusParseError(
                        "phi nodes must precede commands", line, col)
                incs = []
                while rd.peek() is not None and rd.peek()[0] == "[":
                    rd.next()
                    v = rd.val()
                    rd.expect(",")
                    l = rd.label()
                    rd.expect("]")
                    incs.append((v, l))
                if not incs:
                    raise VminusParseError("phi needs incomings", line, col)
                phis.append(Phi(tok, tuple(incs)))
            else:
                op, l2, c2 = rd.next()
                if op not in OPS:
                    raise VminusParseError(f"unknown operator {op!r}", l2, c2)
                cmds.append(Assign(tok, op, rd.val(), rd.val()))
        else:
            raise VminusParseError(f"unexpected {tok!r}", line, col)
    return Block(label, tuple(phis), tuple(cmds), term)


def _val_str(v):
    return v if is_var(v) else str(v)


def print_vminus(f):
    lines = [f"fun {f.name}({' '.join(f.params)}) {{"]
    for b in f.blocks:
        lines.append(f"{b.label}:")
        for p in b.phis:
            incs = " ".join(f"[{_val_str(v)}, {l}]" for v, l in p.incomings)
            lines.append(f"  {p.target} = phi {incs}")
        for c in b.commands:
            if isinstance(c, CallError):
                lines.append("  call error()")
            else:
                lines.append(f"  {c.dest} = {c.op} {_val_str(c.left)} {_val_str(c.right)}")
        t = b.terminator
        if isinstance(t, Ret):
            lines.append(f"  ret {_val_str(t.value)}")
        elif isinstance(t, Br):
            lines.append(f"  br {t.target}")
        elif isinstance(t, BrCond):
            lines.append(f"  br {_val_str(t.cond)} {t.then_target} {t.else_target}")
        else:
            lines.append("  unreachable")
    lines.append("}")
    return "\n".join(lines) + "\n"
