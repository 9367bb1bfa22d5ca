"""Seeded random generators for terms, contexts, and SSA functions.

Everything is driven by an explicit random.Random so runs reproduce
bit-for-bit from a seed.
"""

from .terms import (
    App, BinOp, Const, Err, HOLE, If, Lam, Seq, UNREACHABLE, Var,
    TRUE, FALSE, OPS,
)
from . import vminus as vm

ERR_LABELS = ("beta", "delta", "match-failure", "user")


def gen_term(rng, fuel=8, scope=(), allow_unreachable=True, allow_err=True):
    """Random term whose free variables are drawn from scope."""
    scope = tuple(scope)
    leaves = ["int", "bool"]
    if scope:
        leaves += ["var", "var"]
    if allow_err:
        leaves.append("err")
    if allow_unreachable:
        leaves.append("unreachable")
    if fuel <= 1 or rng.random() < 0.28:
        kind = rng.choice(leaves)
    else:
        kind = rng.choice(("lam", "app", "binop", "if", "seq", "binop"))
    if kind == "int":
        return Const(rng.randint(-3, 5))
    if kind == "bool":
        return Const(rng.random() < 0.5)
    if kind == "var":
        return Var(rng.choice(scope))
    if kind == "err":
        return Err(rng.choice(ERR_LABELS))
    if kind == "unreachable":
        return UNREACHABLE
    sub = max(1, (fuel * 3) // 5)
    if kind == "lam":
        x = f"v{rng.randint(0, 3)}"
        return Lam(x, gen_term(rng, fuel - 1, scope + (x,),
                               allow_unreachable, allow_err))
    if kind == "app":
        return App(gen_term(rng, sub, scope, allow_unreachable, allow_err),
                   gen_term(rng, sub, scope, allow_unreachable, allow_err))
    if kind == "binop":
        return BinOp(rng.choice(OPS),
                     gen_term(rng, sub, scope, allow_unreachable, allow_err),
                     gen_term(rng, sub, scope, allow_unreachable, allow_err))
    if kind == "if":
        return If(gen_term(rng, sub, scope, allow_unreachable, allow_err),
                  gen_term(rng, sub, scope, allow_unreachable, allow_err),
                  gen_term(rng, sub, scope, allow_unreachable, allow_err))
    return Seq(gen_term(rng, sub, scope, allow_unreachable, allow_err),
               gen_term(rng, sub, scope, allow_unreachable, allow_err))


def gen_closed_term(rng, fuel=8, **kw):
    return gen_term(rng, fuel, scope=(), **kw)


def gen_rule_friendly_term(rng, fuel=7, scope=()):
    """Like gen_term, but often wraps the result in shapes that specific
    rewrite rules match (unreachable branches, variable tests, equality
    chains, sequences in evaluation position), so rule fuzzing exercises
    the whole rule set rather than whichever patterns arise by chance."""
    def sub(n=None):
        return gen_term(rng, n or max(2, fuel // 2), scope)

    shapes = [
        lambda: If(sub(), sub(), UNREACHABLE),
        lambda: If(sub(), UNREACHABLE, sub()),
        lambda: Seq(sub(), UNREACHABLE),
        lambda: App(sub(), UNREACHABLE),
        lambda: BinOp(rng.choice(OPS), sub(), UNREACHABLE),
        lambda: If(If(sub(), Const(rng.randint(1, 3)), FALSE), sub(), sub()),
        lambda: BinOp(rng.choice(("+", "<")), Seq(sub(), sub()), sub(2)),
        lambda: Seq(If(sub(), sub(), sub()), sub(2)),
        lambda: BinOp("+", If(sub(), sub(), sub()), sub(2)),
        lambda: If(FALSE, sub(), sub()),
        lambda: gen_term(rng, fuel, scope),
    ]
    if scope:
        x = rng.choice(scope)
        shapes += [
            lambda: If(Var(x), sub(), sub()),
            lambda: If(BinOp("=", Var(x), Const(rng.randint(-1, 2))), sub(),
                       If(BinOp("=", Var(x), Const(rng.randint(3, 5))), sub(),
                          sub())),
        ]
    return rng.choice(shapes)()


def default_context_values():
    return [
        Const(0), Const(1), Const(2), Const(-1), Const(5),
        TRUE, FALSE,
        Lam("y", Var("y")),
        Lam("y", FALSE),
        Lam("y", TRUE),
        Lam("y", Const(3)),
    ]


def _surrounding_context(rng, pool, use_value):
    """One layer of context around the hole; `use_value` biases toward
    shapes that force and consume the plugged term's result."""
    c = rng.choice(pool)
    using = [
        lambda: BinOp(rng.choice(("+", "-", "*", "<", "<=")), HOLE,
                      Const(rng.randint(-2, 3))),
        lambda: BinOp(rng.choice(("+", "=", "!=")), Const(rng.randint(-2, 3)), HOLE),
        lambda: If(HOLE, Const(rng.randint(-2, 3)), Const(rng.randint(-2, 3))),
        lambda: App(Lam("z", BinOp("+", Var("z"), Const(1))), HOLE),
        lambda: App(HOLE, c),
        lambda: Seq(Const(0), HOLE),
    ]
    weak = [
        lambda: HOLE,
        lambda: Seq(HOLE, Const(rng.randint(-2, 3))),
        lambda: If(Const(True), HOLE, Err("user")),
    ]
    return rng.choice(using)() if use_value else rng.choice(weak + using)()


def sample_context(delta_vars, rng, pool=None, use_bias=0.5):
    """A well-formed closing context: application binders for every variable
    in delta wrapped around a random surrounding context."""
    pool = pool if pool is not None else default_context_values()
    ctx = _surrounding_context(rng, pool, rng.random() < use_bias)
    for name in sorted(delta_vars, reverse=True):
        ctx = App(Lam(name, ctx), rng.choice(pool))
    return ctx


# ---------------------------------------------------------------------------
# Random Extended Vminus functions, valid by construction.
#
# Shapes kept deliberately LLVM-ish: integer arithmetic on SSA variables,
# comparisons feeding conditional branches only.  That keeps variables
# integer-valued at run time, so the integer safety provider is honest on
# the translated terms.

def gen_vfunction(rng, max_blocks=6, name="f", want_unreachable=True,
                  error_bias=0.35, loop_bias=0.12):
    nblocks = rng.randint(2, max_blocks)
    labels = [f"b{i}" for i in range(nblocks)]
    params = [f"%a{i}" for i in range(rng.randint(1, 2))]

    # skeleton: every non-entry block gets an incoming edge from an earlier
    # block, so everything is reachable; terminators are filled in later.
    succs = {l: [] for l in labels}
    kinds = {}
    unreach_idx = rng.randrange(1, nblocks) if want_unreachable else None
    if want_unreachable and nblocks == 1:
        unreach_idx = 0

    for i, l in enumerate(labels):
        if i == unreach_idx:
            kinds[l] = "unreachable"
        elif i == nblocks - 1:
            kinds[l] = "ret"
        else:
            kinds[l] = rng.choice(("br", "brc", "ret") if i > 0 else ("br", "brc"))

    def pick_target(i, allow_back=True):
        # mostly forward edges; occasional bounded loop back to self-dominators
        if allow_back and i > 0 and rng.random() < loop_bias:
            return labels[rng.randrange(1, i + 1)]
        if i + 1 < nblocks:
            return labels[rng.randrange(i + 1, nblocks)]
        return labels[i]  # forced self-loop at the end; rare

    for i, l in enumerate(labels):
        if kinds[l] in ("ret", "unreachable"):
            continue
        if kinds[l] == "br":
            succs[l] = [pick_target(i, allow_back=False)]
        else:
            t1 = pick_target(i)
            t2 = pick_target(i, allow_back=False)
            succs[l] = [t1, t2]

    # guarantee every block has an incoming edge from an earlier block
    for j in range(1, nblocks):
        l = labels[j]
        has_early = any(l in succs[labels[i]] for i in range(j))
        if not has_early:
            donors = [i for i in range(j) if kinds[labels[i]] == "brc"]
            if donors:
                d = labels[rng.choice(donors)]
                succs[d][rng.randrange(2)] = l
            else:
                # retarget some earlier unconditional branch
                brs = [i for i in range(j) if kinds[labels[i]] == "br"]
                if brs:
                    succs[labels[rng.choice(brs)]] = [l]
                else:
                    kinds[labels[0]] = "br"
                    succs[labels[0]] = [l]

    preds = {l: [] for l in labels}
    for l in labels:
        for s in succs[l]:
            if l not in preds[s]:
                preds[s].append(l)

    idom = vm.idom_map(labels[0], {l: tuple(succs[l]) for l in labels})

    def dominators_of(l):
        out = []
        cur = l
        while cur is not None:
            out.append(cur)
            cur = idom.get(cur)
        return out

    # variable fill: ints per block; comparisons only feed branch conditions
    counter = [0]

    def fresh(stem="%t"):
        counter[0] += 1
        return f"{stem}{counter[0]}"

    defs = {l: [] for l in labels}  # int-valued vars defined in block l
    blocks = {}
    phis_of = {l: [] for l in labels}

    def avail_ints(l, include_self=True):
        out = list(params)
        for d in reversed(dominators_of(l)):
            if d == l and not include_self:
                continue
            out.extend(defs[d])
        return out

    # decide phis for join blocks reachable only after preds known
    order = sorted(labels, key=lambda l: len(dominators_of(l)))
    for l in order:
        if l == labels[0] or not preds[l]:
            continue
        nphi = rng.randint(0, 2) if len(preds[l]) >= 2 else rng.randint(0, 1)
        for _ in range(nphi):
            tgt = fresh("%p")
            incs = []
            for p in preds[l]:
                cands = avail_ints(p)
                if cands and rng.random() < 0.8:
                    incs.append((rng.choice(cands), p))
                else:
                    incs.append((rng.randint(-2, 4), p))
            phis_of[l].append(vm.Phi(tgt, tuple(incs)))
            defs[l].append(tgt)

    for i, l in enumerate(labels):
        cmds = []
        pool = avail_ints(l)
        for _ in range(rng.randint(0, 3)):
            if rng.random() < 0.12:
                cmds.append(vm.CallError())
                continue
            dst = fresh()
            op = rng.choice(("+", "-", "*"))
            a = rng.choice(pool) if pool and rng.random() < 0.8 else rng.randint(-2, 4)
            b = rng.choice(pool) if pool and rng.random() < 0.8 else rng.randint(-2, 4)
            cmds.append(vm.Assign(dst, op, a, b))
            defs[l].append(dst)
            pool.append(dst)

        kind = kinds[l]
        if kind == "unreachable":
            if rng.random() < error_bias:
                cmds.append(vm.CallError())
            term = vm.UnreachableT()
        elif kind == "ret":
            v = rng.choice(pool) if pool and rng.random() < 0.8 else rng.randint(-2, 4)
            term = vm.Ret(v)
        elif kind == "br":
            term = vm.Br(succs[l][0])
        else:
            cnd = fresh("%c")
            a = rng.choice(pool) if pool else rng.randint(-2, 4)
            b = rng.choice(pool) if pool and rng.random() < 0.6 else rng.randint(-2, 4)
            cmds.append(vm.Assign(cnd, rng.choice(("<", "<=", "=", "!=")), a, b))
            term = vm.BrCond(cnd, succs[l][0], succs[l][1])
        blocks[l] = vm.Block(l, tuple(phis_of[l]), tuple(cmds), term)

    fn = vm.VFunction(name, tuple(params), tuple(blocks[l] for l in labels))
    return fn


def gen_valid_vfunction(rng, max_blocks=6, want_unreachable=True, **kw):
    """Retry wrapper: generation is valid by construction, but the skeleton
    heuristics occasionally produce an unreachable-block-free function when
    one was requested; resample until the shape is right."""
    for _ in range(50):
        fn = gen_vfunction(rng, max_blocks=max_blocks,
                           want_unreachable=want_unreachable, **kw)
        errors = vm.validate(fn)
        if errors:
            continue
        if want_unreachable:
            reach = vm.reachable_blocks(fn)
            has = any(isinstance(b.terminator, vm.UnreachableT) and b.label in reach
                      for b in fn.blocks)
            if not has:
                continue
        return fn
    raise RuntimeError("could not generate a valid function")


def gen_cfg(rng, max_nodes=8):
    """Random rooted digraph as (entry, successor map); for dominator tests."""
    n = rng.randint(2, max_nodes)
    labels = [f"n{i}" for i in range(n)]
    succ = {l: set() for l in labels}
    for j in range(1, n):
        i = rng.randrange(0, j)
        succ[labels[i]].add(labels[j])
    extra = rng.randint(0, n)
    for _ in range(extra):
        a = rng.choice(labels)
        b = rng.choice(labels)
        if b != labels[0]:
            succ[a].add(b)
    return labels[0], {l: tuple(sorted(s)) for l, s in succ.items()}
