import random

from ucalc.terms import (
    App, BinOp, Const, Err, If, Lam, Seq, UNREACHABLE, Var, TRUE, FALSE,
    free_vars, parse_term, substitute,
)
from ucalc.reduction import ErrK, Function, Value, evaluate
from ucalc.safety import (
    IntegerModeSafety, SyntacticSafety, Verdict, get_provider, safe_oracle,
    safe_syntactic,
)
from ucalc.gen import gen_term


def test_syntactic_basics():
    assert safe_syntactic(Lam("x", App(Var("x"), UNREACHABLE))) is Verdict.SAFE
    assert safe_syntactic(Var("x")) is Verdict.SAFE
    assert safe_syntactic(Const(3)) is Verdict.SAFE
    assert safe_syntactic(UNREACHABLE) is Verdict.UNSAFE
    assert safe_syntactic(Err("user")) is Verdict.UNSAFE
    assert safe_syntactic(App(Lam("x", Var("x")), Const(1))) is Verdict.UNSAFE


def test_syntactic_operators():
    e = BinOp("+", Const(1), Const(2))
    assert safe_syntactic(e) is Verdict.SAFE
    assert evaluate(e) == Value(Const(3))
    # operands must be literal constants in delta's domain
    assert safe_syntactic(BinOp("+", Var("x"), Const(1))) is Verdict.UNSAFE
    assert safe_syntactic(BinOp("+", Const(True), Const(1))) is Verdict.UNSAFE
    assert safe_syntactic(BinOp("+", Const(1), BinOp("+", Const(1), Const(1)))) \
        is Verdict.UNSAFE


def test_open_operator_is_genuinely_unsafe():
    e = BinOp("+", Var("x"), Const(1))
    closed = substitute(e, "x", Const(True))
    assert evaluate(closed) == ErrK("delta")


def test_syntactic_composite():
    e = If(Var("p"), Seq(Const(1), Var("q")), Lam("x", Var("x")))
    assert safe_syntactic(e) is Verdict.SAFE
    assert safe_syntactic(If(Var("p"), Err("user"), Const(1))) is Verdict.UNSAFE


def test_oracle_never_says_safe():
    res = safe_oracle(UNREACHABLE, set(), samples=3)
    assert res.verdict is Verdict.UNSAFE
    res = safe_oracle(Var("x"), {"x"}, samples=10)
    assert res.verdict is Verdict.UNKNOWN


def test_oracle_finds_witness():
    e = BinOp("+", Var("x"), Const(1))
    res = safe_oracle(e, {"x"}, samples=40, seed=1)
    assert res.verdict is Verdict.UNSAFE
    closed = e
    for name, v in res.witness.items():
        closed = substitute(closed, name, v)
    obs = evaluate(closed)
    assert not isinstance(obs, (Value, Function))


def test_syntactic_soundness_sampled():
    rng = random.Random(9)
    checked = 0
    for _ in range(400):
        e = gen_term(rng, 6, scope=("x", "y"))
        if safe_syntactic(e) is not Verdict.SAFE:
            continue
        res = safe_oracle(e, free_vars(e), samples=20, seed=rng.randint(0, 999))
        assert res.verdict is Verdict.UNKNOWN, f"unsafe witness for {e}"
        checked += 1
    assert checked > 50


def test_integer_mode():
    prov = IntegerModeSafety()
    assert prov.is_safe(parse_term("(< 2147483647 (+ x 1))"))
    assert prov.is_safe(parse_term("(<= 0 p)"))
    assert prov.is_safe(parse_term("(seq (+ x 1) (= y 2))"))
    assert not prov.is_safe(parse_term("(f x)"))
    assert not prov.is_safe(parse_term("(+ x (err user))"))
    assert not prov.is_safe(parse_term("(unreachable)"))
    # comparisons make booleans; feeding them to arithmetic is not safe
    assert not prov.is_safe(parse_term("(+ (< x y) 1)"))
    assert prov.is_safe(parse_term("(if (< x y) 1 2)"))


def test_integer_mode_agrees_with_integer_substitutions():
    rng = random.Random(10)
    prov = IntegerModeSafety()
    pool = [Const(n) for n in range(-3, 5)]
    checked = 0
    for _ in range(400):
        e = gen_term(rng, 6, scope=("x", "y"))
        if not prov.is_safe(e):
            continue
        res = safe_oracle(e, free_vars(e), samples=15,
                          seed=rng.randint(0, 999), pool=pool)
        assert res.verdict is Verdict.UNKNOWN, f"integer-unsafe: {e}"
        checked += 1
    assert checked > 50


def test_provider_registry():
    assert get_provider("syntactic").is_safe(Const(1))
    assert get_provider("integer").name == "integer"
    try:
        get_provider("nope")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown provider accepted")
