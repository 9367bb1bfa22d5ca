import random

import pytest

from ucalc.terms import (
    App, BinOp, Const, Err, If, Lam, ParseError, Seq, UNREACHABLE, Var,
    FALSE, TRUE,
    all_paths, alpha_eq, canonical, children, desugar_plus_int, free_vars,
    is_answer, is_value, is_well_formed, parse_term, print_term, replace_at,
    substitute, subterm_at,
)
from ucalc.reduction import UndefHit, Value, evaluate
from ucalc.gen import gen_term


def test_parse_basics():
    assert parse_term("(if false 1 2)") == If(FALSE, Const(1), Const(2))
    assert parse_term("(lambda (x) x)") == Lam("x", Var("x"))
    assert parse_term("(seq (err beta) 3)") == Seq(Err("beta"), Const(3))
    assert parse_term("(unreachable)") == UNREACHABLE
    assert parse_term("-7") == Const(-7)
    assert parse_term("(f 1)") == App(Var("f"), Const(1))


def test_parse_sugar():
    assert parse_term("(lambda (x y) x)") == Lam("x", Lam("y", Var("x")))
    assert parse_term("(seq 1 2 3)") == Seq(Const(1), Seq(Const(2), Const(3)))
    assert parse_term("(f a b)") == App(App(Var("f"), Var("a")), Var("b"))


def test_comments_and_whitespace():
    src = """
    ; manhattan-ish guard
    (if (<= 0 p)   ; test
        (+ p 1)
        (unreachable))
    """
    e = parse_term(src)
    assert isinstance(e, If)


@pytest.mark.parametrize("bad,loc", [
    ("(if false 1", (1, 11)),
    ("(lambda () x)", (1, 2)),
    ("(err 5)", (1, 6)),
    (")", (1, 1)),
    ("(+ 1 2) 3", (1, 9)),
])
def test_parse_errors_carry_location(bad, loc):
    with pytest.raises(ParseError) as exc:
        parse_term(bad)
    assert (exc.value.line, exc.value.col) == loc


def test_bool_and_int_constants_differ():
    assert Const(True) != Const(1)
    assert Const(False) != Const(0)
    assert hash(Const(True)) != hash(Const(1))
    assert print_term(Const(True)) == "true"
    assert print_term(Const(1)) == "1"


def test_roundtrip_random():
    rng = random.Random(0)
    for _ in range(300):
        e = gen_term(rng, 8, scope=("x", "y"))
        assert parse_term(print_term(e)) == e


def test_free_vars():
    assert free_vars(Lam("x", Var("x"))) == frozenset()
    assert free_vars(BinOp("+", Var("x"), Const(1))) == {"x"}
    assert free_vars(If(Var("p"), Var("p"), UNREACHABLE)) == {"p"}


def test_well_formed():
    assert is_well_formed({"x"}, Var("x"))
    assert is_well_formed(set(), Lam("x", Var("x")))
    assert not is_well_formed(set(), BinOp("+", Var("x"), Const(1)))


def test_substitute():
    assert substitute(Var("x"), "x", Const(5)) == Const(5)
    assert substitute(Lam("x", Var("x")), "x", Const(5)) == Lam("x", Var("x"))
    # capture avoidance: the bound y must be renamed away
    out = substitute(Lam("y", Var("x")), "x", Var("y"))
    assert isinstance(out, Lam)
    assert out.param != "y"
    assert out.body == Var("y")


def test_alpha_eq():
    assert alpha_eq(Lam("x", Var("x")), Lam("y", Var("y")))
    assert not alpha_eq(Lam("x", Var("x")), Lam("x", Const(1)))
    assert alpha_eq(UNREACHABLE, UNREACHABLE)
    # free variables must match by name
    assert not alpha_eq(Var("a"), Var("b"))


def test_alpha_eq_means_equal_canonical_text():
    rng = random.Random(1)
    for _ in range(200):
        e = gen_term(rng, 7, scope=("x",))
        renamed = canonical(e)
        assert alpha_eq(e, renamed)
        assert print_term(canonical(e)) == print_term(canonical(renamed))


def test_alpha_eq_is_equivalence():
    rng = random.Random(2)
    terms = [gen_term(rng, 6, scope=("x",)) for _ in range(60)]
    for t in terms:
        assert alpha_eq(t, t)
    for a in terms[:20]:
        for b in terms[:20]:
            assert alpha_eq(a, b) == alpha_eq(b, a)
            if alpha_eq(a, b):
                for c in terms[:20]:
                    if alpha_eq(b, c):
                        assert alpha_eq(a, c)


def test_substitution_properties():
    rng = random.Random(3)
    vals = [Const(3), TRUE, Lam("z", Var("z"))]
    for _ in range(300):
        e = gen_term(rng, 7, scope=("x", "y"))
        v = rng.choice(vals)
        out = substitute(e, "x", v)
        assert free_vars(out) <= (free_vars(e) - {"x"}) | free_vars(v)
        if "x" not in free_vars(e):
            assert alpha_eq(out, e)
        assert free_vars(parse_term(print_term(e))) == free_vars(e)


def test_paths():
    e = parse_term("(if a b c)")
    assert subterm_at(e, (2,)) == Var("c")
    assert replace_at(e, (0,), Const(1)) == If(Const(1), Var("b"), Var("c"))
    assert dict(all_paths(Const(5))) == {(): Const(5)}


def test_values_and_answers():
    assert is_value(Const(1)) and is_value(Lam("x", Var("x")))
    assert not is_value(Err("beta")) and is_answer(Err("beta"))
    assert is_answer(UNREACHABLE)
    assert not is_answer(BinOp("+", Const(1), Const(2)))


def test_desugar_plus_int_shape():
    x, y = Var("x"), Var("y")
    e = desugar_plus_int(x, y, 7, -8)
    total = BinOp("+", x, y)
    assert e == If(BinOp("<", Const(7), total), UNREACHABLE,
                   If(BinOp("<", total, Const(-8)), UNREACHABLE, total))
    # overflow guard comes first
    assert e.test.left == Const(7)


def test_desugar_plus_int_evaluates():
    e = desugar_plus_int(Const(0), Const(0), 7, -8)
    assert evaluate(e) == Value(Const(0))
    e = desugar_plus_int(Const(7), Const(1), 7, -8)
    assert isinstance(evaluate(e), UndefHit)
    e = desugar_plus_int(Const(-8), Const(-1), 7, -8)
    assert isinstance(evaluate(e), UndefHit)
