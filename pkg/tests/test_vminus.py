import random

import pytest

from ucalc import vminus as vm
from ucalc.gen import gen_cfg, gen_valid_vfunction
from conftest import INTSQRT, INTSQRT_SIMPLIFIED, brute_idoms


def parse(text):
    return vm.parse_vminus(text)


def test_parse_intsqrt(intsqrt):
    assert len(intsqrt.blocks) == 5
    assert intsqrt.params == ("%in",)
    assert intsqrt.labels() == ["start", "loop", "body", "exit", "fail"]
    loop = intsqrt.block("loop")
    assert loop.phis[0].target == "%x"
    assert loop.phis[0].incomings == ((0, "start"), ("%x1", "body"))


def test_print_parse_roundtrip(intsqrt):
    assert vm.print_vminus(intsqrt) == INTSQRT
    assert parse(vm.print_vminus(intsqrt)) == intsqrt


def test_trivial_function():
    f = parse("fun f() { e: ret 0 }")
    assert len(f.blocks) == 1
    assert vm.eval_vminus(f, []) == vm.Returned(0)


def test_validate_ok(intsqrt):
    assert vm.validate(intsqrt) == []


def test_validate_duplicate_label():
    with pytest.raises(vm.VminusError, match="duplicate label"):
        parse("fun f() { a: br b\nb: ret 0\nb: ret 1 }")


def test_validate_undefined_variable():
    with pytest.raises(vm.VminusError, match="undefined variable"):
        parse("fun f() { a: %x = + %z 1 ret %x }")


def test_validate_use_before_definition():
    with pytest.raises(vm.VminusError, match="before its definition"):
        parse("fun f() { a: %x = + %y 1\n%y = + 1 1\nret %x }")


def test_validate_phi_pred_mismatch():
    bad = """
fun f(%a) {
e:
  br m
m:
  %x = phi [1, e] [2, m]
  ret %x
}
"""
    with pytest.raises(vm.VminusError, match="do not match predecessors"):
        parse(bad)


def test_validate_phi_from_nonpredecessor_rejected():
    bad = """
fun f(%a) {
e:
  br b
b:
  br m
m:
  %x = phi [1, e]
  ret %x
}
"""
    with pytest.raises(vm.VminusError, match="do not match"):
        parse(bad)


def test_validate_entry_phi_and_entry_branch():
    with pytest.raises(vm.VminusError, match="entry"):
        parse("fun f() { a: br b\nb: br a }")


def test_validate_dominance():
    bad = """
fun f(%a) {
e:
  br %a l r
l:
  %x = + %a 1
  br m
r:
  br m
m:
  ret %x
}
"""
    with pytest.raises(vm.VminusError, match="does not dominate"):
        parse(bad)


def test_single_assignment():
    with pytest.raises(vm.VminusError, match="more than once"):
        parse("fun f() { e: %x = + 1 1\n%x = + 2 2\nret %x }")


def test_preds_succs(intsqrt):
    assert vm.predecessors(intsqrt, "loop") == {"start", "body"}
    assert vm.predecessors(intsqrt, "start") == set()
    assert vm.successors(intsqrt, "fail") == set()
    assert vm.successors(intsqrt, "loop") == {"body", "fail"}
    assert vm.successors(intsqrt, "body") == {"exit", "loop"}


def test_dominators_intsqrt(intsqrt):
    dom = vm.compute_dominators(intsqrt)
    assert dom.idom == {"loop": "start", "body": "loop",
                        "fail": "loop", "exit": "body"}
    assert dom.children["loop"] == ("body", "fail")


def test_dominators_straight_line():
    f = parse("fun f() { a: br b\nb: br c\nc: ret 1 }")
    dom = vm.compute_dominators(f)
    assert dom.idom == {"b": "a", "c": "b"}


def test_dominators_diamond():
    f = parse("""
fun f(%p) {
a:
  %c = < %p 0
  br %c b c
b:
  br d
c:
  br d
d:
  ret 0
}
""")
    assert vm.compute_dominators(f).idom["d"] == "a"


def test_dominators_match_brute_force():
    rng = random.Random(12)
    for _ in range(40):
        entry, succ = gen_cfg(rng, 8)
        assert vm.idom_map(entry, succ) == brute_idoms(entry, succ)


def test_eval_intsqrt(intsqrt):
    def oracle(n):
        x = 0
        while x * x < n:
            x += 1
        return x

    for n in (0, 1, 2, 4, 8, 9, 10, 30):
        assert vm.eval_vminus(intsqrt, [n]) == vm.Returned(oracle(n))
    for n in (-1, -5):
        assert isinstance(vm.eval_vminus(intsqrt, [n]), vm.HitUnreachable)


def test_eval_arity_and_fuel(intsqrt):
    with pytest.raises(vm.VminusError, match="arity"):
        vm.eval_vminus(intsqrt, [])
    assert isinstance(vm.eval_vminus(intsqrt, [10**6], fuel=50), vm.OutOfFuel)


def test_eval_error_paths():
    f = parse("fun f(%a) { e: call error()\nret 0 }")
    assert isinstance(vm.eval_vminus(f, [1]), vm.Errored)
    # comparison results are booleans; arithmetic on them errors
    f = parse("fun f(%a) { e: %c = < %a 1\n%x = + %c 1\nret %x }")
    assert isinstance(vm.eval_vminus(f, [0]), vm.Errored)


def test_eval_brcond_truthiness():
    f = parse("fun f(%a) { e: br %a l r\nl: ret 1\nr: ret 2 }")
    assert vm.eval_vminus(f, [5]) == vm.Returned(1)
    assert vm.eval_vminus(f, [0]) == vm.Returned(2)
    f = parse("fun f(%a) { e: %c = <= %a 3\nbr %c l r\nl: ret 1\nr: ret 2 }")
    assert vm.eval_vminus(f, [3]) == vm.Returned(1)
    assert vm.eval_vminus(f, [4]) == vm.Returned(2)


def test_eval_phi_reads_are_simultaneous():
    f = parse("""
fun f(%a) {
e:
  br m
m:
  %x = phi [1, e] [%y, m]
  %y = phi [2, e] [%x, m]
  %n = phi [0, e] [%n1, m]
  %n1 = + %n 1
  %c = < %n1 3
  br %c m done
done:
  ret %x
}
""")
    # after two swaps x is back to 1... entry: x=1,y=2; iter: x,y = y,x
    out = vm.eval_vminus(f, [0])
    assert out == vm.Returned(1)


def test_simplify_intsqrt_golden(intsqrt):
    f2, trace = vm.simplify_function_cfg(intsqrt)
    assert trace == ["fail"]
    assert vm.print_vminus(f2) == INTSQRT_SIMPLIFIED
    assert vm.validate(f2) == []


def test_simplify_erases_trailing_commands():
    f = parse("""
fun f(%a) {
e:
  %c = < %a 0
  br %c u done
u:
  %x = + %a 1
  %y = + %x 1
  unreachable
done:
  ret 0
}
""")
    f2, changed = vm.simplify_unreachable(f, "u")
    assert changed
    # commands gone, edge pruned, block deleted
    assert not f2.has_block("u")
    assert isinstance(f2.block("e").terminator, vm.Br)
    assert f2.block("e").terminator.target == "done"
    assert vm.validate(f2) == []


def test_simplify_stops_at_call_error():
    f = parse("""
fun f(%a) {
e:
  br u
u:
  %x = + %a 1
  call error()
  unreachable
}
""")
    f2, changed = vm.simplify_unreachable(f, "u")
    assert not changed and f2 == f
    # dead commands after the error call are erased, the rest stays
    f = parse("""
fun f(%a) {
e:
  br u
u:
  %x = + %a 1
  call error()
  %y = + %a 2
  unreachable
}
""")
    f2, changed = vm.simplify_unreachable(f, "u")
    assert changed
    cmds = f2.block("u").commands
    assert len(cmds) == 2 and isinstance(cmds[1], vm.CallError)
    assert f2.has_block("u")


def test_simplify_unconditional_pred_becomes_unreachable():
    f = parse("fun f() { a: br b\nb: br c\nc: unreachable }")
    f2, trace = vm.simplify_function_cfg(f)
    # pruning cascades: two separate fixpoint rounds fire
    assert trace == ["c", "b"]
    assert [b.label for b in f2.blocks] == ["a"]
    assert isinstance(f2.block("a").terminator, vm.UnreachableT)


def test_simplify_entry_block():
    f = parse("fun f(%a) { e: %x = + %a 1\nunreachable }")
    f2, changed = vm.simplify_unreachable(f, "e")
    assert changed
    assert f2.block("e") == vm.Block("e", (), (), vm.UnreachableT())
    # a second application is a no-op, so the fixpoint terminates
    f3, changed = vm.simplify_unreachable(f2, "e")
    assert not changed and f3 == f2


def test_simplify_brcond_both_arms_to_dead_block():
    f = parse("""
fun f(%a) {
e:
  %c = < %a 0
  br %c u u
u:
  unreachable
}
""")
    f2, changed = vm.simplify_unreachable(f, "u")
    assert changed
    assert isinstance(f2.block("e").terminator, vm.UnreachableT)
    assert not f2.has_block("u")
    assert vm.validate(f2) == []


def test_simplify_requires_unreachable_terminator(intsqrt):
    with pytest.raises(vm.VminusError):
        vm.simplify_unreachable(intsqrt, "loop")


def test_simplify_fixpoint_and_monotone():
    rng = random.Random(13)

    def instr_count(f):
        return sum(len(b.phis) + len(b.commands) + 1 for b in f.blocks)

    for _ in range(60):
        f = gen_valid_vfunction(rng, max_blocks=6)
        f2, _ = vm.simplify_function_cfg(f)
        assert len(f2.blocks) <= len(f.blocks)
        assert instr_count(f2) <= instr_count(f)
        assert vm.validate(f2) == []
        f3, trace3 = vm.simplify_function_cfg(f2)
        assert f3 == f2 and trace3 == []


def test_pass_preserves_defined_outcomes():
    rng = random.Random(14)
    checked = 0
    for _ in range(80):
        f = gen_valid_vfunction(rng, max_blocks=6)
        f2, _ = vm.simplify_function_cfg(f)
        for _ in range(4):
            args = [rng.randint(-3, 5) for _ in f.params]
            before = vm.eval_vminus(f, args, 2000)
            if isinstance(before, (vm.HitUnreachable, vm.OutOfFuel)):
                continue
            after = vm.eval_vminus(f2, args, 2000)
            assert after == before, (args, before, after, vm.print_vminus(f))
            checked += 1
    assert checked > 60


def test_parse_errors():
    with pytest.raises(vm.VminusParseError):
        parse("fun f( { e: ret 0 }")
    with pytest.raises(vm.VminusParseError):
        parse("fun f() { e: %x = phi [1, e]\n%y = + 1 1\n%z = phi [1, e]\nret 0 }")
    with pytest.raises(vm.VminusParseError):
        parse("fun f() { e: %x = ? 1 2\nret %x }")


def test_negative_literals():
    f = parse("fun f() { e: %x = + -2 3\nret %x }")
    assert vm.eval_vminus(f, []) == vm.Returned(1)
