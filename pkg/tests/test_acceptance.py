"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.
"""

import random
import time
import warnings

import pytest

from ucalc.terms import (
    App, BinOp, Const, HOLE, If, Lam, Seq, UNREACHABLE, Var,
    alpha_eq, desugar_plus_int, parse_term, print_term, replace_at,
    subterm_at,
)
from ucalc.reduction import (
    ErrK, Timeout, UndefHit, Value, contract, evaluate, run, step,
)
from ucalc.rewrite import RewriteStep, apply_trace, normalize_unreachable, search_equiv
from ucalc.safety import IntegerModeSafety
from ucalc.harness import HarnessConfig, check_pair, fuzz_rule_soundness
from ucalc.gen import gen_cfg, gen_closed_term, gen_valid_vfunction
from ucalc import vminus as vm
from ucalc.kelsey import (
    TranslationCheckConfig, check_simplify_translation, kh_apply, kh_proc,
)

from conftest import INTSQRT, INTSQRT_SIMPLIFIED, brute_idoms
from test_reduction import check_unique_decomposition

INT_MAX = 2**31 - 1
INT_MIN = -(2**31)


def report(n, elapsed, detail=""):
    print(f"\nACCEPTANCE {n} PASS ({elapsed:.1f}s) {detail}")


def test_criterion_1_branch_probe_table_exact():
    t0 = time.time()
    src = parse_term(
        "(lambda (p) (lambda (x) (+ 994 (if (p x) (unreachable) x))))")
    opt = parse_term("(lambda (p) (lambda (x) (+ 994 (seq (p x) x))))")
    lam_false = parse_term("(lambda (y) false)")
    lam_true = parse_term("(lambda (y) true)")
    for n in (0, 7, 100):
        expect = Value(Const(994 + n))
        assert evaluate(App(App(src, lam_false), Const(n))) == expect
        assert evaluate(App(App(opt, lam_false), Const(n))) == expect
        assert isinstance(evaluate(App(App(src, lam_true), Const(n))), UndefHit)
        assert evaluate(App(App(opt, lam_true), Const(n))) == expect
    report(1, time.time() - t0, "probe-function table, n in {0,7,100}")


def test_criterion_2_branch_elimination_pipeline():
    t0 = time.time()
    test = parse_term("(<= 0 p)")
    body = parse_term("(+ (* p p) 1)")
    e = If(test, body, UNREACHABLE)
    out, trace = normalize_unreachable(e, IntegerModeSafety())
    assert alpha_eq(out, body)
    assert [(s.rule, s.direction) for s in trace] == [("U1", "fwd"), ("M4", "fwd")]
    assert apply_trace(e, trace, IntegerModeSafety()) == out
    report(2, time.time() - t0, "normalize = [U1, M4] -> body")


def test_criterion_3_rule_soundness_fuzzing():
    t0 = time.time()
    cfg = HarnessConfig(num_terms=1000, num_contexts=20, fuel=10_000, seed=2024)
    out = fuzz_rule_soundness(cfg)
    assert out.checked == 1000, f"only {out.checked} terms produced a step"
    assert not out.disagreements, out.disagreements[0].bundle
    # every rule family must actually have been exercised
    assert set(out.by_rule) >= {"P1", "P2", "P3", "P4", "P5", "U1", "U2",
                                "M1", "M2", "M3", "M4", "M5", "M6", "M7",
                                "M8", "M9", "M10"}
    report(3, time.time() - t0,
           f"1000 terms x 20 contexts, 0 disagreements ({out.summary()})")


def test_criterion_4_overflow_encoding():
    t0 = time.time()
    x = Var("x")
    guarded = BinOp("<", x, desugar_plus_int(x, Const(1), INT_MAX, INT_MIN))
    plain_sum = BinOp("+", x, Const(1))
    g_over = BinOp("<", Const(INT_MAX), plain_sum)
    g_under = BinOp("<", plain_sum, Const(INT_MIN))
    seq_form = BinOp("<", x, Seq(g_over, Seq(g_under, plain_sum)))

    # (a) two branch eliminations reach the double-seq form...
    trace = search_equiv(guarded, seq_form, depth=4, width=16)
    assert trace is not None
    assert [(s.rule, s.direction) for s in trace] == [("U2", "fwd"), ("U2", "fwd")]
    # ...and integer-mode drops leave the raw mathematical comparison
    drops = [RewriteStep("M4", "fwd", (1,), {"safety": "integer"}),
             RewriteStep("M4", "fwd", (1,), {"safety": "integer"})]
    final = apply_trace(seq_form, drops)
    assert final == BinOp("<", x, plain_sum)

    # (b) differentially, the guarded comparison is constant true
    rng = random.Random(4)
    contexts = [App(Lam("x", HOLE), Const(rng.randint(INT_MIN, INT_MAX - 1)))
                for _ in range(100)]
    rep = check_pair(guarded, Const(True), {"x"}, HarnessConfig(fuel=10_000),
                     contexts=contexts)
    assert rep.count("agree") == 100 and not rep.disagreements
    assert all(c.lhs == "value true" and c.rhs == "value true" for c in rep.cases)
    report(4, time.time() - t0, "overflow guard: 2xU2 + 2xM4; 100/100 true")


def test_criterion_5_intsqrt_end_to_end():
    t0 = time.time()
    f = vm.parse_vminus(INTSQRT)

    def oracle(n):  # smallest x with x*x >= n
        x = 0
        while x * x < n:
            x += 1
        return x

    for n in (0, 1, 2, 4, 8, 9, 10):
        assert vm.eval_vminus(f, [n]) == vm.Returned(oracle(n))
    for n in (-1, -5):
        assert isinstance(vm.eval_vminus(f, [n]), vm.HitUnreachable)

    f2, trace = vm.simplify_function_cfg(f)
    assert vm.print_vminus(f2) == INTSQRT_SIMPLIFIED
    assert trace == ["fail"]
    for n in (0, 1, 2, 4, 8, 9, 10):
        assert vm.eval_vminus(f2, [n]) == vm.eval_vminus(f, [n])
    report(5, time.time() - t0, "values, golden pruned CFG, post-pass agreement")


@pytest.fixture(scope="module")
def theorem_corpus():
    rng = random.Random(83)
    corpus = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        while len(corpus) < 200:
            f = gen_valid_vfunction(rng, max_blocks=6)
            reach = vm.reachable_blocks(f)
            labels = [b.label for b in f.blocks
                      if isinstance(b.terminator, vm.UnreachableT)
                      and b.label in reach]
            corpus.append((f, labels[0]))
    return corpus


def test_criterion_6_simplification_translation_suite(theorem_corpus):
    t0 = time.time()
    disagreements = 0
    small_total = 0
    small_found = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for f, label in theorem_corpus:
            cfg = TranslationCheckConfig(samples=6, fuel=25_000, seed=11,
                                         depth=12, width=16)
            rep = check_simplify_translation(f, label, cfg)
            disagreements += rep.disagreements
            if rep.searched:
                small_total += 1
                if rep.witness is not None:
                    small_found += 1
    assert disagreements == 0
    assert small_total > 30, "corpus has too few small functions"
    rate = small_found / small_total
    assert rate >= 0.5, f"witness rate {rate:.2f} below 0.5"
    report(6, time.time() - t0,
           f"200 functions, 0 disagreements; witnesses {small_found}/{small_total}")


def test_criterion_7_dominator_oracle():
    t0 = time.time()
    rng = random.Random(7)
    for _ in range(100):
        entry, succ = gen_cfg(rng, 8)
        assert vm.idom_map(entry, succ) == brute_idoms(entry, succ)
    report(7, time.time() - t0, "100 random CFGs vs path-removal oracle")


def test_criterion_8_translation_commutation(theorem_corpus):
    t0 = time.time()
    rng = random.Random(88)
    checked = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for f, _ in theorem_corpus:
            t = kh_proc(f)
            for _ in range(4):
                args = [rng.randint(-3, 6) for _ in f.params]
                vout = vm.eval_vminus(f, args, 2500)
                lout = evaluate(kh_apply(t, args), 25_000)
                if isinstance(vout, vm.OutOfFuel) or isinstance(lout, Timeout):
                    continue
                checked += 1
                if isinstance(vout, vm.Returned):
                    assert lout == Value(Const(vout.value)), (args, vout, lout)
                elif isinstance(vout, vm.Errored):
                    assert isinstance(lout, ErrK), (args, vout, lout)
                else:
                    assert isinstance(lout, UndefHit), (args, vout, lout)
    assert checked > 500
    report(8, time.time() - t0, f"{checked} commuting evaluations")


def test_criterion_9_interpreter_metatheory():
    t0 = time.time()
    rng = random.Random(9)
    mono_checked = 0
    for i in range(10_000):
        e = gen_closed_term(rng, 7)
        # progress + unique decomposition against the grammar-enumeration
        # oracle, and agreement of step with the chosen split
        check_unique_decomposition(e)
        if i % 5 == 0:
            final, steps, finished = run(e, 400)
            if not finished:
                continue
            obs = evaluate(e, 400)
            assert evaluate(e, steps) == obs
            assert evaluate(e, steps + 7) == obs
            if steps > 0:
                assert isinstance(evaluate(e, steps - 1), Timeout)
            mono_checked += 1
    assert mono_checked > 1000
    report(9, time.time() - t0,
           f"10000 terms; fuel monotonicity on {mono_checked}")
