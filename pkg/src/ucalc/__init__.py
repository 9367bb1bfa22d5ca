"""A lambda calculus with an unreachable construct: run-time reduction,
compile-time rewrite rules with replayable traces, a differential
correctness harness, and a companion SSA mini-IR with its
unreachable-driven CFG simplification pass and SSA-to-lambda translation.
"""

from .terms import (
    App, BinOp, Const, Err, Hole, If, Lam, Seq, Term, Unreachable, Var,
    alpha_eq, desugar_plus_int, free_vars, is_answer, is_value,
    is_well_formed, parse_term, plug, print_term, substitute,
)
from .reduction import (
    DEFAULT_FUEL, ErrK, Function, Timeout, UndefHit, UndefVerdict, Value,
    decompose, delta, evaluate, is_undef, step,
)
from .safety import (
    IntegerModeSafety, SyntacticSafety, Verdict, get_provider, safe_oracle,
    safe_syntactic,
)
from .rewrite import (
    RewriteError, RewriteStep, applicable_rules, apply_rule, apply_trace,
    normalize_unreachable, search_equiv, trace_from_text, trace_to_text,
)
from .harness import HarnessConfig, check_correctness, check_pair, observe
from .kelsey import (
    LetrecSpec, check_simplify_translation, kh_apply, kh_cs, kh_jump,
    kh_proc, kh_term, make_let, make_letrec,
)
from . import vminus

__version__ = "0.1.0"
