"""Batch command-line interface.

Subcommands: evaluate a term, replay a rewrite trace, run the
differential harness, and drive the SSA pass / translation.  Every run
prints a config header comment so results reproduce from the output
alone.

Exit codes: 0 success (eval: value or function), 1 parse/validation
error, 2 labeled error, 3 undefined-behavior hit, 4 fuel exhausted,
5 harness disagreement.
"""

import argparse
import sys

from .terms import ParseError, parse_term, print_term
from .reduction import DEFAULT_FUEL, ErrK, Function, UndefHit, Value, evaluate
from .rewrite import RewriteError, TraceError, apply_trace, trace_from_text
from .safety import get_provider
from .harness import HarnessConfig, check_correctness, check_pair
from . import vminus as vm
from .kelsey import TranslationCheckConfig, check_simplify_translation, kh_proc


def _read(path):
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _obs_exit(obs):
    if isinstance(obs, (Value, Function)):
        return 0
    if isinstance(obs, ErrK):
        return 2
    if isinstance(obs, UndefHit):
        return 3
    return 4


def cmd_eval(args):
    try:
        term = parse_term(_read(args.file))
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    print(f"; fuel={args.fuel}")
    obs = evaluate(term, args.fuel)
    print(obs)
    return _obs_exit(obs)


def cmd_rewrite(args):
    try:
        term = parse_term(_read(args.term))
        trace = trace_from_text(_read(args.trace))
    except (ParseError, RewriteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    provider = get_provider(args.safety)
    print(f"; safety={args.safety} steps={len(trace)}")
    try:
        out = apply_trace(term, trace, provider)
    except TraceError as exc:
        print(f"trace failed: {exc}", file=sys.stderr)
        return 1
    print(print_term(out))
    return 0


def cmd_harness(args):
    config = HarnessConfig(fuel=args.fuel, num_contexts=args.samples,
                           seed=args.seed, safety=args.safety)
    delta_vars = tuple(x for x in args.delta.split(",") if x) if args.delta else ()
    try:
        term = parse_term(_read(args.term))
        if args.pair:
            other = parse_term(_read(args.pair))
            print(config.header())
            report = check_pair(term, other, delta_vars, config,
                                unconditional=args.unconditional)
        else:
            trace = trace_from_text(_read(args.trace))
            print(config.header())
            report = check_correctness(term, delta_vars, trace, config)
    except (ParseError, RewriteError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.jsonl:
        print(report.to_jsonl())
    print(report.summary())
    return 0 if not report.disagreements else 5


def _vm_outcome_exit(out):
    if isinstance(out, vm.Returned):
        return 0
    if isinstance(out, vm.Errored):
        return 2
    if isinstance(out, vm.HitUnreachable):
        return 3
    return 4


def cmd_vmin(args):
    try:
        fn = vm.parse_vminus(_read(args.file))
    except (vm.VminusParseError, vm.VminusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.action == "simplify":
        out, trace = vm.simplify_function_cfg(fn)
        print(f"; simplified-blocks={','.join(trace) if trace else 'none'}")
        print(vm.print_vminus(out), end="")
        return 0
    if args.action == "run":
        try:
            ints = [int(a) for a in args.args]
        except ValueError:
            print("error: arguments must be integers", file=sys.stderr)
            return 1
        print(f"; fuel={args.fuel}")
        try:
            out = vm.eval_vminus(fn, ints, args.fuel)
        except vm.VminusError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(out)
        return _vm_outcome_exit(out)
    if args.action == "translate":
        print(print_term(kh_proc(fn)))
        return 0
    if args.action == "check83":
        if not args.args:
            print("error: check83 needs a block label", file=sys.stderr)
            return 1
        config = TranslationCheckConfig(samples=args.samples, fuel=args.fuel,
                                        seed=args.seed, depth=args.depth,
                                        width=args.width)
        print(f"; fuel={config.fuel} samples={config.samples} seed={config.seed} "
              f"depth={config.depth} width={config.width}")
        try:
            report = check_simplify_translation(fn, args.args[0], config)
        except vm.VminusError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(report.summary())
        return 0 if report.disagreements == 0 else 5
    print(f"unknown action {args.action!r}", file=sys.stderr)
    return 1


def build_parser():
    p = argparse.ArgumentParser(
        prog="ucalc",
        description="unreachable-code calculus: evaluator, rewriter, harness")
    sub = p.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eval", help="evaluate a term file (or - for stdin)")
    pe.add_argument("file", nargs="?", default="-")
    pe.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    pe.set_defaults(fn=cmd_eval)

    pr = sub.add_parser("rewrite", help="apply a rewrite trace to a term")
    pr.add_argument("term")
    pr.add_argument("trace")
    pr.add_argument("--safety", choices=("syntactic", "integer"),
                    default="syntactic")
    pr.set_defaults(fn=cmd_rewrite)

    ph = sub.add_parser("harness", help="differential check of a trace or pair")
    ph.add_argument("term")
    ph.add_argument("--trace")
    ph.add_argument("--pair", help="compare against this term instead of a trace")
    ph.add_argument("--delta", default="", help="comma-separated free variables")
    ph.add_argument("--fuel", type=int, default=10_000)
    ph.add_argument("--samples", type=int, default=20)
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--safety", choices=("syntactic", "integer"),
                    default="syntactic")
    ph.add_argument("--unconditional", action="store_true",
                    help="compare without the undefined-behavior guard")
    ph.add_argument("--jsonl", action="store_true")
    ph.set_defaults(fn=cmd_harness)

    pv = sub.add_parser("vmin", help="SSA function tools")
    pv.add_argument("action", choices=("simplify", "run", "translate", "check83"))
    pv.add_argument("file")
    pv.add_argument("args", nargs="*")
    pv.add_argument("--fuel", type=int, default=100_000)
    pv.add_argument("--samples", type=int, default=8)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--depth", type=int, default=12)
    pv.add_argument("--width", type=int, default=16)
    pv.set_defaults(fn=cmd_vmin)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "harness" and not args.pair and not args.trace:
        print("error: harness needs --trace or --pair", file=sys.stderr)
        return 1
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
