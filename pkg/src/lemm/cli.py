"""Command-line front end: ``lemm check|solve|decide|verify|reduce|bench``.

Output is JSON with sorted keys and rationals as ``"p/q"`` strings.
Exit codes: 0 completed, 2 unknown verdict, 3 input error, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from fractions import Fraction

from .conditions import Status, _jsonable, check_conditions
from .core import (DecisionQuery, InstanceError, format_fraction, parse_system,
                   system_from_document, system_to_document, to_fraction,
                   verify_certificate)
from .reductions import (mlp_to_lemm, normalize_sum_to_1, parse_dimacs,
                         parse_mlp, partition_to_lemm, sat_to_condition_instance,
                         to_min_only)
from .solvers import (BudgetExceeded, decide, solve_auto, solve_enumerate,
                      solve_lp_one_type, solve_value_iteration)

EXIT_OK, EXIT_UNKNOWN, EXIT_INPUT, EXIT_BUDGET = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags, which would read as "unknown"
    def error(self, message):
        raise UsageError(message)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc.strerror}") from None


def _json(text: str, what: str):
    try:
        return json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed {what}: {exc}") from None


def _rational(text: str) -> Fraction:
    try:
        return to_fraction(text)
    except InstanceError:
        raise UsageError(f"not a rational number: {text!r}") from None


def _dump(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True)


def _vector(values) -> list:
    return [format_fraction(Fraction(v)) for v in values]


# -- commands --------------------------------------------------------------------------

def cmd_check(args):
    system = parse_system(_read(args.input))
    wanted = [c.strip() for c in args.conditions.split(",") if c.strip()]
    report = check_conditions(system, wanted, args.sample_budget, args.product_depth, args.seed)
    return report.to_json(), EXIT_UNKNOWN if report.any_unknown else EXIT_OK


def _outcome_doc(outcome):
    doc = {"status": outcome.status, "infinite": outcome.infinite,
           "solutions": [_vector(s.values) for s in outcome.solutions]}
    if outcome.status == "unique":
        doc["x"] = _vector(outcome.solution.values)
    if outcome.strategy is not None:
        doc["strategy"] = list(outcome.strategy)
    return doc


def cmd_solve(args):
    system = parse_system(_read(args.input))
    if args.method == "enumerate":
        return _outcome_doc(solve_enumerate(system, jobs=args.jobs)), EXIT_OK
    if args.method == "lp":
        sol = solve_lp_one_type(system)
        return {"status": "unique", "x": _vector(sol.values), "verified": sol.verified}, EXIT_OK
    if args.method == "vi":
        approx = solve_value_iteration(system, epsilon=float(args.epsilon))
        doc = {"x": _vector(approx.values), "error_bound": format_fraction(Fraction(approx.error_bound)),
               "iterations": approx.iterations, "converged": approx.converged,
               "weights": _vector(approx.weights)}
        return doc, EXIT_OK if approx.converged else EXIT_UNKNOWN
    report = check_conditions(system, ["c1"], args.sample_budget, args.product_depth, args.seed)
    doc = _outcome_doc(solve_auto(system, jobs=args.jobs, c1=report.c1))
    doc["c1"] = report.c1.status.value
    return doc, EXIT_OK


def cmd_decide(args):
    system = parse_system(_read(args.input))
    query = DecisionQuery(args.index, args.beta)
    result = decide(system, query, jobs=args.jobs)
    doc = {"answer": result.answer}
    if result.witness is not None:
        doc["witness"] = _vector(result.witness)
    if result.reason:
        doc["reason"] = result.reason
    if result.answer == "unknown":
        return doc, EXIT_BUDGET if result.budget_exceeded else EXIT_UNKNOWN
    return doc, EXIT_OK


def cmd_verify(args):
    system = parse_system(_read(args.input))
    x = _json(args.x, "vector")
    if not isinstance(x, list):
        raise InstanceError("--x must be a JSON array")
    x = [to_fraction(v) for v in x]
    if len(x) != system.n:
        raise InstanceError(f"--x has length {len(x)}, expected {system.n}")
    return verify_certificate(system, x), EXIT_OK


def cmd_reduce(args):
    text = _read(args.input)
    meta = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.kind == "partition":
            a = _json(text, "partition input")
            if not isinstance(a, list):
                raise InstanceError("partition input must be a JSON integer array")
            system = partition_to_lemm(a)
        elif args.kind == "sumto1":
            system = normalize_sum_to_1(parse_system(text))
        elif args.kind == "minonly":
            source = parse_system(text)
            system = to_min_only(source, check=True)
            meta["index_map"] = [i if i <= source.n1 else i + source.n
                                 for i in range(1, source.n + 1)]
        elif args.kind == "sat":
            system = sat_to_condition_instance(parse_dimacs(text))
        else:
            try:
                layers, row, offset = parse_mlp(_json(text, "network"))
                net = mlp_to_lemm(layers, row, offset)
            except (KeyError, TypeError, AttributeError) as exc:
                raise InstanceError(f"malformed network: {exc}") from None
            system = net.system
            meta["output"] = net.output
            meta["inputs"] = list(net.inputs)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
        meta.setdefault("warnings", []).append(str(w.message))
    doc = system_to_document(system)
    if meta:
        doc["meta"] = meta
    # the emitted document must load back unchanged
    assert system_from_document(_json(json.dumps(doc), "document")) == system
    return doc, EXIT_OK


def cmd_bench(args):
    system = parse_system(_read(args.input))
    t0 = time.perf_counter()
    report = check_conditions(system, ["c1", "c2", "c3", "c4"], args.sample_budget,
                              args.product_depth, args.seed)
    t1 = time.perf_counter()
    outcome = solve_auto(system, jobs=args.jobs, c1=report.c1)
    t2 = time.perf_counter()
    print(f"check {t1 - t0:.6f}s solve {t2 - t1:.6f}s", file=sys.stderr)
    return {"conditions": report.to_json(), "solve": _outcome_doc(outcome)}, EXIT_OK


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lemm", description="Exact tools for linear equations with min and max.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, search=True):
        p.add_argument("input", help="input file, or - for stdin")
        p.add_argument("-o", "--output", help="write the result here instead of stdout")
        p.add_argument("--jobs", type=int, default=1)
        if search:
            p.add_argument("--sample-budget", type=int, default=1000)
            p.add_argument("--product-depth", type=int, default=8)
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("check", help="condition report")
    common(p)
    p.add_argument("--conditions", default="c1,c2,c3,c4")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="exact or approximate solution")
    common(p)
    p.add_argument("--method", choices=["auto", "enumerate", "lp", "vi"], default="auto")
    p.add_argument("--epsilon", type=_rational, default=Fraction(1, 10 ** 9))
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("decide", help="is some solution below the threshold?")
    common(p, search=False)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--beta", type=_rational, required=True)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("verify", help="check a candidate solution")
    common(p, search=False)
    p.add_argument("--x", required=True, help="JSON array of rationals")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reduce", help="emit a reduction instance")
    p.add_argument("kind", choices=["partition", "sumto1", "minonly", "sat", "mlp"])
    common(p, search=False)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("bench", help="timed check and solve; timings on stderr")
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be at least 1")
        doc, code = args.func(args)
    except UsageError as exc:
        print(f"lemm: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InstanceError as exc:
        print(f"lemm: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"lemm: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    text = _dump(doc) + "\n"
    if args.output:
        try:
            with open(args.output, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"lemm: cannot write {args.output}: {exc.strerror}", file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
