"""Command-line interface.

Exit codes: 0 success, 1 usage, 2 parse/validation, 3 solver budget,
4 internal consistency failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import bench, rows_to_csv
from .core import validate_model
from .errors import (
    BudgetExceeded,
    ConsistencyFailure,
    NonNormalForm,
    ParseError,
    UnsupportedShape,
    ValidationError,
)
from .fixtures import FIXTURES
from .ground import ENGINES, EngineConfig
from .modelfile import (
    dumps_json,
    parse_model,
    reduction_map_from_json,
    reduction_map_to_json,
    result_to_json,
    serialize_model,
)
from .pipeline import conditional_ua_solve, solve
from .reduction import render_trace, simplify
from .shattering import shatter


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _read_model(path: str):
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uar", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model")

    p = sub.add_parser("shatter", help="print the completely shattered model")
    p.add_argument("model")
    p.add_argument("--out", default=None)
    p.add_argument("--map-out", default=None, help="write the rename map as JSON")

    p = sub.add_parser("simplify", help="detect uniform assignments and reduce")
    p.add_argument("model")
    p.add_argument("--trace", action="store_true", help="print pipeline stage rows")
    p.add_argument("--out", default=None, help="write the reduced model")
    p.add_argument("--map-out", default=None, help="write the reduction map as JSON")

    p = sub.add_parser("solve", help="solve the MPE task")
    p.add_argument("model")
    p.add_argument("--engine", choices=sorted(ENGINES), default="ve")
    p.add_argument("--no-uar", action="store_true")
    p.add_argument("--condition", default=None, metavar="PRED")
    p.add_argument("--simplified", default=None, help="pre-reduced model file")
    p.add_argument("--map", default=None, help="reduction map JSON for --simplified")
    p.add_argument("--enum-budget", type=int, default=None)
    p.add_argument("--table-budget", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("gen-random", help="generate a seeded random model")
    p.add_argument("--parfactors", type=int, required=True)
    p.add_argument("--domain", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("bench", help="benchmark solves over models")
    p.add_argument("files", nargs="*")
    p.add_argument("--fixture", choices=sorted(FIXTURES), default=None)
    p.add_argument("--sizes", default="5,10,25,50", help="domain sizes for --fixture")
    p.add_argument("--engines", default="ve")
    p.add_argument("--uar", choices=["on", "off", "both"], default="both")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--out", default=None)
    return parser


def _cmd_validate(args) -> int:
    report = validate_model(_read_model(args.model))
    print(report)
    return 0 if report.ok else 2


def _cmd_shatter(args) -> int:
    shattered, smap = shatter(_read_model(args.model))
    _write(args.out, serialize_model(shattered))
    if args.map_out:
        renames = {fresh.name: orig.name for fresh, orig in smap.renames.items()}
        _write(args.map_out, json.dumps({"renames": renames}, indent=2) + "\n")
    return 0


def _cmd_simplify(args) -> int:
    model = _read_model(args.model)
    shattered, smap = shatter(model)
    sim = simplify(shattered, trace=args.trace)
    if args.trace:
        print(render_trace(sim.detection.trace))
        print()
    print("anchored formulas:")
    seen = set()
    for g in sim.detection.terminal:
        for atom in g.atoms:
            if atom.pred not in seen:
                seen.add(atom.pred)
                print(f"  {atom}")
    reducible = ", ".join(f.pred.name for f in sim.formulas) or "none"
    print(f"reducible: {reducible}")
    print()
    out_text = serialize_model(sim.model)
    if args.out:
        _write(args.out, out_text)
    else:
        sys.stdout.write(out_text)
    if args.map_out:
        _write(args.map_out, dumps_json(reduction_map_to_json(sim.reduction_map, smap)))
    return 0


def _engine_config(args) -> EngineConfig | None:
    if args.enum_budget is None and args.table_budget is None:
        return None
    config = EngineConfig()
    if args.enum_budget is not None:
        config.enum_budget = args.enum_budget
    if args.table_budget is not None:
        config.table_budget = args.table_budget
    return config


def _cmd_solve(args) -> int:
    model = _read_model(args.model)
    config = _engine_config(args)
    if args.condition:
        result = conditional_ua_solve(model, args.condition, engine=args.engine, config=config)
    elif args.simplified:
        if not args.map:
            raise SystemExit(1)
        reduced = _read_model(args.simplified)
        with open(args.map, encoding="utf-8") as fh:
            data = json.load(fh)
        rmap, smap = reduction_map_from_json(model, reduced, data)
        from .ground import model_weight
        from .pipeline import _check_weights, _lifted_blocks

        res = ENGINES[args.engine](reduced, config)
        assignment = smap.to_original_assignment(rmap.expand(res.assignment))
        weight = model_weight(model, assignment)
        _check_weights(res.log_weight, weight, "solve --simplified")
        res.assignment, res.log_weight = assignment, weight
        res.lifted = _lifted_blocks(rmap, res.assignment, smap)
        result = res
    else:
        result = solve(model, engine=args.engine, use_uar=not args.no_uar, config=config)
    _write(args.out, dumps_json(result_to_json(result)))
    return 0


def _cmd_gen_random(args) -> int:
    from .randgen import gen_random

    model = gen_random(args.parfactors, args.domain, args.seed)
    _write(args.out, serialize_model(model))
    return 0


def _cmd_bench(args) -> int:
    sources = []
    for path in args.files:
        try:
            with open(path, encoding="utf-8") as fh:
                sources.append((path, fh.read()))
        except OSError as e:
            print(f"uar: cannot read {path}: {e}", file=sys.stderr)
            return 1
    if args.fixture:
        for size in args.sizes.split(","):
            size = int(size)
            sources.append((f"{args.fixture}[{size}]", FIXTURES[args.fixture](size)))
    if not sources:
        print("uar: bench needs model files or --fixture", file=sys.stderr)
        return 1
    engines = [e.strip() for e in args.engines.split(",") if e.strip()]
    for e in engines:
        if e not in ENGINES:
            print(f"uar: unknown engine {e!r}", file=sys.stderr)
            return 1
    uar_flags = {"on": (True,), "off": (False,), "both": (True, False)}[args.uar]
    rows = bench(sources, engines=engines, uar_flags=uar_flags, repetitions=args.reps)
    _write(args.out, rows_to_csv(rows))
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "shatter": _cmd_shatter,
    "simplify": _cmd_simplify,
    "solve": _cmd_solve,
    "gen-random": _cmd_gen_random,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as e:
        print(f"uar: {e}", file=sys.stderr)
        return 1
    except ParseError as e:
        print(f"uar: {e}", file=sys.stderr)
        return 2
    except (ValidationError, NonNormalForm, UnsupportedShape) as e:
        print(f"uar: {e}", file=sys.stderr)
        return 2
    except BudgetExceeded as e:
        print(f"uar: {e}", file=sys.stderr)
        return 3
    except ConsistencyFailure as e:
        print(f"uar: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
