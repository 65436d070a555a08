"""Command-line front end: ``sumradii solve | gen | bench``.

Exit status: 0 on success, 2 for unreadable input or bad flags, 3 for an
infeasible configuration, 4 when an internal invariant fails.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
import traceback
from dataclasses import dataclass

from .bench import BatchSpec, brute_force_opt, diameter_cost, random_instance, ratio_report, tight_instance
from .io import ParseError, dumps_instance, instance_digest, load_instance, pair_record, rat
from .metric import InfeasibleError, InternalError, MetricInstance
from .outliers import OrderlyStructured
from .rounding import diagnose_cover
from .solver import MODES, SolveResult, solve

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    mode: str = "plain"
    guess: int = 0
    k: int | None = None
    m: int | None = None
    oracle: bool = False
    trace: bool = False
    out: str | None = None
    timestamp: bool = True


def _dual_record(dual) -> dict | None:
    if dual is None:
        return None
    return {
        "lambda": rat(dual.lam),
        "gamma": rat(dual.gamma),
        "alpha": {str(j): rat(a) for j, a in sorted(dual.alpha.items())},
    }


def solve_report(instance: MetricInstance, result: SolveResult, config: RunConfig) -> dict:
    """The report document for one solved instance."""
    sol = result.solution
    res = result.residual
    doc: dict = {
        "instance": instance_digest(instance),
        "mode": result.mode,
        "guess": result.guess,
        "short_circuit": result.short_circuit,
        "cost": rat(sol.cost),
        "diameter_cost": rat(diameter_cost(instance, sol)),
        "pairs": [pair_record(p) for p in sol.pairs],
        "assignment": {str(j): ("OUT" if c is None else c) for j, c in sorted(sol.assignment.items())},
        "outliers": list(sol.outliers),
        "guessed": [pair_record(p) for p in result.guessed],
        "guesses_tried": result.guesses_tried,
    }
    if res is not None:
        doc["dual"] = _dual_record(res.dual)
        doc["dual_objective"] = rat(res.dual_objective)
        doc["special"] = None if res.special is None else pair_record(res.special)
        doc["mu"] = rat(res.instance.mu)
        doc["case"] = res.case
        doc["tied_crossing"] = res.tied_crossing
        if isinstance(res.structure, OrderlyStructured):
            doc["orderly"] = {
                "pairs": [pair_record(p) for p in res.structure.pairs],
                "ell": res.structure.ell,
                "ell_prime": res.structure.ell_prime,
                "branch": res.structure.branch,
            }
        comps = []
        for cover in res.covers:
            diag = diagnose_cover(res.instance, cover)
            comps.append(
                {
                    "pairs": [pair_record(p) for p in cover.component],
                    "cover": pair_record(cover.pair),
                    "disjoint_sum": rat(diag.disjoint_sum),
                    "disjoint_exact": diag.exact,
                    "graph_radius": rat(diag.graph_radius),
                }
            )
        doc["components"] = comps
        if config.trace:
            doc["trace"] = _trace(res)
    if config.oracle:
        got = brute_force_opt(instance)
        doc["oracle"] = None if got is None else rat(got.cost)
        if got is not None and got.cost:
            doc["ratio"] = rat(sol.cost / got.cost)
    if config.timestamp:
        doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return doc


def _trace(res) -> list[dict]:
    rows = []
    if res.raised is not None:
        for t, step in enumerate(res.raised.trace, start=1):
            rows.append(
                {
                    "iteration": t,
                    "delta": rat(step.delta),
                    "independent": step.independent,
                    "components": step.components,
                    "objective": rat(step.objective),
                }
            )
    if res.search is not None:
        for step in res.search.trace:
            rows.append(
                {
                    "s": step.s,
                    "interval": [rat(step.lo), rat(step.hi)],
                    "breakpoints": step.breakpoints,
                    "probes": [[rat(lam), comps] for lam, comps in step.probes],
                }
            )
    return rows


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_solve(args) -> int:
    config = RunConfig(args.mode, args.guess, args.k, args.m, args.oracle, args.trace, args.out, not args.no_timestamp)
    inst = load_instance(args.instance)
    if config.k is not None or config.m is not None:
        inst = inst.with_budgets(config.k, config.m)
    if config.guess > inst.k:
        raise InfeasibleError(f"guess depth {config.guess} exceeds k = {inst.k}")
    result = solve(inst, config.mode, config.guess)
    doc = solve_report(inst, result, config)
    _emit(json.dumps(doc, indent=1, sort_keys=True) + "\n", config.out)
    if config.out is not None:
        print(f"cost {doc['cost']}  pairs {len(result.solution.pairs)}  outliers {len(result.solution.outliers)}")
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.family == "tight":
        inst = tight_instance(args.h, args.k)
    else:
        inst = random_instance(args.n, args.dim, args.k, args.m, args.L, args.seed)
    _emit(dumps_instance(inst), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = BatchSpec(
        suite=args.suite,
        n=args.n,
        dim=args.dim,
        k=args.k,
        m=args.m,
        count=args.count,
        seed=args.seed,
        mode=args.mode,
        guess=args.guess,
        oracle=args.oracle,
        lower_bound=args.L,
        hs=tuple(args.h) if args.h else (3, 4, 5, 6),
    )
    report = ratio_report(spec)
    print(report.table())
    if args.out is not None:
        doc = report.to_dict(with_time=not args.no_timestamp)
        doc["digest"] = report.digest()
        if not args.no_timestamp:
            doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sumradii", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("instance")
    p.add_argument("--mode", choices=MODES, default="plain")
    p.add_argument("--guess", type=int, default=0, help="guess depth g (the implied epsilon is 1/g)")
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--oracle", action="store_true", help="also run the exhaustive oracle")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--out")
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_solve)

    g = sub.add_parser("gen", help="write an instance file")
    g.add_argument("family", choices=("tight", "random"))
    g.add_argument("--h", type=int, default=3)
    g.add_argument("--k", type=int, default=1)
    g.add_argument("--n", type=int, default=8)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--m", type=int, default=0)
    g.add_argument("--L", type=int, help="cardinality lower bound at every center")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", help="run a batch and report ratios")
    b.add_argument("--suite", choices=("random", "tight"), default="random")
    b.add_argument("--n", type=int, default=8)
    b.add_argument("--dim", type=int, default=2)
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--m", type=int, default=0)
    b.add_argument("--count", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--mode", choices=MODES, default="plain")
    b.add_argument("--guess", type=int, default=0)
    b.add_argument("--oracle", action="store_true")
    b.add_argument("--L", type=int)
    b.add_argument("--h", type=int, nargs="*")
    b.add_argument("--out")
    b.add_argument("--no-timestamp", action="store_true")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        return EXIT_INTERNAL
    except (InfeasibleError, ValueError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
