"""Command-line entry point: ``hzplan plan | oracle | bench``."""
from __future__ import annotations

import argparse
import logging
import sys

from .bench import run_benchmark
from .errors import (
    ContractViolation,
    DegenerateRegion,
    EmptyFreeSpace,
    EnumerationBudgetExceeded,
    HzPlanError,
    MergeRequired,
    NotPlottable,
    ScenarioError,
    SolverStall,
    StateInObstacle,
    Unreachable,
)
from .oracle import visibility_graph_oracle
from .planner import PlannerParams, plan
from .records import RunRecord, write_trace
from .sampling import SamplerKind
from .scenario import load_scenario

EXIT_OK = 0
EXIT_UNREACHABLE = 2
EXIT_INVALID = 3
EXIT_BUDGET = 4


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None


def _axes(text: str) -> tuple[int, int]:
    try:
        i, j = (int(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two comma-separated axis indices, e.g. 0,1") from None
    return i, j


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hzplan", description="Hybrid-zonotope motion planning.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    pl = sub.add_parser("plan", help="plan a path for a scenario file")
    pl.add_argument("scenario")
    pl.add_argument("--iters", type=_positive, default=20, help="maximum iterations (default 20)")
    pl.add_argument("--samples", type=_positive, default=100, help="samples per shared face (default 100)")
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--sampler", choices=["hit-and-run", "billiard"], default="hit-and-run")
    pl.add_argument("--max-paths", type=_positive, default=64)
    pl.add_argument("--svg", help="write an SVG picture of the run")
    pl.add_argument("--projection", type=_axes, help="axis pair for plotting 3-D scenes, e.g. 0,1")
    pl.add_argument("--trace", help="write the per-iteration trace CSV")

    orc = sub.add_parser("oracle", help="exact shortest-path cost of a 2-D scenario")
    orc.add_argument("scenario")

    be = sub.add_parser("bench", help="benchmark every scenario in a directory")
    be.add_argument("directory")
    be.add_argument("--seeds", type=_seeds, default=[0])
    be.add_argument("--samples", type=_positive, default=100)
    be.add_argument("--iters", type=_positive, default=20)
    be.add_argument("--csv", help="write per-run results as CSV")
    return p


def _cmd_plan(args) -> int:
    sc = load_scenario(args.scenario)
    params = PlannerParams(
        n_max=args.iters,
        n_samples=args.samples,
        seed=args.seed,
        sampler=SamplerKind.parse(args.sampler),
        max_paths=args.max_paths,
    )
    res = plan(sc, params)
    rec = RunRecord(sc, params, res)
    if args.trace:
        write_trace(rec, args.trace)
    if args.svg:
        from .svg import emit_svg

        emit_svg(rec, args.svg, args.projection)
    if not res.solved:
        print("status: unreachable")
        return EXIT_UNREACHABLE
    print("status: solved")
    print(f"cost: {res.best_cost!r}")
    print(f"iterations: {res.iterations}")
    print("leaves: " + " -> ".join(str(i) for i in res.best_path.leaf_sequence.leaves))
    for x in res.best_path.polyline(sc.start, sc.goal):
        print("  " + " ".join(f"{v:.6f}" for v in x))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    sc = load_scenario(args.scenario)
    print(repr(visibility_graph_oracle(sc)))
    return EXIT_OK


def _cmd_bench(args) -> int:
    params = PlannerParams(n_max=args.iters, n_samples=args.samples)
    summary = run_benchmark(args.directory, params, args.seeds)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(summary.to_csv())
    print(summary.table())
    return EXIT_OK if summary.passed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"plan": _cmd_plan, "oracle": _cmd_oracle, "bench": _cmd_bench}[args.command]
    try:
        return handler(args)
    except (Unreachable, EmptyFreeSpace) as exc:
        print(f"unreachable: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except (ScenarioError, MergeRequired, StateInObstacle, DegenerateRegion, NotPlottable, ContractViolation,
            OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (EnumerationBudgetExceeded, SolverStall) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except HzPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
