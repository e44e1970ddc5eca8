"""Command-line front end: gen / solve / bench / sim.

All randomness flows from explicit seeds (flag, config file, or the
REPAIRSHOP_SEED environment variable); repeated invocations with the same
seeds produce byte-identical files apart from measured runtimes.  Exit
codes: 0 success, 2 invalid input or parameters, 3 solver timeout.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

from . import metrics
from .benders import executable_plan, solve_lbbd
from .dispatch import schedule_greedy
from .exact import solve_global
from .generators import (DYNAMIC_WAVES, GENERATOR_VERSION, GenParams,
                         GenerationError, gen_dynamic, gen_static,
                         load_scenario, save_scenario, shift_failure_rates)
from .model import load_instance, save_instance, validate_instance
from .plans import extract_executable_schedule
from .rng import derive_seed
from .simulate import POLICIES, SCHEDULERS, SchedulerOptions, run_simulation

SCHEDULE_FORMAT = "repairshop-schedule/1"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TIMEOUT = 3

BENCH_SOLVERS = {
    "lbbd-basic": ("lbbd", "basic", False),
    "lbbd-tight": ("lbbd", "tight", False),
    "lbbd-basic-hybrid": ("lbbd", "basic", True),
    "lbbd-tight-hybrid": ("lbbd", "tight", True),
    "oracle": ("oracle", "", False),
    "dispatch": ("dispatch", "", False),
}


def _default_seed() -> int:
    return int(os.environ.get("REPAIRSHOP_SEED", "0"))


def _load_config(path: str) -> dict:
    """Flat key = value lines; '#' starts a comment."""
    values: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    if "--config" in argv:
        at = argv.index("--config")
        config = _load_config(argv[at + 1])
        parser.set_defaults(**config)
        argv = argv[:at] + argv[at + 2:]
    return argv


# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    try:
        params = GenParams(
            aircraft_count=int(args.aircraft),
            trade_count=int(args.trades),
            wave_count=int(args.waves),
            seed=int(args.seed),
            mode=args.mode,
            deterioration_pct=float(args.gamma),
            horizon_factor=float(args.horizon_factor),
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out) if args.out else Path(f"{params.label}.json")
    if out.is_dir():
        out = out / f"{params.label}.json"
    try:
        if params.mode == "static":
            instance = gen_static(params)
            problems = validate_instance(instance)
            if problems:
                print("generated instance failed validation:", file=sys.stderr)
                for p in problems:
                    print(f"  - {p}", file=sys.stderr)
                return EXIT_USAGE
            save_instance(instance, out)
        else:
            save_scenario(gen_dynamic(params), out)
    except GenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sidecar = out.with_suffix(".meta.json")
    with open(sidecar, "w") as fh:
        json.dump({
            "generator_version": GENERATOR_VERSION,
            "mode": params.mode,
            "aircraft_count": params.aircraft_count,
            "trade_count": params.trade_count,
            "wave_count": DYNAMIC_WAVES if params.mode == "dynamic" else params.wave_count,
            "seed": params.seed,
            "deterioration_pct": params.deterioration_pct,
            "horizon_factor": params.horizon_factor,
        }, fh, indent=2)
        fh.write("\n")
    print(f"wrote {out} (+ {sidecar.name})")
    return EXIT_OK


# ---------------------------------------------------------------------------

def _solve_one(instance, solver: str, variant: str, hybrid: bool, budget: float | None):
    """Returns (status, objective, plan|None, report|None, solution|None)."""
    if solver == "dispatch":
        greedy = schedule_greedy(instance)
        return "heuristic", greedy.objective, greedy.plan(instance), None, None
    if solver == "oracle":
        solution = solve_global(instance, budget=budget)
        plan = extract_executable_schedule(instance, solution.assignment, solution.schedules)
        return solution.status, solution.objective, plan, None, solution
    report = solve_lbbd(instance, variant=variant, hybrid=hybrid, budget=budget)
    plan = executable_plan(instance, report) if report.status == "optimal" else None
    return report.status, report.objective, plan, report, None


def _write_schedule(path, solver: str, status: str, objective, plan) -> None:
    doc = {
        "version": SCHEDULE_FORMAT,
        "solver": solver,
        "status": status,
        "objective": objective,
    }
    if plan is not None:
        doc["assignment"] = {str(j): i for j, i in sorted(plan.assignment.due_index.items())}
        doc["ready"] = {str(j): t for j, t in sorted(plan.job_ready.items())}
        doc["trades"] = [
            {
                "trade_id": trade_id,
                "ops": [
                    {"job_id": op.job_id, "start": op.start, "end": op.end,
                     "capacity_demand": op.capacity_demand}
                    for op in ops
                ],
            }
            for trade_id, ops in sorted(plan.trade_ops.items())
        ]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def cmd_solve(args) -> int:
    try:
        instance = load_instance(args.instance)
    except Exception as exc:
        print(f"error: cannot read instance: {exc}", file=sys.stderr)
        return EXIT_USAGE
    problems = validate_instance(instance)
    if problems:
        print("invalid instance:", file=sys.stderr)
        for p in problems:
            print(f"  - {p}", file=sys.stderr)
        return EXIT_USAGE

    budget = float(args.budget) if args.budget is not None else None
    t0 = time.perf_counter()
    status, objective, plan, report, _ = _solve_one(
        instance, args.solver, args.variant, args.hybrid, budget)
    elapsed = time.perf_counter() - t0

    print(f"solver     : {args.solver}"
          + (f" ({args.variant}{'+hybrid' if args.hybrid else ''})" if args.solver == "lbbd" else ""))
    print(f"status     : {status}")
    print(f"objective  : {objective}")
    if report is not None:
        total = report.time_master + report.time_sub
        master_pct = 100.0 * report.time_master / total if total else 0.0
        print(f"iterations : {report.iterations}")
        print(f"cuts       : {report.cuts_added}")
        print(f"time split : master {master_pct:.1f}% / sub {100 - master_pct:.1f}%")
    print(f"runtime    : {elapsed:.3f}s")
    if args.schedule_out:
        _write_schedule(args.schedule_out, args.solver, status, objective, plan)
        print(f"schedule   : {args.schedule_out}")
    return EXIT_TIMEOUT if status == "timeout" else EXIT_OK


# ---------------------------------------------------------------------------

def cmd_bench(args) -> int:
    solver_specs = [s.strip() for s in args.solvers.split(",") if s.strip()]
    for spec in solver_specs:
        if spec not in BENCH_SOLVERS:
            print(f"error: unknown solver spec {spec!r}; choose from "
                  f"{', '.join(sorted(BENCH_SOLVERS))}", file=sys.stderr)
            return EXIT_USAGE
    paths = sorted(Path(p) for p in args.instances)
    budget = float(args.budget) if args.budget is not None else None
    rows = []
    for path in paths:
        try:
            instance = load_instance(path)
            problems = validate_instance(instance)
            if problems:
                raise ValueError("; ".join(problems))
        except Exception as exc:
            for spec in solver_specs:
                rows.append([path.stem, spec, "error", "", "", "", "", "", str(exc)])
            continue
        for spec in solver_specs:
            solver, variant, hybrid = BENCH_SOLVERS[spec]
            t0 = time.perf_counter()
            try:
                status, objective, _, report, _ = _solve_one(
                    instance, solver, variant, hybrid, budget)
                elapsed = time.perf_counter() - t0
                iters = report.iterations if report else ""
                cuts = report.cuts_added if report else ""
                if report and (report.time_master + report.time_sub) > 0:
                    master_pct = 100.0 * report.time_master / (report.time_master + report.time_sub)
                    split = f"{master_pct:.1f}"
                else:
                    split = ""
                rows.append([path.stem, spec, status, objective,
                             f"{elapsed:.4f}", iters, cuts, split, ""])
            except Exception as exc:  # isolate per-row failures, keep the sweep running
                rows.append([path.stem, spec, "error", "",
                             f"{time.perf_counter() - t0:.4f}", "", "", "", str(exc)])
    header = ["instance", "solver", "status", "objective", "runtime_s",
              "iterations", "cuts", "master_pct", "error"]
    with open(args.out, "w", newline="") as fh:
        fh.write("# schema: repairshop-bench/1\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {args.out} ({len(rows)} rows)")
    if args.summarize:
        by_solver: dict[str, list[float]] = {}
        for row in rows:
            if row[2] not in ("error",) and row[4]:
                by_solver.setdefault(row[1], []).append(float(row[4]))
        for spec in sorted(by_solver):
            times = by_solver[spec]
            print(f"{spec:>20}: mean runtime {sum(times) / len(times):.4f}s over {len(times)}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def _sim_cells(args):
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    schedulers = [s.strip() for s in args.schedulers.split(",") if s.strip()]
    for p in policies:
        if p not in POLICIES:
            raise ValueError(f"unknown policy {p!r}")
    for s in schedulers:
        if s not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {s!r}")
    return policies, schedulers


def cmd_sim(args) -> int:
    try:
        policies, schedulers = _sim_cells(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    master_seed = int(args.seed)
    budget = float(args.budget) if args.budget is not None else None
    reps = int(args.reps)
    options = SchedulerOptions(variant=args.variant, hybrid=args.hybrid,
                               late_mode=not args.no_late_mode)
    scenarios = []
    for path in sorted(Path(p) for p in args.scenarios):
        scenario = load_scenario(path)
        if args.lambda_shift:
            scenario = shift_failure_rates(scenario, float(args.lambda_shift))
        scenarios.append(scenario)

    work = [
        (scenario, rep, policy, scheduler)
        for scenario in scenarios
        for rep in range(1, reps + 1)
        for policy in policies
        for scheduler in schedulers
    ]
    records = []
    for scenario, rep, policy, scheduler in work:
        run_seed = derive_seed(master_seed, scenario.label, rep)
        trace = run_simulation(scenario, policy, scheduler=scheduler, seed=run_seed,
                               per_decision_budget=budget, options=options)
        records.append(metrics.TraceRecord(instance_id=scenario.label,
                                           replication=rep, trace=trace))
    config = {
        "seed": master_seed, "reps": reps, "budget": budget,
        "policies": ",".join(policies), "schedulers": ",".join(schedulers),
        "variant": options.variant, "hybrid": options.hybrid,
        "late_mode": options.late_mode, "lambda_shift": args.lambda_shift or 0.0,
        "scenarios": ",".join(s.label for s in scenarios),
    }
    if args.trace_out:
        metrics.write_trace_csv(args.trace_out, records, config)
        print(f"wrote {args.trace_out} ({len(records)} runs)")
    cells = metrics.summarize(records)
    if args.summary_out:
        metrics.write_summary_csv(args.summary_out, cells, config)
        print(f"wrote {args.summary_out} ({len(cells)} cells)")
    for cell in cells:
        print(f"{cell.policy:>4} {cell.scheduler:>9}: coverage28 "
              f"{cell.coverage_mean:.3f} [{cell.coverage_var:.4f}] rho {cell.rho_mean:.3f}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repairshop",
        description="Repair-shop scheduling: generate, solve, benchmark, simulate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance or scenario")
    gen.add_argument("--mode", choices=["static", "dynamic"], default="static")
    gen.add_argument("--aircraft", required=True)
    gen.add_argument("--trades", default=3)
    gen.add_argument("--waves", default=3)
    gen.add_argument("--seed", default=_default_seed())
    gen.add_argument("--gamma", default=5.0, help="deterioration percent per flight")
    gen.add_argument("--horizon-factor", default=1.2)
    gen.add_argument("--out", default=None)
    gen.add_argument("--config", help="key = value defaults file")
    gen.set_defaults(func=cmd_gen)

    solve = sub.add_parser("solve", help="solve one static instance")
    solve.add_argument("instance")
    solve.add_argument("--solver", choices=["lbbd", "oracle", "dispatch"], default="lbbd")
    solve.add_argument("--variant", choices=["basic", "tight"], default="tight")
    solve.add_argument("--hybrid", action="store_true")
    solve.add_argument("--budget", default=None, help="seconds per solve")
    solve.add_argument("--schedule-out", default=None)
    solve.add_argument("--config")
    solve.set_defaults(func=cmd_solve)

    bench = sub.add_parser("bench", help="sweep solvers over instance files")
    bench.add_argument("instances", nargs="+")
    bench.add_argument("--solvers", default="lbbd-tight-hybrid,oracle,dispatch")
    bench.add_argument("--budget", default=None)
    bench.add_argument("--out", required=True)
    bench.add_argument("--summarize", action="store_true")
    bench.add_argument("--config")
    bench.set_defaults(func=cmd_bench)

    sim = sub.add_parser("sim", help="simulation campaign over scenarios")
    sim.add_argument("scenarios", nargs="+")
    sim.add_argument("--policies", default="P11,P31,P33")
    sim.add_argument("--schedulers", default="lbbd,dispatch")
    sim.add_argument("--reps", default=20)
    sim.add_argument("--budget", default=5.0, help="seconds per scheduling decision")
    sim.add_argument("--seed", default=_default_seed())
    sim.add_argument("--variant", choices=["basic", "tight"], default="tight")
    sim.add_argument("--hybrid", action="store_true", default=True)
    sim.add_argument("--no-late-mode", action="store_true",
                     help="exhaustive scheduler places work early instead of late")
    sim.add_argument("--lambda-shift", default=0.0,
                     help="add this to every failure rate at scenario load")
    sim.add_argument("--trace-out", default=None)
    sim.add_argument("--summary-out", default=None)
    sim.add_argument("--config")
    sim.set_defaults(func=cmd_sim)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
