"""Decomposition driver: master assignment, per-trade feasibility, cuts.

Each iteration solves the due-date assignment master, then checks every
trade's scheduling sub-problem for the proposed assignment.  Feasible
everywhere means the assignment is globally optimal (the master maximises
over a relaxed feasible set that contains all globally feasible
assignments).  Otherwise each infeasible trade contributes one cut --
recording the current due-date index of every job on the trade -- and the
master is solved again.  Cuts strictly shrink the finite assignment
space, so the loop terminates.

Four variants: relaxation "basic" or "tight", optionally seeded with the
dispatch heuristic's objective as a starting lower bound ("hybrid"); all
return the same objective, differing only in work done.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .dispatch import schedule_greedy
from .expectation import CoverageEvaluator, DueDateAssignment, FlowPlan
from .master import BendersCut, cut_violated, solve_master
from .model import StaticInstance, validate_instance
from .plans import extract_executable_schedule, trade_demands
from .rssp import TradeSchedule, solve_rssp_cached

ITERATION_CAP = 10_000  # safety valve beneath the time budget
MASTER_POOL = 100       # optimal-tied assignments collected per master search


@dataclass
class LbbdReport:
    status: str  # "optimal" | "timeout"
    assignment: DueDateAssignment | None
    schedules: dict[int, TradeSchedule] | None
    flow: FlowPlan | None
    objective: int | None
    iterations: int
    cuts_added: int
    cuts: list[BendersCut] = field(default_factory=list)
    time_master: float = 0.0
    time_sub: float = 0.0
    master_objectives: list[int] = field(default_factory=list)


def solve_lbbd(instance: StaticInstance,
               variant: str = "tight",
               hybrid: bool = False,
               budget: float | None = None,
               iteration_cap: int = ITERATION_CAP,
               evaluator: CoverageEvaluator | None = None) -> LbbdReport:
    """Run the decomposition to optimality or until the budget runs out.

    A timeout leaves no executable schedule (the master's incumbent has not
    passed the sub-problems); callers that need a schedule regardless fall
    back to the dispatch heuristic.
    """
    problems = validate_instance(instance)
    if problems:
        raise ValueError("invalid instance: " + "; ".join(problems))
    evaluator = evaluator or CoverageEvaluator(instance)
    deadline = None if budget is None else time.monotonic() + budget

    lower_bound = 0
    if hybrid:
        lower_bound = schedule_greedy(instance, evaluator=evaluator).objective

    cuts: list[BendersCut] = []          # every cut generated, for reporting
    active_cuts: list[BendersCut] = []   # minus ones subsumed by later cuts
    master_objectives: list[int] = []
    time_master = 0.0
    time_sub = 0.0

    def out_of_time() -> bool:
        return deadline is not None and time.monotonic() > deadline

    previous_objective: int | None = None
    iteration = 0
    while iteration < iteration_cap:
        remaining = None if deadline is None else max(deadline - time.monotonic(), 0.0)
        t0 = time.perf_counter()
        # cuts only shrink the feasible set, so the previous master optimum
        # is a valid objective floor; searching at the floor first lets the
        # optimistic bound discard almost the whole tree
        if previous_objective is not None and previous_objective > lower_bound:
            result = solve_master(instance, active_cuts, variant=variant,
                                  lower_bound=previous_objective, budget=remaining,
                                  evaluator=evaluator, pool_size=MASTER_POOL)
            if result.status == "infeasible":  # the optimum dropped below the floor
                remaining = None if deadline is None else max(deadline - time.monotonic(), 0.0)
                result = solve_master(instance, active_cuts, variant=variant,
                                      lower_bound=lower_bound, budget=remaining,
                                      evaluator=evaluator, pool_size=MASTER_POOL)
        else:
            result = solve_master(instance, active_cuts, variant=variant,
                                  lower_bound=lower_bound, budget=remaining,
                                  evaluator=evaluator, pool_size=MASTER_POOL)
        time_master += time.perf_counter() - t0
        if result.status == "infeasible":
            raise RuntimeError(
                "master infeasible: the heuristic lower bound is achievable by "
                "construction, so this indicates a bug or an assignment space "
                "emptied by an over-strong relaxation"
            )
        if result.status == "timeout" or out_of_time():
            return LbbdReport("timeout", None, None, None, None, max(iteration, 1),
                              len(cuts), cuts, time_master, time_sub,
                              master_objectives)
        previous_objective = result.solution.objective

        # each pool entry is a master argmax at the moment it is tested:
        # its objective equals the current optimum and it satisfies every
        # cut (in-tree for old ones, checked here for this batch's)
        batch: list[BendersCut] = []
        for candidate in result.pool:
            if any(cut_violated(candidate, c) for c in batch):
                continue
            iteration += 1
            master_objectives.append(result.solution.objective)
            t0 = time.perf_counter()
            schedules: dict[int, TradeSchedule] = {}
            infeasible_trades: list[int] = []
            for trade in instance.trades:
                demands, background = trade_demands(instance, candidate, trade.id)
                sub = solve_rssp_cached(trade.capacity, demands, background, False)
                if sub.feasible:
                    schedules[trade.id] = TradeSchedule(trade_id=trade.id,
                                                        entries=sub.schedule.entries)
                else:
                    infeasible_trades.append(trade.id)
            time_sub += time.perf_counter() - t0

            if not infeasible_trades:
                assignment = DueDateAssignment(dict(candidate))
                flow = evaluator.flow_plan(assignment)
                return LbbdReport("optimal", assignment, schedules,
                                  flow, flow.objective, iteration,
                                  len(cuts), cuts, time_master, time_sub,
                                  master_objectives)
            for trade_id in infeasible_trades:
                ceiling = {j.id: candidate[j.id]
                           for j in instance.jobs_on_trade(trade_id)}
                cut = BendersCut(trade_id=trade_id, ceiling=ceiling)
                cuts.append(cut)
                batch.append(cut)
                # drop active cuts whose forbidden region the new one contains
                active_cuts = [
                    c for c in active_cuts
                    if not (c.trade_id == trade_id
                            and all(c.ceiling[j] <= ceiling[j] for j in c.ceiling))
                ]
                active_cuts.append(cut)
            if out_of_time() or iteration >= iteration_cap:
                return LbbdReport("timeout", None, None, None, None, iteration,
                                  len(cuts), cuts, time_master, time_sub,
                                  master_objectives)

    return LbbdReport("timeout", None, None, None, None, iteration_cap,
                      len(cuts), cuts, time_master, time_sub, master_objectives)


def executable_plan(instance: StaticInstance, report: LbbdReport):
    """Committed schedule for an optimal report (sentinel jobs post-horizon)."""
    if report.status != "optimal":
        raise ValueError("only optimal reports carry a schedulable solution")
    return extract_executable_schedule(instance, report.assignment, report.schedules)
