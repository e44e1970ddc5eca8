"""Exhaustive reference solver for the static problem.

Searches the full due-date assignment space depth-first, accepting a leaf
only when every trade's scheduling sub-problem is feasible, and returns
the best coverage objective.  This is the ground truth the decomposition
solver is tested against, and it doubles as the simulator's "complete
model" scheduler role: the search carries an incumbent (seeded with the
always-feasible all-sentinel assignment and the dispatch solution), so a
timeout still yields a complete executable schedule.

Pruning never changes the result: the optimistic bound dominates every
completion, and branches are cut only when the work already due within
some wave prefix provably cannot fit (which makes every completion's
sub-problem infeasible).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .dispatch import schedule_greedy
from .expectation import CoverageEvaluator, DueDateAssignment, FlowPlan
from .master import _MasterSearch, _TradeState, maximize_lateness
from .model import StaticInstance, validate_instance
from .plans import solve_assignment_schedules
from .rssp import TradeSchedule


class EnumerationCapError(RuntimeError):
    """Refused: the assignment space exceeds the configured cap."""


def enumerate_assignments(instance: StaticInstance, visitor, cap: int = 4_000_000) -> int:
    """Visit every complete due-date assignment exactly once.

    ``visitor`` receives a dict {job id -> due index}; the dict is reused
    between calls, so copy it if you keep it.  Returns the number of
    assignments visited.
    """
    b_index = instance.due_dates.b_index
    total = b_index ** len(instance.jobs)
    if total > cap:
        raise EnumerationCapError(f"{total} assignments exceed cap {cap}")
    jobs = [j.id for j in instance.jobs]
    current: dict[int, int] = {}
    count = 0

    def walk(depth: int) -> None:
        nonlocal count
        if depth == len(jobs):
            visitor(current)
            count += 1
            return
        for idx in range(1, b_index + 1):
            current[jobs[depth]] = idx
            walk(depth + 1)

    walk(0)
    return count


@dataclass
class GlobalSolution:
    status: str  # "optimal" | "timeout"
    assignment: DueDateAssignment
    schedules: dict[int, TradeSchedule]
    flow: FlowPlan
    objective: int


def solve_global(instance: StaticInstance,
                 budget: float | None = None,
                 late_mode: bool = False,
                 use_bound: bool = True,
                 evaluator: CoverageEvaluator | None = None) -> GlobalSolution:
    """Best coverage over all assignments with feasible repair schedules.

    ``late_mode`` re-derives the witness schedules with operations placed
    as late as their deadlines allow (the objective is unaffected); it
    emulates complete solvers that do not favour early starts.
    ``use_bound`` disables optimistic-bound pruning for bound-admissibility
    tests.
    """
    problems = validate_instance(instance)
    if problems:
        raise ValueError("invalid instance: " + "; ".join(problems))
    evaluator = evaluator or CoverageEvaluator(instance)
    search = _MasterSearch(instance, evaluator)
    trade_states = {t.id: _TradeState(instance, t.id, search) for t in instance.trades}
    job_trades = [[trade_states[op.trade_id] for op in j.operations] for j in search.jobs]
    b_index = search.b_index

    # incumbent: all-sentinel is always feasible; the dispatch schedule is
    # usually much better and costs microseconds
    best_assignment = {j.id: b_index for j in instance.jobs}
    best_obj = evaluator.objective(DueDateAssignment(best_assignment))
    greedy = schedule_greedy(instance, evaluator=evaluator)
    if greedy.objective > best_obj:
        best_obj = greedy.objective
        best_assignment = dict(greedy.assignment.due_index)

    deadline = None if budget is None else time.monotonic() + budget
    indices = [0] * len(search.jobs)
    node_count = 0
    timed_out = False

    def feasible_everywhere(leaf: dict[int, int]) -> bool:
        return solve_assignment_schedules(instance, leaf) is not None

    last_depth = len(search.jobs)
    token_stack = [[None] * len(jt) for jt in job_trades]
    dates = search.dates

    def try_leaf(obj: int) -> None:
        nonlocal best_obj, best_assignment
        leaf = {j.id: indices[search.job_pos[j.id]] for j in search.jobs}
        # the latest equal-coverage representative is easier to schedule,
        # and feasible whenever the original leaf is
        leaf = maximize_lateness(instance, evaluator, leaf, obj)
        if feasible_everywhere(leaf):
            best_obj = obj
            best_assignment = leaf

    def descend(depth: int) -> None:
        nonlocal node_count, timed_out
        node_count += 1
        if deadline is not None and node_count % 1024 == 0 and time.monotonic() > deadline:
            timed_out = True
            return
        trades = job_trades[depth]
        tokens = token_stack[depth]
        at_leaf = depth + 1 == last_depth
        for index in search.values[depth]:
            date = dates[index - 1]
            indices[depth] = index
            # prefix-area pruning: assigned work due within a wave prefix
            # already over capacity makes every completion infeasible
            ok = True
            for i, ts in enumerate(trades):
                tokens[i], fits = ts.place(depth, date)
                if not fits:
                    ok = False
            bound_token = search.assign_type_counts(depth, index)
            if ok:
                bound = search.bound()
                if use_bound and bound <= best_obj:
                    ok = False
                elif at_leaf:
                    # everything assigned: the bound is the exact objective
                    if bound > best_obj:
                        try_leaf(bound)
                    ok = False
            if ok:
                descend(depth + 1)
            search.unassign_type_counts(depth, index, bound_token)
            for i, ts in enumerate(trades):
                ts.unassign(depth, date, tokens[i])
            if timed_out:
                return

    if search.jobs:
        search.reset_bound()
        descend(0)

    assignment = DueDateAssignment(best_assignment)
    schedules = solve_assignment_schedules(instance, assignment, latest=late_mode)
    assert schedules is not None, "incumbent must stay feasible"
    flow = evaluator.flow_plan(assignment)
    return GlobalSolution(
        status="timeout" if timed_out else "optimal",
        assignment=assignment,
        schedules=schedules,
        flow=flow,
        objective=flow.objective,
    )
