"""From due-date assignments to executable schedules.

Jobs assigned the sentinel due date are exempt from the capacity window
the solvers reason about (enforced only up to the last wave start), so
they are excluded from the per-trade feasibility sub-problems and placed
greedily after the horizon when a committed, executable schedule is
assembled.  Operations already under way always keep their committed
starts.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expectation import DueDateAssignment
from .model import StaticInstance
from .rssp import (OpDemand, ScheduledOp, TradeSchedule, earliest_feasible_start,
                   solve_rssp_cached)


def trade_demands(instance: StaticInstance,
                  assignment: DueDateAssignment | dict[int, int],
                  trade_id: int) -> tuple[tuple[OpDemand, ...], tuple[tuple[int, int, int], ...]]:
    """Split a trade's operations into schedulable demands and pinned blocks.

    Non-sentinel jobs become demands (pinned ones keep their start);
    sentinel jobs contribute only their pinned in-progress work, as
    anonymous background blocks.
    """
    indices = assignment.due_index if isinstance(assignment, DueDateAssignment) else assignment
    b_index = instance.due_dates.b_index
    demands: list[OpDemand] = []
    background: list[tuple[int, int, int]] = []
    for job in instance.jobs_on_trade(trade_id):
        op = job.operation_on(trade_id)
        idx = indices[job.id]
        if idx == b_index:
            if op.trade_id in job.fixed_starts:
                background.append((job.fixed_starts[op.trade_id], op.processing_time,
                                   op.capacity_demand))
        else:
            demands.append(OpDemand(
                job_id=job.id,
                processing_time=op.processing_time,
                capacity_demand=op.capacity_demand,
                deadline=instance.due_dates.date_of(idx),
                fixed_start=job.fixed_starts.get(op.trade_id),
            ))
    return tuple(sorted(demands, key=lambda d: d.job_id)), tuple(sorted(background))


def solve_assignment_schedules(instance: StaticInstance,
                               assignment: DueDateAssignment | dict[int, int],
                               latest: bool = False) -> dict[int, TradeSchedule] | None:
    """Feasibility witness per trade for an assignment, or None if any fails."""
    schedules: dict[int, TradeSchedule] = {}
    for trade in instance.trades:
        demands, background = trade_demands(instance, assignment, trade.id)
        result = solve_rssp_cached(trade.capacity, demands, background, latest)
        if not result.feasible:
            return None
        schedules[trade.id] = TradeSchedule(trade_id=trade.id, entries=result.schedule.entries)
    return schedules


@dataclass
class ExecutablePlan:
    """A fully committed schedule: every remaining operation has a start."""

    assignment: DueDateAssignment
    trade_ops: dict[int, tuple[ScheduledOp, ...]]
    job_ready: dict[int, int]

    def ready_time(self, job_id: int) -> int:
        return self.job_ready[job_id]


def _ready_times(instance: StaticInstance,
                 trade_ops: dict[int, tuple[ScheduledOp, ...]]) -> dict[int, int]:
    ready: dict[int, int] = {}
    for ops in trade_ops.values():
        for op in ops:
            ready[op.job_id] = max(ready.get(op.job_id, 0), op.end)
    return ready


def plan_from_schedules(instance: StaticInstance,
                        assignment: DueDateAssignment,
                        trade_ops: dict[int, tuple[ScheduledOp, ...]]) -> ExecutablePlan:
    """Wrap complete per-trade schedules (every job operation placed)."""
    return ExecutablePlan(assignment=assignment, trade_ops=dict(trade_ops),
                          job_ready=_ready_times(instance, trade_ops))


def extract_executable_schedule(instance: StaticInstance,
                                assignment: DueDateAssignment,
                                schedules: dict[int, TradeSchedule]) -> ExecutablePlan:
    """Commit a solver solution: sentinel jobs are stacked after the horizon.

    The witness schedules cover the non-sentinel jobs; sentinel jobs keep
    their pinned operations and have their free operations placed greedily
    at the earliest capacity-respecting start at or after the last wave
    start, so the executed profile never violates capacity anywhere.
    A job's ready time is the end of its last operation; aircraft join a
    wave when ready at or before its start.
    """
    b_index = instance.due_dates.b_index
    horizon = instance.horizon_end
    trade_ops: dict[int, list[ScheduledOp]] = {
        t.id: list(schedules[t.id].entries) if t.id in schedules else []
        for t in instance.trades
    }
    # pinned work of sentinel jobs is already running
    for job in instance.jobs:
        if assignment.due_index[job.id] != b_index:
            continue
        for op in job.operations:
            if op.trade_id in job.fixed_starts:
                start = job.fixed_starts[op.trade_id]
                trade_ops[op.trade_id].append(
                    ScheduledOp(job.id, start, start + op.processing_time, op.capacity_demand))
    # free operations of sentinel jobs, greedily after the horizon
    for job in sorted(instance.jobs, key=lambda j: j.id):
        if assignment.due_index[job.id] != b_index:
            continue
        for op in job.operations:
            if op.trade_id in job.fixed_starts:
                continue
            entries = trade_ops[op.trade_id]
            capacity = instance.trade_by_id(op.trade_id).capacity
            start = earliest_feasible_start(entries, capacity, op.processing_time,
                                            op.capacity_demand, lower=horizon)
            entries.append(ScheduledOp(job.id, start, start + op.processing_time,
                                       op.capacity_demand))
    ops = {r: tuple(sorted(v, key=lambda e: (e.start, e.job_id))) for r, v in trade_ops.items()}
    return ExecutablePlan(assignment=assignment, trade_ops=ops,
                          job_ready=_ready_times(instance, ops))
