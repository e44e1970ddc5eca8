"""Dispatching heuristic: rank jobs, place each at its earliest start.

The ranking index multiplies the start-time of the first wave that needs
the job's aircraft type by a decaying exponential in (required fraction of
the fleet) / (peak fraction of trade capacity the job consumes before that
wave).  Jobs are scheduled in ascending index order, every operation at
the earliest capacity-feasible start on its trade; the induced due date of
a job is the first wave starting at or after its ready time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .expectation import CoverageEvaluator, DueDateAssignment, FlowPlan
from .model import StaticInstance
from .plans import ExecutablePlan, plan_from_schedules
from .rssp import ScheduledOp, earliest_feasible_start


@dataclass(frozen=True)
class RankIndex:
    job_id: int
    first_wave_start: int
    fleet_fraction: float
    capacity_fraction: float
    value: float


def rank_jobs(instance: StaticInstance, fleet_fraction_base: str = "members") -> list[RankIndex]:
    """Ranking indices in scheduling order (ascending value, job id ties).

    ``fleet_fraction_base`` selects the denominator of the required-fleet
    fraction: "members" divides the first relevant wave's requirement by
    the type's member count, "requirement_total" by the type's total
    requirement over all waves.  Jobs of a type no wave requires are
    ranked last (their index is pinned to the sentinel due date, which
    exceeds every discounted wave start).
    """
    if fleet_fraction_base not in ("members", "requirement_total"):
        raise ValueError(f"unknown fleet fraction base: {fleet_fraction_base}")
    sentinel = instance.due_dates.b_value
    ranks = []
    for job in instance.jobs:
        type_id = job.type_id
        first_wave = next((w for w in instance.waves if w.requires(type_id) > 0), None)
        if first_wave is None:
            ranks.append(RankIndex(job.id, sentinel, 0.0, 1.0, float(sentinel)))
            continue
        start = first_wave.start_time
        if fleet_fraction_base == "members":
            denom = instance.type_by_id(type_id).member_count
        else:
            denom = sum(w.requires(type_id) for w in instance.waves)
        fleet_fraction = first_wave.requires(type_id) / denom
        capacity_fraction = max(
            op.processing_time * op.capacity_demand
            / (start * instance.trade_by_id(op.trade_id).capacity)
            for op in job.operations
        )
        value = start * math.exp(-fleet_fraction / capacity_fraction)
        ranks.append(RankIndex(job.id, start, fleet_fraction, capacity_fraction, value))
    ranks.sort(key=lambda r: (r.value, r.job_id))
    return ranks


@dataclass
class GreedyResult:
    order: tuple[int, ...]
    trade_ops: dict[int, tuple[ScheduledOp, ...]]
    assignment: DueDateAssignment
    flow: FlowPlan
    objective: int

    def plan(self, instance: StaticInstance) -> ExecutablePlan:
        return plan_from_schedules(instance, self.assignment, self.trade_ops)


def schedule_greedy(instance: StaticInstance,
                    order: list[int] | None = None,
                    fleet_fraction_base: str = "members",
                    evaluator: CoverageEvaluator | None = None) -> GreedyResult:
    """Greedy capacity-respecting schedule for the given job order.

    The order defaults to the ranking heuristic.  Capacity is respected at
    every instant (not only inside the horizon), so the result is always
    executable; pinned operations are seeded first and never move.
    """
    if order is None:
        order = [r.job_id for r in rank_jobs(instance, fleet_fraction_base)]
    ops_by_trade: dict[int, list[ScheduledOp]] = {t.id: [] for t in instance.trades}
    ends: dict[int, int] = {}
    for job in instance.jobs:
        for op in job.operations:
            if op.trade_id in job.fixed_starts:
                start = job.fixed_starts[op.trade_id]
                ops_by_trade[op.trade_id].append(
                    ScheduledOp(job.id, start, start + op.processing_time, op.capacity_demand))
                ends[job.id] = max(ends.get(job.id, 0), start + op.processing_time)

    for job_id in order:
        job = instance.job_by_id(job_id)
        for op in sorted(job.operations, key=lambda o: o.trade_id):
            if op.trade_id in job.fixed_starts:
                continue
            entries = ops_by_trade[op.trade_id]
            capacity = instance.trade_by_id(op.trade_id).capacity
            start = earliest_feasible_start(entries, capacity,
                                            op.processing_time, op.capacity_demand)
            entries.append(ScheduledOp(job.id, start, start + op.processing_time,
                                       op.capacity_demand))
            ends[job.id] = max(ends.get(job.id, 0), start + op.processing_time)

    dds = instance.due_dates
    due_index: dict[int, int] = {}
    for job in instance.jobs:
        ready = ends[job.id]
        idx = next((i for i in range(1, dds.b_index) if dds.date_of(i) >= ready),
                   dds.b_index)
        due_index[job.id] = idx
    assignment = DueDateAssignment(due_index)
    evaluator = evaluator or CoverageEvaluator(instance)
    flow = evaluator.flow_plan(assignment)
    trade_ops = {r: tuple(sorted(v, key=lambda e: (e.start, e.job_id)))
                 for r, v in ops_by_trade.items()}
    return GreedyResult(order=tuple(order), trade_ops=trade_ops,
                        assignment=assignment, flow=flow, objective=flow.objective)
