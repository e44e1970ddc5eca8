"""Core domain types for the repair-shop scheduling problem.

A static instance bundles aircraft types, repair trades, flight waves and
the repair jobs currently in the shop.  Time is integral throughout: wave
start/end times, processing times and due dates are non-negative integers
(committed operation starts carried in from an earlier horizon may be
negative).  All values are treated as immutable after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

INSTANCE_FORMAT = "repairshop-instance/1"


@dataclass
class AircraftType:
    """Aggregate view of one aircraft type."""

    id: int
    member_count: int
    ready_count: int          # members not in the shop at time 0
    mean_failure_rate: float
    pre_fail_prob: float      # probability of failing a pre-flight check
    post_fail_prob: float     # probability of failing a post-flight check


@dataclass
class Aircraft:
    """A single airframe; carried by the simulator, not by static solvers."""

    id: int
    type_id: int
    failure_rate: float
    pre_failure_rate: float = 0.0  # snapshot taken at the last failure

    def __post_init__(self):
        if self.pre_failure_rate == 0.0:
            self.pre_failure_rate = self.failure_rate


@dataclass
class Trade:
    """A repair resource pool (workforce/tooling) with finite capacity."""

    id: int
    capacity: int


@dataclass
class Wave:
    """A scheduled flight with a per-type aircraft requirement."""

    id: int
    start_time: int
    end_time: int
    requirement: dict[int, int]  # type id -> max aircraft required

    def requires(self, type_id: int) -> int:
        return self.requirement.get(type_id, 0)


@dataclass
class Operation:
    """One repair activity of a job on a single trade."""

    trade_id: int
    processing_time: int
    capacity_demand: int


@dataclass
class RepairJob:
    """All repair activities needed to return one aircraft to service.

    ``fixed_starts`` pins operations that are already under way: a pinned
    operation contributes an immovable capacity block in every solver and
    keeps its committed start in any schedule.  Pinned starts may be
    negative when the operation began before the current horizon origin.
    """

    id: int
    type_id: int
    aircraft_id: int
    operations: tuple[Operation, ...]
    fixed_starts: dict[int, int] = field(default_factory=dict)

    def operation_on(self, trade_id: int) -> Operation | None:
        for op in self.operations:
            if op.trade_id == trade_id:
                return op
        return None

    @property
    def max_processing_time(self) -> int:
        return max(op.processing_time for op in self.operations)


@dataclass
class DueDateSet:
    """Ascending due dates: the wave start-times plus the sentinel B.

    B marks "not repaired for any wave this horizon" and equals the last
    wave's start-time plus the longest processing time of any operation.
    Indices into the set are 1-based; index ``wave_count + 1`` is B.
    """

    dates: tuple[int, ...]

    @property
    def wave_count(self) -> int:
        return len(self.dates) - 1

    @property
    def b_value(self) -> int:
        return self.dates[-1]

    @property
    def b_index(self) -> int:
        return len(self.dates)

    def date_of(self, index: int) -> int:
        """Due date value for a 1-based index."""
        return self.dates[index - 1]


class InvalidInstanceError(ValueError):
    """Raised when an operation requires a well-formed instance and got none."""


def build_due_date_set(waves: list[Wave] | tuple[Wave, ...],
                       jobs: list[RepairJob] | tuple[RepairJob, ...]) -> DueDateSet:
    """Wave start-times in ascending order plus the sentinel B.

    B = last start-time + the maximum processing time over all jobs and
    trades (1 when there are no jobs, so the set is still well-formed for
    an empty shop).
    """
    if not waves:
        raise InvalidInstanceError("cannot build a due date set without waves")
    starts = sorted(w.start_time for w in waves)
    max_p = max((op.processing_time for j in jobs for op in j.operations), default=1)
    return DueDateSet(tuple(starts) + (starts[-1] + max_p,))


@dataclass
class StaticInstance:
    """One static scheduling problem: the full input to a solver."""

    types: tuple[AircraftType, ...]
    trades: tuple[Trade, ...]
    waves: tuple[Wave, ...]
    jobs: tuple[RepairJob, ...]
    due_dates: DueDateSet

    def __post_init__(self):
        self._types_by_id = {t.id: t for t in self.types}
        self._trades_by_id = {t.id: t for t in self.trades}
        self._jobs_by_id = {j.id: j for j in self.jobs}
        self._jobs_on_trade: dict[int, tuple[RepairJob, ...]] = {
            t.id: tuple(j for j in self.jobs if j.operation_on(t.id)) for t in self.trades
        }

    @property
    def wave_count(self) -> int:
        return len(self.waves)

    @property
    def horizon_end(self) -> int:
        """Start-time of the last wave; capacity is enforced on [0, here)."""
        return self.waves[-1].start_time

    def type_by_id(self, type_id: int) -> AircraftType:
        return self._types_by_id[type_id]

    def trade_by_id(self, trade_id: int) -> Trade:
        return self._trades_by_id[trade_id]

    def job_by_id(self, job_id: int) -> RepairJob:
        return self._jobs_by_id[job_id]

    def jobs_on_trade(self, trade_id: int) -> tuple[RepairJob, ...]:
        return self._jobs_on_trade[trade_id]

    def returning_waves(self, wave_pos: int) -> tuple[int, ...]:
        """Positions (0-based) of waves whose end falls in the return window
        of wave ``wave_pos``: start of the previous wave exclusive, start of
        this wave inclusive.  Aircraft flying those waves are back in the
        pool before this wave's pre-checks."""
        if wave_pos == 0:
            return ()
        lo = self.waves[wave_pos - 1].start_time
        hi = self.waves[wave_pos].start_time
        return tuple(v for v in range(len(self.waves)) if lo < self.waves[v].end_time <= hi)


def validate_instance(instance: StaticInstance) -> list[str]:
    """All invariant violations in the instance; empty means well-formed.

    Violations are data, not exceptions: generators and file loaders report
    them, solvers require an empty list before starting.
    """
    problems: list[str] = []
    type_ids = {t.id for t in instance.types}
    trade_caps = {t.id: t.capacity for t in instance.trades}

    for t in instance.types:
        if not 0 <= t.ready_count <= t.member_count:
            problems.append(f"type {t.id}: ready count {t.ready_count} outside [0, {t.member_count}]")
        if not 0.0 <= t.pre_fail_prob <= t.post_fail_prob <= 1.0:
            problems.append(f"type {t.id}: check-failure probabilities must satisfy 0 <= pre <= post <= 1")
        if t.mean_failure_rate < 0:
            problems.append(f"type {t.id}: negative mean failure rate")
    if len(type_ids) != len(instance.types):
        problems.append("duplicate type ids")

    for tr in instance.trades:
        if tr.capacity < 1:
            problems.append(f"trade {tr.id}: capacity must be at least 1")
    if len(trade_caps) != len(instance.trades):
        problems.append("duplicate trade ids")

    if not instance.waves:
        problems.append("instance has no waves")
    prev: Wave | None = None
    for w in instance.waves:
        if w.start_time < 0:
            problems.append(f"wave {w.id}: negative start time")
        if w.start_time >= w.end_time:
            problems.append(f"wave {w.id}: start must precede end")
        if prev is not None:
            if w.start_time <= prev.start_time:
                problems.append(f"waves {prev.id},{w.id}: start-times not strictly ascending")
            if prev.end_time > w.start_time:
                problems.append(f"waves {prev.id},{w.id}: waves overlap")
        for k, need in w.requirement.items():
            if k not in type_ids:
                problems.append(f"wave {w.id}: requirement for unknown type {k}")
            if need < 0:
                problems.append(f"wave {w.id}: negative requirement for type {k}")
        prev = w

    seen_jobs: set[int] = set()
    seen_aircraft: set[int] = set()
    shop_per_type = {k: 0 for k in type_ids}
    for j in instance.jobs:
        if j.id in seen_jobs:
            problems.append(f"duplicate job id {j.id}")
        seen_jobs.add(j.id)
        if j.type_id not in type_ids:
            problems.append(f"job {j.id}: unknown type {j.type_id}")
        else:
            shop_per_type[j.type_id] += 1
        if j.aircraft_id in seen_aircraft:
            problems.append(f"job {j.id}: aircraft {j.aircraft_id} already has an open job")
        seen_aircraft.add(j.aircraft_id)
        if not j.operations:
            problems.append(f"job {j.id}: no operations")
        op_trades: set[int] = set()
        for op in j.operations:
            if op.trade_id in op_trades:
                problems.append(f"job {j.id}: more than one operation on trade {op.trade_id}")
            op_trades.add(op.trade_id)
            if op.trade_id not in trade_caps:
                problems.append(f"job {j.id}: unknown trade {op.trade_id}")
            elif not 1 <= op.capacity_demand <= trade_caps[op.trade_id]:
                problems.append(
                    f"job {j.id}: demand {op.capacity_demand} exceeds capacity "
                    f"{trade_caps[op.trade_id]} of trade {op.trade_id}"
                )
            if op.processing_time < 1:
                problems.append(f"job {j.id}: processing time below 1 on trade {op.trade_id}")
        for r in j.fixed_starts:
            if r not in op_trades:
                problems.append(f"job {j.id}: fixed start on trade {r} without an operation")

    for t in instance.types:
        in_shop = t.member_count - t.ready_count
        if shop_per_type.get(t.id, 0) != in_shop:
            problems.append(
                f"type {t.id}: {shop_per_type.get(t.id, 0)} jobs in shop but "
                f"member/ready counts imply {in_shop}"
            )

    if instance.waves:
        try:
            expected = build_due_date_set(instance.waves, instance.jobs)
            if expected.dates != instance.due_dates.dates:
                problems.append(
                    f"due date set {instance.due_dates.dates} does not match "
                    f"wave starts plus sentinel {expected.dates}"
                )
        except InvalidInstanceError:
            pass

    return problems


# ---------------------------------------------------------------------------
# instance file format (JSON, version "repairshop-instance/1")

def instance_to_dict(instance: StaticInstance) -> dict:
    return {
        "version": INSTANCE_FORMAT,
        "types": [
            {
                "id": t.id,
                "member_count": t.member_count,
                "ready_count": t.ready_count,
                "mean_failure_rate": t.mean_failure_rate,
                "pre_fail_prob": t.pre_fail_prob,
                "post_fail_prob": t.post_fail_prob,
            }
            for t in instance.types
        ],
        "trades": [{"id": t.id, "capacity": t.capacity} for t in instance.trades],
        "waves": [
            {
                "id": w.id,
                "start_time": w.start_time,
                "end_time": w.end_time,
                "requirement": {str(k): v for k, v in sorted(w.requirement.items())},
            }
            for w in instance.waves
        ],
        "jobs": [
            {
                "id": j.id,
                "type_id": j.type_id,
                "aircraft_id": j.aircraft_id,
                "operations": [
                    {
                        "trade_id": op.trade_id,
                        "processing_time": op.processing_time,
                        "capacity_demand": op.capacity_demand,
                    }
                    for op in j.operations
                ],
                **({"fixed_starts": {str(r): s for r, s in sorted(j.fixed_starts.items())}}
                   if j.fixed_starts else {}),
            }
            for j in instance.jobs
        ],
    }


def instance_from_dict(data: dict) -> StaticInstance:
    version = data.get("version")
    if version != INSTANCE_FORMAT:
        raise InvalidInstanceError(f"unsupported instance format: {version!r}")
    types = tuple(
        AircraftType(
            id=t["id"],
            member_count=t["member_count"],
            ready_count=t["ready_count"],
            mean_failure_rate=t["mean_failure_rate"],
            pre_fail_prob=t["pre_fail_prob"],
            post_fail_prob=t["post_fail_prob"],
        )
        for t in data["types"]
    )
    trades = tuple(Trade(id=t["id"], capacity=t["capacity"]) for t in data["trades"])
    waves = tuple(
        Wave(
            id=w["id"],
            start_time=w["start_time"],
            end_time=w["end_time"],
            requirement={int(k): v for k, v in w["requirement"].items()},
        )
        for w in data["waves"]
    )
    jobs = tuple(
        RepairJob(
            id=j["id"],
            type_id=j["type_id"],
            aircraft_id=j["aircraft_id"],
            operations=tuple(
                Operation(
                    trade_id=op["trade_id"],
                    processing_time=op["processing_time"],
                    capacity_demand=op["capacity_demand"],
                )
                for op in j["operations"]
            ),
            fixed_starts={int(r): s for r, s in j.get("fixed_starts", {}).items()},
        )
        for j in data["jobs"]
    )
    return StaticInstance(types, trades, waves, jobs, build_due_date_set(waves, jobs))


def save_instance(instance: StaticInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")


def load_instance(path) -> StaticInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
