"""Seeded generators for static instances and dynamic scenarios.

The static recipe: one aircraft type per five aircraft, uniform type
membership, failure rates uniform on [0, 0.5], 80% of aircraft in the shop
at time 0, trade capacity 10, per-job trade demands uniform on [1, 10] and
durations uniform on [r, 10r] for trade r.  The horizon is 1.2 times the
bottleneck trade's total work divided by its capacity, and waves are laid
out backwards from the horizon end with lengths in [3, 5] and slacks in
[0, 3].  Dynamic scenarios extend this with thirty waves placed forward
from a start in [H/3, H/2] with gaps in [1, 39], and a deterioration
percentage applied per flight.

Integer ranges written rand[a, b] are inclusive; the open-interval gap
rand(0, 40) is read as the integers 1..39.  All draws come from the
package PRNG in a fixed documented order, so a seed pins the instance
byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .expectation import failure_probabilities
from .model import (Aircraft, AircraftType, Operation, RepairJob, StaticInstance,
                    Trade, Wave, build_due_date_set)
from .rng import Xoshiro256

GENERATOR_VERSION = "repairshop-gen/1"
SCENARIO_FORMAT = "repairshop-scenario/1"

TRADE_CAPACITY = 10
FAILURE_RATE_MAX = 0.5
SHOP_FRACTION = 0.8
WAVE_LENGTH_RANGE = (3, 5)
WAVE_SLACK_RANGE = (0, 3)
DYNAMIC_WAVES = 30
DYNAMIC_GAP_RANGE = (1, 39)
TRADE_PROBABILITY = 0.5  # per-trade inclusion for jobs arriving after time 0


class GenerationError(RuntimeError):
    """Generation failed after bounded retries; the message reports the seed."""


@dataclass
class GenParams:
    aircraft_count: int
    trade_count: int = 3
    wave_count: int = 3
    seed: int = 0
    mode: str = "static"  # "static" | "dynamic"
    deterioration_pct: float = 5.0
    horizon_factor: float = 1.2

    def __post_init__(self):
        if self.aircraft_count < 1 or self.trade_count < 1 or self.wave_count < 1:
            raise ValueError("counts must be at least 1")
        if self.horizon_factor <= 1.0:
            raise ValueError("horizon factor must exceed 1")
        if self.mode not in ("static", "dynamic"):
            raise ValueError(f"unknown mode: {self.mode}")

    @property
    def label(self) -> str:
        w = DYNAMIC_WAVES if self.mode == "dynamic" else self.wave_count
        return f"{self.mode}-n{self.aircraft_count}-r{self.trade_count}-w{w}-s{self.seed}"


@dataclass
class LoadStats:
    per_trade_area: dict[int, float]
    lower_bound: float   # bottleneck trade's area over capacity
    horizon: int         # ceil(horizon_factor * lower_bound)


def load_stats(jobs, trades, horizon_factor: float = 1.2) -> LoadStats:
    per_trade = {}
    for trade in trades:
        area = sum(
            op.processing_time * op.capacity_demand
            for j in jobs for op in j.operations if op.trade_id == trade.id
        )
        per_trade[trade.id] = area / trade.capacity
    lb = max(per_trade.values(), default=0.0)
    return LoadStats(per_trade, lb, math.ceil(horizon_factor * lb))


def _draw_population(rng: Xoshiro256, count: int):
    """Types, aircraft and the in-shop subset, in a fixed draw order."""
    type_count = max(1, round(count / 5))
    for _ in range(1000):
        membership = [rng.randint(1, type_count) for _ in range(count)]
        if len(set(membership)) == type_count:
            break
    else:
        raise GenerationError(f"could not populate {type_count} types with {count} aircraft")
    rates = [rng.uniform(0.0, FAILURE_RATE_MAX) for _ in range(count)]
    aircraft = tuple(
        Aircraft(id=n + 1, type_id=membership[n], failure_rate=rates[n])
        for n in range(count)
    )
    shop_size = round(SHOP_FRACTION * count)
    shop_ids = sorted(rng.sample([a.id for a in aircraft], shop_size))
    return type_count, aircraft, shop_ids


def _draw_jobs(rng: Xoshiro256, shop_aircraft: list[Aircraft], trades: tuple[Trade, ...]):
    """Assign trades to jobs at |J|/2 operations per trade, then draw p and c.

    Each trade samples its job set without replacement; jobs left with no
    trade steal a slot from a job holding several (always possible, since
    the total operation count is at least the job count for two or more
    trades).  Durations come from [r, 10r] so higher-indexed trades run
    longer operations.
    """
    job_count = len(shop_aircraft)
    trade_ids = [t.id for t in trades]
    total_ops = (job_count * len(trade_ids)) // 2
    if total_ops < job_count:
        total_ops = job_count  # every job requires at least one trade
    base, rem = divmod(total_ops, len(trade_ids))
    targets = {r: base + (1 if i < rem else 0) for i, r in enumerate(trade_ids)}

    job_ids = list(range(1, job_count + 1))
    trades_of: dict[int, set[int]] = {j: set() for j in job_ids}
    for r in trade_ids:
        take = min(targets[r], job_count)
        for j in rng.sample(job_ids, take):
            trades_of[j].add(r)
    for j in job_ids:
        if trades_of[j]:
            continue
        donors = sorted(
            (d, r) for d in job_ids if len(trades_of[d]) >= 2 for r in sorted(trades_of[d])
        )
        d, r = rng.choice(donors)
        trades_of[d].discard(r)
        trades_of[j].add(r)

    jobs = []
    for pos, j in enumerate(job_ids):
        craft = shop_aircraft[pos]
        ops = []
        for r in sorted(trades_of[j]):
            demand = rng.randint(1, TRADE_CAPACITY)
            duration = rng.randint(r, 10 * r)
            ops.append(Operation(trade_id=r, processing_time=duration,
                                 capacity_demand=demand))
        jobs.append(RepairJob(id=j, type_id=craft.type_id, aircraft_id=craft.id,
                              operations=tuple(ops)))
    return tuple(jobs)


def _build_types(aircraft: tuple[Aircraft, ...], type_count: int,
                 shop_ids: set[int]) -> tuple[AircraftType, ...]:
    types = []
    for k in range(1, type_count + 1):
        members = [a for a in aircraft if a.type_id == k]
        mean_rate = sum(a.failure_rate for a in members) / len(members)
        pre, post = failure_probabilities(mean_rate)
        ready = sum(1 for a in members if a.id not in shop_ids)
        types.append(AircraftType(
            id=k, member_count=len(members), ready_count=ready,
            mean_failure_rate=mean_rate, pre_fail_prob=pre, post_fail_prob=post,
        ))
    return tuple(types)


def _draw_requirements(rng: Xoshiro256, types: tuple[AircraftType, ...]) -> dict[int, int]:
    return {t.id: rng.randint(1, t.member_count) for t in types}


def _static_waves(rng: Xoshiro256, horizon: int, wave_count: int,
                  types: tuple[AircraftType, ...], seed: int) -> tuple[Wave, ...]:
    """Lay waves out backwards from the horizon end; retry degenerate draws."""
    for _ in range(200):
        lengths = [rng.randint(*WAVE_LENGTH_RANGE) for _ in range(wave_count)]
        slacks = [rng.randint(*WAVE_SLACK_RANGE) for _ in range(wave_count)]
        ends = [0] * wave_count
        starts = [0] * wave_count
        anchor = horizon
        ok = True
        for w in range(wave_count - 1, -1, -1):
            ends[w] = anchor - slacks[w]
            starts[w] = ends[w] - lengths[w]
            anchor = starts[w]
            if starts[w] < 1:
                ok = False
                break
        if ok:
            return tuple(
                Wave(id=w + 1, start_time=starts[w], end_time=ends[w],
                     requirement=_draw_requirements(rng, types))
                for w in range(wave_count)
            )
    raise GenerationError(
        f"horizon {horizon} too short for {wave_count} waves (seed {seed})"
    )


def gen_static(params: GenParams) -> StaticInstance:
    """A static instance following the documented recipe; validates clean."""
    if params.mode != "static":
        raise ValueError("gen_static requires mode='static'")
    rng = Xoshiro256(params.seed)
    type_count, aircraft, shop_ids = _draw_population(rng, params.aircraft_count)
    trades = tuple(Trade(id=r, capacity=TRADE_CAPACITY)
                   for r in range(1, params.trade_count + 1))
    shop_aircraft = [a for a in aircraft if a.id in shop_ids]
    jobs = _draw_jobs(rng, shop_aircraft, trades)
    types = _build_types(aircraft, type_count, set(shop_ids))
    stats = load_stats(jobs, trades, params.horizon_factor)
    waves = _static_waves(rng, stats.horizon, params.wave_count, types, params.seed)
    return StaticInstance(types=types, trades=trades, waves=waves, jobs=jobs,
                          due_dates=build_due_date_set(waves, jobs))


@dataclass
class DynamicScenario:
    """Everything the simulator needs: fleet, initial shop, thirty waves."""

    label: str
    types: tuple[AircraftType, ...]
    trades: tuple[Trade, ...]
    waves: tuple[Wave, ...]
    aircraft: tuple[Aircraft, ...]
    jobs: tuple[RepairJob, ...]          # initial shop content at time 0
    deterioration_pct: float
    horizon: int
    seed: int = 0


def gen_dynamic(params: GenParams) -> DynamicScenario:
    """A thirty-wave scenario: static-style population, forward wave chain."""
    if params.mode != "dynamic":
        raise ValueError("gen_dynamic requires mode='dynamic'")
    rng = Xoshiro256(params.seed)
    type_count, aircraft, shop_ids = _draw_population(rng, params.aircraft_count)
    trades = tuple(Trade(id=r, capacity=TRADE_CAPACITY)
                   for r in range(1, params.trade_count + 1))
    shop_aircraft = [a for a in aircraft if a.id in shop_ids]
    jobs = _draw_jobs(rng, shop_aircraft, trades)
    types = _build_types(aircraft, type_count, set(shop_ids))
    stats = load_stats(jobs, trades, params.horizon_factor)

    lo, hi = math.ceil(stats.horizon / 3), math.floor(stats.horizon / 2)
    if hi < lo:
        raise GenerationError(f"horizon {stats.horizon} too short for a first wave "
                              f"(seed {params.seed})")
    waves = []
    start = rng.randint(lo, hi)
    for w in range(1, DYNAMIC_WAVES + 1):
        length = rng.randint(*WAVE_LENGTH_RANGE)
        waves.append(Wave(id=w, start_time=start, end_time=start + length,
                          requirement=_draw_requirements(rng, types)))
        start = start + length + rng.randint(*DYNAMIC_GAP_RANGE)
    return DynamicScenario(
        label=params.label, types=types, trades=trades, waves=tuple(waves),
        aircraft=aircraft, jobs=jobs, deterioration_pct=params.deterioration_pct,
        horizon=stats.horizon, seed=params.seed,
    )


def gen_failure_job(aircraft: Aircraft, trades: tuple[Trade, ...],
                    rng: Xoshiro256, job_id: int) -> RepairJob:
    """Repair job for a newly failed aircraft.

    Each trade is included independently with probability 0.5, redrawing
    until at least one trade is selected; demands and durations follow the
    static rules.
    """
    while True:
        selected = [t.id for t in trades if rng.random() < TRADE_PROBABILITY]
        if selected:
            break
    ops = []
    for r in selected:
        demand = rng.randint(1, TRADE_CAPACITY)
        duration = rng.randint(r, 10 * r)
        ops.append(Operation(trade_id=r, processing_time=duration, capacity_demand=demand))
    return RepairJob(id=job_id, type_id=aircraft.type_id, aircraft_id=aircraft.id,
                     operations=tuple(ops))


def shift_failure_rates(scenario: DynamicScenario, delta: float) -> DynamicScenario:
    """Sensitivity transform: add ``delta`` to every airframe's failure rate.

    The shift is applied at scenario load; type-level aggregates are
    recomputed here and sub-problem aggregates downstream pick up the
    shifted per-aircraft rates automatically.
    """
    if delta == 0.0:
        return scenario
    aircraft = tuple(
        replace(a, failure_rate=a.failure_rate + delta,
                pre_failure_rate=a.failure_rate + delta)
        for a in scenario.aircraft
    )
    shop_ids = {j.aircraft_id for j in scenario.jobs}
    types = []
    for t in scenario.types:
        members = [a for a in aircraft if a.type_id == t.id]
        mean_rate = sum(a.failure_rate for a in members) / len(members)
        pre, post = failure_probabilities(mean_rate)
        ready = sum(1 for a in members if a.id not in shop_ids)
        types.append(replace(t, mean_failure_rate=mean_rate,
                             pre_fail_prob=pre, post_fail_prob=post,
                             ready_count=ready))
    return replace(scenario, types=tuple(types), aircraft=aircraft)


# ---------------------------------------------------------------------------
# scenario file format (JSON, version "repairshop-scenario/1")

def scenario_to_dict(scenario: DynamicScenario) -> dict:
    return {
        "version": SCENARIO_FORMAT,
        "label": scenario.label,
        "deterioration_pct": scenario.deterioration_pct,
        "horizon": scenario.horizon,
        "seed": scenario.seed,
        "types": [
            {
                "id": t.id,
                "member_count": t.member_count,
                "ready_count": t.ready_count,
                "mean_failure_rate": t.mean_failure_rate,
                "pre_fail_prob": t.pre_fail_prob,
                "post_fail_prob": t.post_fail_prob,
            }
            for t in scenario.types
        ],
        "trades": [{"id": t.id, "capacity": t.capacity} for t in scenario.trades],
        "waves": [
            {
                "id": w.id,
                "start_time": w.start_time,
                "end_time": w.end_time,
                "requirement": {str(k): v for k, v in sorted(w.requirement.items())},
            }
            for w in scenario.waves
        ],
        "aircraft": [
            {"id": a.id, "type_id": a.type_id, "failure_rate": a.failure_rate}
            for a in scenario.aircraft
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
            }
            for j in scenario.jobs
        ],
    }


def scenario_from_dict(data: dict) -> DynamicScenario:
    if data.get("version") != SCENARIO_FORMAT:
        raise ValueError(f"unsupported scenario format: {data.get('version')!r}")
    return DynamicScenario(
        label=data["label"],
        types=tuple(AircraftType(**t) for t in data["types"]),
        trades=tuple(Trade(**t) for t in data["trades"]),
        waves=tuple(
            Wave(id=w["id"], start_time=w["start_time"], end_time=w["end_time"],
                 requirement={int(k): v for k, v in w["requirement"].items()})
            for w in data["waves"]
        ),
        aircraft=tuple(Aircraft(**a) for a in data["aircraft"]),
        jobs=tuple(
            RepairJob(
                id=j["id"], type_id=j["type_id"], aircraft_id=j["aircraft_id"],
                operations=tuple(Operation(**op) for op in j["operations"]),
            )
            for j in data["jobs"]
        ),
        deterioration_pct=data["deterioration_pct"],
        horizon=data["horizon"],
        seed=data["seed"],
    )


def save_scenario(scenario: DynamicScenario, path) -> None:
    import json
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2)
        fh.write("\n")


def load_scenario(path) -> DynamicScenario:
    import json
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))
