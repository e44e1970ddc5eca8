"""Shared builders: hand-made instances and the seeded micro-instance suite.

Micro instances are deliberately small (few jobs, short horizons) so the
exhaustive solvers and the brute-force oracles stay fast; they are the
workhorse for solver-equivalence and cut-validity testing.
"""

from __future__ import annotations

from repairshop.expectation import failure_probabilities
from repairshop.master import effective_area
from repairshop.model import (Aircraft, AircraftType, Operation, RepairJob,
                              StaticInstance, Trade, Wave, build_due_date_set,
                              validate_instance)
from repairshop.rng import Xoshiro256, derive_seed


def make_instance(type_specs, trade_caps, wave_specs, job_specs):
    """Literal instance builder for hand-computed examples.

    type_specs: (id, member_count, ready_count, pre_prob, post_prob)
    trade_caps: {trade_id: capacity}
    wave_specs: (start, end, {type_id: requirement})
    job_specs:  (job_id, type_id, [(trade_id, processing, demand)], fixed_starts?)
    """
    types = tuple(
        AircraftType(id=k, member_count=m, ready_count=r,
                     mean_failure_rate=0.0, pre_fail_prob=pre, post_fail_prob=post)
        for k, m, r, pre, post in type_specs
    )
    trades = tuple(Trade(id=r, capacity=c) for r, c in sorted(trade_caps.items()))
    waves = tuple(
        Wave(id=i + 1, start_time=st, end_time=et, requirement=dict(req))
        for i, (st, et, req) in enumerate(wave_specs)
    )
    jobs = []
    for spec in job_specs:
        job_id, type_id, ops = spec[:3]
        fixed = spec[3] if len(spec) > 3 else {}
        jobs.append(RepairJob(
            id=job_id, type_id=type_id, aircraft_id=100 + job_id,
            operations=tuple(Operation(trade_id=r, processing_time=p, capacity_demand=c)
                             for r, p, c in ops),
            fixed_starts=dict(fixed),
        ))
    jobs = tuple(jobs)
    return StaticInstance(types=types, trades=trades, waves=waves, jobs=jobs,
                          due_dates=build_due_date_set(waves, jobs))


def gen_micro(seed: int, aircraft: int | None = None, trades: int | None = None,
              wave_count: int = 3) -> StaticInstance | None:
    """One small random instance, or None when the draw is degenerate.

    Kept lighter than the production generator: durations up to 5, trade
    capacities from 4 to 10, and a short three-wave horizon, sized so the
    full assignment space and all sub-problems enumerate quickly.  Draws
    where some trade's total work could not even stack up before the
    sentinel due date are discarded (the single-interval area relaxation
    is only exact on instances where the sentinel assignment passes it).
    """
    rng = Xoshiro256(derive_seed(seed, "micro"))
    n_air = aircraft if aircraft is not None else rng.randint(4, 10)
    n_trades = trades if trades is not None else rng.choice([2, 3])
    n_types = 1 if n_air < 7 else 2

    for _ in range(50):
        membership = [rng.randint(1, n_types) for _ in range(n_air)]
        if len(set(membership)) == n_types:
            break
    else:
        return None
    rates = [rng.uniform(0.05, 0.5) for _ in range(n_air)]
    aircraft_list = [Aircraft(id=i + 1, type_id=membership[i], failure_rate=rates[i])
                     for i in range(n_air)]

    trade_list = tuple(Trade(id=r, capacity=rng.randint(4, 10))
                       for r in range(1, n_trades + 1))

    job_count = max(1, round(0.6 * n_air))
    shop = rng.sample([a.id for a in aircraft_list], job_count)
    jobs = []
    for i, aircraft_id in enumerate(sorted(shop)):
        craft = aircraft_list[aircraft_id - 1]
        op_count = rng.randint(1, min(2, n_trades))
        chosen = rng.sample([t.id for t in trade_list], op_count)
        ops = tuple(
            Operation(trade_id=r,
                      processing_time=rng.randint(1, 5),
                      capacity_demand=rng.randint(1, dict((t.id, t.capacity) for t in trade_list)[r]))
            for r in sorted(chosen)
        )
        jobs.append(RepairJob(id=i + 1, type_id=craft.type_id,
                              aircraft_id=craft.id, operations=ops))
    jobs = tuple(jobs)

    start = rng.randint(3, 7)
    waves = []
    shop_set = set(shop)
    members = {k: sum(1 for a in aircraft_list if a.type_id == k)
               for k in range(1, n_types + 1)}
    for w in range(wave_count):
        length = rng.randint(2, 3)
        requirement = {k: rng.randint(0, members[k]) for k in sorted(members)}
        waves.append(Wave(id=w + 1, start_time=start, end_time=start + length,
                          requirement=requirement))
        start = start + length + rng.randint(0, 2)
    waves = tuple(waves)

    types = []
    for k in sorted(members):
        mem = [a for a in aircraft_list if a.type_id == k]
        mean_rate = sum(a.failure_rate for a in mem) / len(mem)
        pre, post = failure_probabilities(mean_rate)
        ready = sum(1 for a in mem if a.id not in shop_set)
        types.append(AircraftType(id=k, member_count=len(mem), ready_count=ready,
                                  mean_failure_rate=mean_rate,
                                  pre_fail_prob=pre, post_fail_prob=post))

    instance = StaticInstance(types=tuple(types), trades=trade_list, waves=waves,
                              jobs=jobs, due_dates=build_due_date_set(waves, jobs))
    if validate_instance(instance):
        return None
    sentinel = instance.due_dates.b_value
    for trade in trade_list:
        total = sum(effective_area(j, trade.id) for j in instance.jobs_on_trade(trade.id))
        if total > trade.capacity * sentinel:
            return None
    return instance


def micro_suite(count: int, base_seed: int = 1000, **kwargs) -> list[StaticInstance]:
    """The first ``count`` non-degenerate micro instances from a seed line."""
    out = []
    seed = base_seed
    while len(out) < count:
        instance = gen_micro(seed, **kwargs)
        if instance is not None:
            out.append(instance)
        seed += 1
    return out
