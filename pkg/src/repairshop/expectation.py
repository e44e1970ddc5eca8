"""Expected wave-coverage model.

Given a due-date assignment, the number of aircraft of each type leaving
the shop right before each wave is a simple count.  Expected availability
then follows a per-type recursion: ready aircraft survive a pre-flight
check with probability (1 - pre), flown aircraft additionally survive a
post-flight check before rejoining the pool, and aircraft held back are
re-checked at the next wave.  Coverage is maximised by choosing how many
available aircraft actually fly each wave; flying fewer now can preserve
availability later, so the per-type optimum is found by exhaustive search
over the (small) space of flight vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import StaticInstance

FLOOR_EPS = 1e-9  # guards exact-integer expectations against float rounding
FLOW_TOL = 1e-9   # tolerance when checking flown <= expected availability


class InfeasibleFlowError(ValueError):
    """A flight vector exceeds the expected availability it induces."""


def failure_probabilities(rate: float) -> tuple[float, float]:
    """Pre- and post-flight check failure probabilities for a failure rate.

    pre = 1 - e^(-rate), post = 1 - e^(-3 rate); both 0 at rate 0 and
    approaching 1 as the rate grows, with pre <= post.
    """
    if rate < 0:
        raise ValueError(f"failure rate must be non-negative, got {rate}")
    return 1.0 - math.exp(-rate), 1.0 - math.exp(-3.0 * rate)


@dataclass
class DueDateAssignment:
    """Chosen due-date index per job (1-based; the last index is B)."""

    due_index: dict[int, int]

    def validate(self, instance: StaticInstance) -> None:
        b_index = instance.due_dates.b_index
        if set(self.due_index) != {j.id for j in instance.jobs}:
            raise ValueError("assignment must cover every job exactly once")
        for job_id, idx in self.due_index.items():
            if not 1 <= idx <= b_index:
                raise ValueError(f"job {job_id}: due index {idx} outside [1, {b_index}]")

    def date_for(self, job_id: int, instance: StaticInstance) -> int:
        return instance.due_dates.date_of(self.due_index[job_id])


@dataclass
class FlowPlan:
    """Arrivals, expected availability and flown counts per type and wave."""

    arrivals: dict[int, tuple[int, ...]]
    expected_avail: dict[int, tuple[float, ...]]
    flown: dict[int, tuple[int, ...]]
    objective: int


def compute_arrivals(assignment: DueDateAssignment,
                     instance: StaticInstance) -> dict[int, tuple[int, ...]]:
    """Count jobs of each type due at each wave; B-jobs feed no wave."""
    waves = instance.wave_count
    counts = {t.id: [0] * waves for t in instance.types}
    for job in instance.jobs:
        idx = assignment.due_index[job.id]
        if idx <= waves:
            counts[job.type_id][idx - 1] += 1
    return {k: tuple(v) for k, v in counts.items()}


def expected_availability(arrivals: dict[int, tuple[int, ...]],
                          flown: dict[int, tuple[int, ...]],
                          instance: StaticInstance) -> dict[int, tuple[float, ...]]:
    """Evaluate the availability recursion for a given flight vector.

    Raises :class:`InfeasibleFlowError` where flown exceeds availability
    (beyond tolerance).  Availability at a wave depends only on earlier
    waves' flight counts.
    """
    waves = instance.wave_count
    result: dict[int, tuple[float, ...]] = {}
    for t in instance.types:
        q_pre = 1.0 - t.pre_fail_prob
        q_ret = (1.0 - t.post_fail_prob) * q_pre
        arr = arrivals[t.id]
        fly = flown[t.id]
        avail: list[float] = []
        for w in range(waves):
            if w == 0:
                e = (t.ready_count + arr[0]) * q_pre
            else:
                held = avail[w - 1] - fly[w - 1]
                if held < -FLOW_TOL:
                    raise InfeasibleFlowError(
                        f"type {t.id}: flying {fly[w - 1]} at wave {w} exceeds "
                        f"expected availability {avail[w - 1]:.6f}"
                    )
                returned = sum(fly[v] for v in instance.returning_waves(w))
                e = (max(held, 0.0) + arr[w]) * q_pre + returned * q_ret
            avail.append(e)
            if fly[w] > e + FLOW_TOL:
                raise InfeasibleFlowError(
                    f"type {t.id}: flying {fly[w]} at wave {w + 1} exceeds "
                    f"expected availability {e:.6f}"
                )
        result[t.id] = tuple(avail)
    return result


def _best_flow_for_type(ready: int, q_pre: float, q_ret: float,
                        required: tuple[int, ...],
                        returning: tuple[tuple[int, ...], ...],
                        arrivals: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Exhaustive search over flight vectors for one type.

    The search space is bounded by prod(required[w] + 1); flying more of the
    currently available aircraft is not always better (flown aircraft face
    the post-check and held aircraft keep a higher survival factor), so all
    feasible vectors are visited.
    """
    waves = len(required)
    best_total = -1
    best_vec: tuple[int, ...] = (0,) * waves
    flights = [0] * waves

    def descend(w: int, total: int, avail_hist: list[float]) -> None:
        nonlocal best_total, best_vec
        if w == waves:
            if total > best_total:
                best_total = total
                best_vec = tuple(flights)
            return
        if w == 0:
            e = (ready + arrivals[0]) * q_pre
        else:
            held = avail_hist[w - 1] - flights[w - 1]
            returned = sum(flights[v] for v in returning[w])
            e = (held + arrivals[w]) * q_pre + returned * q_ret
        cap = min(required[w], int(math.floor(e + FLOOR_EPS)))
        avail_hist.append(e)
        for z in range(cap, -1, -1):
            flights[w] = z
            descend(w + 1, total + z, avail_hist)
        flights[w] = 0
        avail_hist.pop()

    descend(0, 0, [])
    return best_total, best_vec


def optimal_flow(arrivals: dict[int, tuple[int, ...]],
                 instance: StaticInstance) -> FlowPlan:
    """Flight counts maximising total coverage for the given arrivals.

    Types are independent, so the plan is assembled from per-type optima.
    Flown counts are capped by the wave requirement and by the expected
    availability rounded down with a small epsilon.
    """
    waves = instance.wave_count
    returning = tuple(instance.returning_waves(w) for w in range(waves))
    flown: dict[int, tuple[int, ...]] = {}
    total = 0
    for t in instance.types:
        required = tuple(w.requires(t.id) for w in instance.waves)
        q_pre = 1.0 - t.pre_fail_prob
        q_ret = (1.0 - t.post_fail_prob) * q_pre
        value, vec = _best_flow_for_type(t.ready_count, q_pre, q_ret,
                                         required, returning, arrivals[t.id])
        flown[t.id] = vec
        total += value
    avail = expected_availability(arrivals, flown, instance)
    return FlowPlan(arrivals=dict(arrivals), expected_avail=avail,
                    flown=flown, objective=total)


def objective_of(assignment: DueDateAssignment, instance: StaticInstance) -> FlowPlan:
    """Coverage plan and objective value induced by a due-date assignment."""
    return optimal_flow(compute_arrivals(assignment, instance), instance)


class CoverageEvaluator:
    """Caching objective evaluator for search code.

    The master search and the exhaustive solver evaluate the objective at
    every leaf; per-type flow optima depend only on the type's arrival
    vector, so they are memoised here.  Results are identical to
    :func:`objective_of`.
    """

    def __init__(self, instance: StaticInstance):
        self.instance = instance
        waves = instance.wave_count
        self._returning = tuple(instance.returning_waves(w) for w in range(waves))
        self._type_data = {}
        for t in instance.types:
            q_pre = 1.0 - t.pre_fail_prob
            q_ret = (1.0 - t.post_fail_prob) * q_pre
            required = tuple(w.requires(t.id) for w in instance.waves)
            self._type_data[t.id] = (t.ready_count, q_pre, q_ret, required)
        self._flow_cache: dict[tuple[int, tuple[int, ...]], tuple[int, tuple[int, ...]]] = {}
        self._completion_cache: dict[tuple[int, tuple[int, ...], int], int] = {}

    def flow_for_type(self, type_id: int, arrivals: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
        key = (type_id, arrivals)
        hit = self._flow_cache.get(key)
        if hit is None:
            ready, q_pre, q_ret, required = self._type_data[type_id]
            hit = _best_flow_for_type(ready, q_pre, q_ret, required,
                                      self._returning, arrivals)
            self._flow_cache[key] = hit
        return hit

    def objective_from_arrivals(self, arrivals: dict[int, tuple[int, ...]]) -> int:
        return sum(self.flow_for_type(k, arr)[0] for k, arr in arrivals.items())

    def best_completion(self, type_id: int, arrivals: tuple[int, ...], extra_jobs: int) -> int:
        """Best objective contribution of one type over all ways of adding
        ``extra_jobs`` more arrivals (including adding none of them).

        Used as the optimistic bound in the assignment searches: it ignores
        capacity, so it dominates every completion of a partial assignment.
        """
        if extra_jobs == 0:
            return self.flow_for_type(type_id, arrivals)[0]
        key = (type_id, arrivals, extra_jobs)
        hit = self._completion_cache.get(key)
        if hit is None:
            hit = self.best_completion(type_id, arrivals, extra_jobs - 1)
            for w in range(len(arrivals)):
                bumped = arrivals[:w] + (arrivals[w] + 1,) + arrivals[w + 1:]
                value = self.best_completion(type_id, bumped, extra_jobs - 1)
                if value > hit:
                    hit = value
            self._completion_cache[key] = hit
        return hit

    def objective(self, assignment: DueDateAssignment) -> int:
        return self.objective_from_arrivals(compute_arrivals(assignment, self.instance))

    def flow_plan(self, assignment: DueDateAssignment) -> FlowPlan:
        arrivals = compute_arrivals(assignment, self.instance)
        flown = {k: self.flow_for_type(k, arr)[1] for k, arr in arrivals.items()}
        total = sum(self.flow_for_type(k, arr)[0] for k, arr in arrivals.items())
        avail = expected_availability(arrivals, flown, self.instance)
        return FlowPlan(arrivals=arrivals, expected_avail=avail,
                        flown=flown, objective=total)
