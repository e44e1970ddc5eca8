"""Seeded discrete-event simulation of the dynamic repair shop.

The shop runs through the scenario's waves.  At each wave start every
ready aircraft takes a pre-flight check (failures enter the shop with a
fresh repair job at the wave start); flyers are drawn at random from the
survivors up to the wave requirement.  At the wave end each flyer's
failure rate deteriorates, then a post-flight check runs (failures enter
the shop at the wave end).  Repair follows the committed schedule only;
an aircraft leaves the shop the moment its last operation finishes, with
its failure rate restored to the pre-failure snapshot (minimal repair).

Rescheduling happens immediately after the post-flight checks of every
j-th wave (so those failures are included) and covers the next i waves, a
policy written P_ij.  In-progress operations are pinned; everything else
is rebuilt by the chosen scheduler under a per-decision time budget.
Every stochastic draw comes from named sub-streams of one seed, so a
(scenario, policy, scheduler, seed) tuple fully determines the trace.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .benders import executable_plan, solve_lbbd
from .dispatch import schedule_greedy
from .exact import solve_global
from .generators import DynamicScenario, gen_failure_job
from .model import RepairJob, StaticInstance, Wave, build_due_date_set
from .plans import ExecutablePlan, extract_executable_schedule
from .rng import Xoshiro256, derive_seed
from .rssp import ScheduledOp
from .expectation import failure_probabilities
from .model import AircraftType

READY, IN_SHOP, FLYING = "ready", "inShop", "flying"

SCHEDULERS = ("lbbd", "oracle", "dispatch", "relaxed")


@dataclass(frozen=True)
class Policy:
    """Reschedule over a horizon of ``horizon_waves``, every ``reschedule_every``."""

    horizon_waves: int
    reschedule_every: int

    def __post_init__(self):
        if not 1 <= self.reschedule_every <= self.horizon_waves:
            raise ValueError("need 1 <= reschedule frequency <= horizon length")

    @property
    def name(self) -> str:
        return f"P{self.horizon_waves}{self.reschedule_every}"


POLICIES = {"P11": Policy(1, 1), "P31": Policy(3, 1), "P33": Policy(3, 3)}


@dataclass
class SchedulerOptions:
    variant: str = "tight"
    hybrid: bool = True
    late_mode: bool = True  # applies to the exhaustive scheduler only
    fleet_fraction_base: str = "members"


def pre_flight_check(failure_rate: float, rng: Xoshiro256) -> bool:
    """True when the aircraft fails the check (u < 1 - e^-rate)."""
    return rng.random() < 1.0 - math.exp(-failure_rate)


def post_flight_check(failure_rate: float, deterioration_pct: float,
                      rng: Xoshiro256) -> tuple[float, bool]:
    """Deteriorate the rate for the completed flight, then check it.

    Returns (rate after flight, failed).  Failure uses the post-check form
    1 - e^(-3 rate) on the deteriorated rate.
    """
    new_rate = failure_rate * (1.0 + 0.01 * deterioration_pct)
    failed = rng.random() < 1.0 - math.exp(-3.0 * new_rate)
    return new_rate, failed


def select_flyers(passed: list[int], requirement: int, rng: Xoshiro256) -> list[int]:
    """Everyone flies if the requirement allows, else a uniform subset."""
    if len(passed) <= requirement:
        return list(passed)
    return sorted(rng.sample(passed, requirement))


def relaxed_ready_time(job: RepairJob, failure_time: int) -> int:
    """Capacity-free readiness: the longest single operation after failure."""
    return failure_time + job.max_processing_time


@dataclass
class CoverageTrace:
    label: str
    policy: str
    scheduler: str
    seed: int
    nus: list[float] = field(default_factory=list)
    coverage_mean: list[float] = field(default_factory=list)  # running mean of nus
    rhos: list[tuple[int, float]] = field(default_factory=list)      # (wave, ready fraction)
    decisions: list[tuple[int, float]] = field(default_factory=list)  # (first wave, millis)
    executed: dict[int, list[ScheduledOp]] | None = None

    def observed_coverage(self, upto: int = 28) -> float:
        head = self.nus[:upto]
        return sum(head) / len(head)

    @property
    def rho_mean(self) -> float:
        return sum(v for _, v in self.rhos) / len(self.rhos)


@dataclass
class _AircraftState:
    aircraft_id: int
    type_id: int
    status: str
    rate: float
    pre_rate: float
    ready_from: int = 0


@dataclass
class _ShopJob:
    job: RepairJob
    arrived: int
    committed: dict[int, int] = field(default_factory=dict)  # trade -> absolute start
    logged: set[int] = field(default_factory=set)
    completion: int | None = None


# whole-decision memo: dynamic runs repeatedly pose identical sub-problems
# (notably the initial one across replications); solving is deterministic,
# so the committed plan can be reused
_plan_cache: dict[tuple, ExecutablePlan] = {}
_PLAN_CACHE_MAX = 60_000


def _instance_key(instance: StaticInstance) -> tuple:
    return (
        tuple((t.id, t.member_count, t.ready_count, t.mean_failure_rate) for t in instance.types),
        tuple((t.id, t.capacity) for t in instance.trades),
        tuple((w.start_time, w.end_time, tuple(sorted(w.requirement.items())))
              for w in instance.waves),
        tuple(
            (j.id, j.type_id,
             tuple((o.trade_id, o.processing_time, o.capacity_demand) for o in j.operations),
             tuple(sorted(j.fixed_starts.items())))
            for j in instance.jobs
        ),
    )


class _Simulation:
    def __init__(self, scenario: DynamicScenario, policy: Policy, scheduler: str,
                 seed: int, per_decision_budget: float | None,
                 options: SchedulerOptions, collect_audit: bool):
        if scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler: {scheduler}")
        self.scenario = scenario
        self.policy = policy
        self.scheduler = scheduler
        self.budget = per_decision_budget
        self.options = options
        self.collect_audit = collect_audit
        self.rng_fail = Xoshiro256(derive_seed(seed, "failures"))
        self.rng_select = Xoshiro256(derive_seed(seed, "selection"))
        self.rng_jobgen = Xoshiro256(derive_seed(seed, "jobgen"))
        self.clock = 0
        self.aircraft = {a.id: a for a in scenario.aircraft}
        initial_shop = {j.aircraft_id for j in scenario.jobs}
        self.states = {
            a.id: _AircraftState(
                aircraft_id=a.id, type_id=a.type_id,
                status=IN_SHOP if a.id in initial_shop else READY,
                rate=a.failure_rate, pre_rate=a.failure_rate,
            )
            for a in scenario.aircraft
        }
        self.shop: dict[int, _ShopJob] = {
            j.id: _ShopJob(job=j, arrived=0) for j in scenario.jobs
        }
        if scheduler == "relaxed":
            for sj in self.shop.values():
                sj.completion = relaxed_ready_time(sj.job, 0)
        self.next_job_id = max((j.id for j in scenario.jobs), default=0) + 1
        self.executed: dict[int, list[ScheduledOp]] = {t.id: [] for t in scenario.trades}
        self.pending_rho: set[int] = set()
        self.trace = CoverageTrace(label=scenario.label, policy=policy.name,
                                   scheduler=scheduler, seed=seed)

    # -- time ---------------------------------------------------------------

    def advance(self, to_time: int) -> None:
        """Move the clock forward: log starting work, release finished jobs."""
        for job_id in sorted(self.shop):
            sj = self.shop[job_id]
            for op in sj.job.operations:
                start = sj.committed.get(op.trade_id)
                if start is not None and start < to_time and op.trade_id not in sj.logged:
                    self.executed[op.trade_id].append(
                        ScheduledOp(job_id, start, start + op.processing_time,
                                    op.capacity_demand))
                    sj.logged.add(op.trade_id)
        done = sorted(
            (sj.completion, job_id) for job_id, sj in self.shop.items()
            if sj.completion is not None and sj.completion <= to_time
        )
        for completion, job_id in done:
            sj = self.shop.pop(job_id)
            state = self.states[sj.job.aircraft_id]
            state.status = READY
            state.ready_from = completion
            state.rate = state.pre_rate  # minimal repair: restore the snapshot
        self.clock = to_time

    # -- failures -----------------------------------------------------------

    def enter_shop(self, state: _AircraftState, when: int) -> None:
        state.pre_rate = state.rate
        job = gen_failure_job(self.aircraft[state.aircraft_id], self.scenario.trades,
                              self.rng_jobgen, self.next_job_id)
        self.next_job_id += 1
        sj = _ShopJob(job=job, arrived=when)
        if self.scheduler == "relaxed":
            sj.completion = relaxed_ready_time(job, when)
        self.shop[job.id] = sj
        state.status = IN_SHOP

    # -- scheduling ---------------------------------------------------------

    def build_subproblem(self, first_pos: int, horizon: int) -> StaticInstance:
        origin = self.clock
        sub_waves = tuple(
            Wave(id=w.id, start_time=w.start_time - origin, end_time=w.end_time - origin,
                 requirement=dict(w.requirement))
            for w in self.scenario.waves[first_pos - 1:first_pos - 1 + horizon]
        )
        sub_jobs = []
        for job_id in sorted(self.shop):
            sj = self.shop[job_id]
            remaining = []
            fixed: dict[int, int] = {}
            for op in sj.job.operations:
                start = sj.committed.get(op.trade_id)
                if start is not None and start + op.processing_time <= origin:
                    continue  # already finished
                remaining.append(op)
                if start is not None and start < origin:
                    fixed[op.trade_id] = start - origin
            sub_jobs.append(RepairJob(id=job_id, type_id=sj.job.type_id,
                                      aircraft_id=sj.job.aircraft_id,
                                      operations=tuple(remaining), fixed_starts=fixed))
        types = []
        for t in self.scenario.types:
            members = [s for s in self.states.values() if s.type_id == t.id]
            assert all(s.status != FLYING for s in members), "epochs happen between waves"
            mean_rate = sum(s.rate for s in members) / len(members)
            pre, post = failure_probabilities(mean_rate)
            ready = sum(1 for s in members if s.status == READY)
            types.append(AircraftType(
                id=t.id, member_count=len(members), ready_count=ready,
                mean_failure_rate=mean_rate, pre_fail_prob=pre, post_fail_prob=post,
            ))
        jobs = tuple(sub_jobs)
        return StaticInstance(types=tuple(types), trades=self.scenario.trades,
                              waves=sub_waves, jobs=jobs,
                              due_dates=build_due_date_set(sub_waves, jobs))

    def _solve(self, instance: StaticInstance) -> ExecutablePlan:
        key = (self.scheduler, self.options.variant, self.options.hybrid,
               self.options.late_mode, self.budget, _instance_key(instance))
        hit = _plan_cache.get(key)
        if hit is not None:
            return hit
        if self.scheduler == "dispatch":
            plan = schedule_greedy(
                instance, fleet_fraction_base=self.options.fleet_fraction_base).plan(instance)
        elif self.scheduler == "lbbd":
            report = solve_lbbd(instance, variant=self.options.variant,
                                hybrid=self.options.hybrid, budget=self.budget)
            if report.status == "optimal":
                plan = executable_plan(instance, report)
            else:  # no executable schedule on timeout: run the dispatch rule
                plan = schedule_greedy(instance).plan(instance)
        else:  # oracle role: incumbent-carrying, so timeouts still execute
            solution = solve_global(instance, budget=self.budget,
                                    late_mode=self.options.late_mode)
            plan = extract_executable_schedule(instance, solution.assignment,
                                               solution.schedules)
        if len(_plan_cache) >= _PLAN_CACHE_MAX:
            _plan_cache.clear()
        _plan_cache[key] = plan
        return plan

    def schedule_epoch(self, first_pos: int) -> None:
        horizon = min(self.policy.horizon_waves,
                      len(self.scenario.waves) - first_pos + 1)
        if horizon <= 0:
            return
        self.pending_rho.add(first_pos)
        if self.scheduler == "relaxed":
            self.trace.decisions.append((first_pos, 0.0))
            return
        if not self.shop:
            self.trace.decisions.append((first_pos, 0.0))
            return
        t0 = time.perf_counter()
        instance = self.build_subproblem(first_pos, horizon)
        plan = self._solve(instance)
        self.trace.decisions.append((first_pos, (time.perf_counter() - t0) * 1000.0))
        origin = self.clock
        for trade_id, ops in plan.trade_ops.items():
            for op in ops:
                sj = self.shop[op.job_id]
                absolute = op.start + origin
                old = sj.committed.get(trade_id)
                if old is not None and old < origin:
                    assert absolute == old, "in-progress operations must not move"
                else:
                    sj.committed[trade_id] = absolute
        for sj in self.shop.values():
            ends = [
                sj.committed[op.trade_id] + op.processing_time
                for op in sj.job.operations if op.trade_id in sj.committed
            ]
            assert len(ends) == len(sj.job.operations), "plan must place every operation"
            sj.completion = max(ends)

    # -- main loop ----------------------------------------------------------

    def run(self) -> CoverageTrace:
        gamma = self.scenario.deterioration_pct
        self.schedule_epoch(1)
        total = 0.0
        for pos, wave in enumerate(self.scenario.waves, start=1):
            self.advance(wave.start_time)
            if pos in self.pending_rho:
                ready = sum(1 for s in self.states.values() if s.status == READY)
                self.trace.rhos.append((pos, ready / len(self.states)))
            # pre-flight checks for every ready aircraft, requirement or not
            for aid in sorted(self.states):
                state = self.states[aid]
                if state.status == READY and pre_flight_check(state.rate, self.rng_fail):
                    self.enter_shop(state, wave.start_time)
            flyers: list[int] = []
            for t in self.scenario.types:
                passed = [aid for aid in sorted(self.states)
                          if self.states[aid].status == READY
                          and self.states[aid].type_id == t.id]
                flyers.extend(select_flyers(passed, wave.requires(t.id), self.rng_select))
            requirement_total = sum(wave.requirement.values())
            nu = len(flyers) / requirement_total if requirement_total else 1.0
            for aid in flyers:
                self.states[aid].status = FLYING
            self.trace.nus.append(nu)
            total += nu
            self.trace.coverage_mean.append(total / pos)

            self.advance(wave.end_time)
            for aid in sorted(flyers):
                state = self.states[aid]
                state.rate, failed = post_flight_check(state.rate, gamma, self.rng_fail)
                if failed:
                    self.enter_shop(state, wave.end_time)
                else:
                    state.status = READY
                    state.ready_from = wave.end_time
            counts = {READY: 0, IN_SHOP: 0, FLYING: 0}
            for s in self.states.values():
                counts[s.status] += 1
            assert counts[FLYING] == 0 and sum(counts.values()) == len(self.states), \
                "aircraft conservation violated"
            assert counts[IN_SHOP] == len(self.shop), "shop census mismatch"
            if pos % self.policy.reschedule_every == 0 and pos < len(self.scenario.waves):
                self.schedule_epoch(pos + 1)
        if self.collect_audit:
            self.trace.executed = {r: list(v) for r, v in self.executed.items()}
        return self.trace


def run_simulation(scenario: DynamicScenario,
                   policy: Policy | str,
                   scheduler: str = "lbbd",
                   seed: int = 0,
                   per_decision_budget: float | None = 5.0,
                   options: SchedulerOptions | None = None,
                   collect_audit: bool = False) -> CoverageTrace:
    """Simulate the scenario under one policy/scheduler pair.

    Deterministic: the same (scenario, policy, scheduler, seed) yields an
    identical trace.  Scheduler timeouts fall back per role: the
    decomposition scheduler executes the dispatch schedule, the exhaustive
    scheduler executes its incumbent, the dispatch rule cannot time out.
    """
    if isinstance(policy, str):
        policy = POLICIES[policy]
    sim = _Simulation(scenario, policy, scheduler, seed, per_decision_budget,
                      options or SchedulerOptions(), collect_audit)
    return sim.run()
