"""Due-date assignment master problem.

An exact branch-and-bound over complete due-date assignments, maximising
expected coverage subject to (a) a per-trade capacity relaxation -- either
the single "area within capacity times latest due date" bound or its
tighter per-wave-prefix variant -- and (b) accumulated Benders cuts, each
forbidding the region of assignments in which every job on one trade keeps
a due-date index at or below a recorded ceiling.

Branching is over jobs in descending processing-area order, values tried
earliest index first; the optimistic bound assumes every remaining job
arrives before the first wave and that aircraft survive all checks, which
dominates every completion's true objective.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .expectation import CoverageEvaluator, DueDateAssignment, FlowPlan
from .model import StaticInstance


@dataclass(frozen=True)
class BendersCut:
    """Forbids assignments where every listed job stays at or below its ceiling.

    The ceiling records the due-date indices of one infeasible master
    solution on one trade; an assignment satisfies the cut when at least
    one job on the trade moves to a strictly later index.
    """

    trade_id: int
    ceiling: dict[int, int] = field(hash=False)

    def jobs(self) -> tuple[int, ...]:
        return tuple(sorted(self.ceiling))


def cut_violated(assignment: DueDateAssignment | dict[int, int], cut: BendersCut) -> bool:
    """True when the assignment lies in the cut's forbidden region."""
    indices = assignment.due_index if isinstance(assignment, DueDateAssignment) else assignment
    return all(indices[j] <= bound for j, bound in cut.ceiling.items())


def effective_area(job, trade_id: int) -> int:
    """Processing area of the job's operation counted inside [0, infinity).

    A pinned operation that started before the horizon origin only loads
    the trade for its remaining part, so only that part enters the area
    relaxations; counting the full rectangle would cut off assignments
    whose sub-problems are perfectly feasible.
    """
    op = job.operation_on(trade_id)
    start = job.fixed_starts.get(trade_id)
    if start is not None and start < 0:
        return op.capacity_demand * max(0, start + op.processing_time)
    return op.capacity_demand * op.processing_time


def relaxation_holds_basic(instance: StaticInstance,
                           assignment: DueDateAssignment | dict[int, int],
                           trade_id: int) -> bool:
    """Total processing area on the trade fits before the latest assigned date."""
    indices = assignment.due_index if isinstance(assignment, DueDateAssignment) else assignment
    jobs = instance.jobs_on_trade(trade_id)
    if not jobs:
        return True
    capacity = instance.trade_by_id(trade_id).capacity
    area = sum(effective_area(j, trade_id) for j in jobs)
    latest = max(instance.due_dates.date_of(indices[j.id]) for j in jobs)
    return area <= capacity * latest


def relaxation_holds_tight(instance: StaticInstance,
                           assignment: DueDateAssignment | dict[int, int],
                           trade_id: int) -> bool:
    """Every wave-start prefix has room for the area due within it."""
    indices = assignment.due_index if isinstance(assignment, DueDateAssignment) else assignment
    jobs = instance.jobs_on_trade(trade_id)
    if not jobs:
        return True
    capacity = instance.trade_by_id(trade_id).capacity
    for wave in instance.waves:
        cutoff = wave.start_time
        area = 0
        for j in jobs:
            if instance.due_dates.date_of(indices[j.id]) <= cutoff:
                area += effective_area(j, trade_id)
        if area > capacity * cutoff:
            return False
    return True


@dataclass
class MasterSolution:
    assignment: DueDateAssignment
    flow: FlowPlan
    objective: int


@dataclass
class MasterResult:
    status: str  # "optimal" | "infeasible" | "timeout"
    solution: MasterSolution | None = None
    # further optimal-objective assignments in search order (first equals
    # solution.assignment); consumers must re-check any cuts added later
    pool: list[dict[int, int]] = field(default_factory=list)


def allowed_indices(instance: StaticInstance, job) -> tuple[int, ...]:
    """Due-date indices not trivially infeasible for the job on its own.

    A job cannot meet a date earlier than its longest remaining operation
    (or a pinned operation's end); the sentinel index is always allowed.
    """
    dds = instance.due_dates
    min_end = 0
    for op in job.operations:
        if op.trade_id in job.fixed_starts:
            min_end = max(min_end, job.fixed_starts[op.trade_id] + op.processing_time)
        else:
            min_end = max(min_end, op.processing_time)
    ok = [i for i in range(1, dds.b_index) if dds.date_of(i) >= min_end]
    ok.append(dds.b_index)
    return tuple(ok)


class _MasterSearch:
    """Shared branch-and-bound state; also reused by the exhaustive solver."""

    def __init__(self, instance: StaticInstance, evaluator: CoverageEvaluator):
        self.instance = instance
        self.evaluator = evaluator
        dds = instance.due_dates
        self.b_index = dds.b_index
        self.wave_count = instance.wave_count
        # branch order: descending total processing area, then job id
        self.jobs = sorted(
            instance.jobs,
            key=lambda j: (-sum(op.processing_time * op.capacity_demand for op in j.operations), j.id),
        )
        # late values first: of two equal-coverage assignments the one with
        # componentwise later dates is always at least as schedulable, so the
        # first optimum found needs the fewest cuts downstream
        self.values = [tuple(reversed(allowed_indices(instance, j))) for j in self.jobs]
        self.job_pos = {j.id: i for i, j in enumerate(self.jobs)}
        self.dates = dds.dates
        # per-type incremental arrival counts and bound data
        self.type_ids = [t.id for t in instance.types]
        self.type_pos = {k: i for i, k in enumerate(self.type_ids)}
        self.job_type_pos = [self.type_pos[j.type_id] for j in self.jobs]
        self.arrivals = [[0] * self.wave_count for _ in self.type_ids]
        self.remaining = [0] * len(self.type_ids)
        for j in self.jobs:
            self.remaining[self.type_pos[j.type_id]] += 1

    def _type_bound(self, ti: int) -> int:
        return self.evaluator.best_completion(
            self.type_ids[ti], tuple(self.arrivals[ti]), self.remaining[ti])

    def reset_bound(self) -> None:
        self._contrib = [self._type_bound(ti) for ti in range(len(self.type_ids))]
        self._bound = sum(self._contrib)

    def bound(self) -> int:
        """Optimistic objective: each type's remaining jobs placed as well as
        capacity-free placement allows (memoised per arrival pattern).

        Maintained incrementally: an assignment only moves one type's
        contribution."""
        return self._bound

    def assign_type_counts(self, pos: int, index: int) -> int:
        ti = self.job_type_pos[pos]
        self.remaining[ti] -= 1
        if index < self.b_index:
            self.arrivals[ti][index - 1] += 1
        previous = self._contrib[ti]
        fresh = self._type_bound(ti)
        self._contrib[ti] = fresh
        self._bound += fresh - previous
        return previous

    def unassign_type_counts(self, pos: int, index: int, previous: int) -> None:
        ti = self.job_type_pos[pos]
        self.remaining[ti] += 1
        if index < self.b_index:
            self.arrivals[ti][index - 1] -= 1
        self._bound += previous - self._contrib[ti]
        self._contrib[ti] = previous


class _TradeState:
    """Incremental relaxation bookkeeping for one trade."""

    __slots__ = ("capacity", "wave_starts", "limits", "member_pos", "area",
                 "total_area", "unassigned", "max_date", "prefix")

    def __init__(self, instance: StaticInstance, trade_id: int, search: _MasterSearch):
        trade = instance.trade_by_id(trade_id)
        self.capacity = trade.capacity
        self.wave_starts = [w.start_time for w in instance.waves]
        self.limits = [self.capacity * s for s in self.wave_starts]
        self.member_pos: dict[int, int] = {}
        self.area: dict[int, int] = {}
        for j in instance.jobs_on_trade(trade_id):
            pos = search.job_pos[j.id]
            self.member_pos[pos] = j.id
            self.area[pos] = effective_area(j, trade_id)
        self.total_area = sum(self.area.values())
        self.unassigned = len(self.member_pos)
        self.max_date = 0
        self.prefix = [0] * len(self.wave_starts)

    def place(self, pos: int, date: int) -> tuple[tuple[int, int], bool]:
        """Apply one assignment; returns (undo token, prefix areas within limits)."""
        token = (self.unassigned, self.max_date)
        self.unassigned -= 1
        if date > self.max_date:
            self.max_date = date
        area = self.area[pos]
        prefix = self.prefix
        ok = True
        for w, cutoff in enumerate(self.wave_starts):
            if date <= cutoff:
                value = prefix[w] + area
                prefix[w] = value
                if value > self.limits[w]:
                    ok = False
        return token, ok

    def unassign(self, pos: int, date: int, token: tuple[int, int]) -> None:
        self.unassigned, self.max_date = token
        area = self.area[pos]
        prefix = self.prefix
        for w, cutoff in enumerate(self.wave_starts):
            if date <= cutoff:
                prefix[w] -= area

    def basic_ok(self, b_value: int) -> bool:
        # with unassigned members the sentinel date is still reachable
        latest = b_value if self.unassigned else self.max_date
        return self.total_area <= self.capacity * latest


def _cut_check_buckets(cuts, search: _MasterSearch, b_index: int):
    """Group cuts by the depth at which they become decidable.

    A job whose ceiling is the sentinel index can never move later, so a
    cut is escaped only by its other jobs; once the deepest of those is
    assigned, the cut is decided.  Each bucket entry is the list of
    (position, ceiling) pairs that must not all hold for the node to live.
    """
    buckets: list[list[list[tuple[int, int]]]] = [[] for _ in search.jobs]
    always_dead = False
    for cut in cuts:
        escapable = [(search.job_pos[j], bound) for j, bound in cut.ceiling.items()
                     if bound < b_index]
        if not escapable:
            always_dead = True  # every member is pinned at the sentinel
            continue
        last = max(pos for pos, _ in escapable)
        buckets[last].append(escapable)
    return buckets, always_dead


def maximize_lateness(instance: StaticInstance, evaluator: CoverageEvaluator,
                      assignment: dict[int, int], objective: int) -> dict[int, int]:
    """Push each job to the latest due index that keeps the objective.

    A componentwise-later assignment of equal coverage satisfies the area
    relaxations and all cuts whenever the original did (due dates only
    relax), and is always at least as schedulable, so the returned
    assignment is the better representative of its objective class.
    """
    pushed = dict(assignment)
    b_index = instance.due_dates.b_index
    waves = instance.wave_count
    arrivals = {t.id: [0] * waves for t in instance.types}
    for job in instance.jobs:
        idx = pushed[job.id]
        if idx < b_index:
            arrivals[job.type_id][idx - 1] += 1
    contrib = {k: evaluator.flow_for_type(k, tuple(arr))[0]
               for k, arr in arrivals.items()}
    total = sum(contrib.values())
    for job in sorted(instance.jobs, key=lambda j: j.id):
        current = pushed[job.id]
        if current == b_index:
            continue
        k = job.type_id
        arr = arrivals[k]
        for idx in range(b_index, current, -1):
            trial = list(arr)
            trial[current - 1] -= 1
            if idx < b_index:
                trial[idx - 1] += 1
            value = evaluator.flow_for_type(k, tuple(trial))[0]
            if total - contrib[k] + value == objective:
                pushed[job.id] = idx
                arrivals[k] = trial
                total += value - contrib[k]
                contrib[k] = value
                break
    return pushed


def solve_master(instance: StaticInstance,
                 cuts: list[BendersCut] | tuple[BendersCut, ...] = (),
                 variant: str = "tight",
                 lower_bound: int = 0,
                 budget: float | None = None,
                 evaluator: CoverageEvaluator | None = None,
                 pool_size: int = 1) -> MasterResult:
    """Maximise expected coverage subject to the relaxation and all cuts.

    Exact when the budget is not exhausted; on timeout the incumbent (best
    assignment found so far) is returned.  When no assignment reaches
    ``lower_bound`` the result is "infeasible" -- with a lower bound taken
    from the dispatch heuristic that signals a bug, since the heuristic's
    own assignment always satisfies relaxation and cuts.

    ``pool_size`` > 1 additionally collects that many optimal-objective
    assignments (the first ties in search order), which lets the
    decomposition driver try several candidates per search.
    """
    if variant not in ("basic", "tight"):
        raise ValueError(f"unknown relaxation variant: {variant}")
    evaluator = evaluator or CoverageEvaluator(instance)
    search = _MasterSearch(instance, evaluator)
    b_index = search.b_index
    b_value = instance.due_dates.b_value
    trade_states = {t.id: _TradeState(instance, t.id, search) for t in instance.trades}
    job_trades = [
        [trade_states[op.trade_id] for op in j.operations] for j in search.jobs
    ]
    cut_buckets, always_dead = _cut_check_buckets(cuts, search, b_index)
    if always_dead:
        return MasterResult("infeasible")

    if variant == "basic":
        for ts in trade_states.values():
            if ts.total_area > ts.capacity * b_value:
                return MasterResult("infeasible")

    deadline = None if budget is None else time.monotonic() + budget
    indices = [0] * len(search.jobs)
    best_obj = lower_bound - 1
    pool: list[dict[int, int]] = []
    node_count = 0
    timed_out = False

    last_depth = len(search.jobs)
    is_tight = variant == "tight"
    token_stack = [[None] * len(jt) for jt in job_trades]
    dates = search.dates

    def descend(depth: int) -> None:
        nonlocal best_obj, node_count, timed_out
        node_count += 1
        if deadline is not None and node_count % 2048 == 0 and time.monotonic() > deadline:
            timed_out = True
            return
        trades = job_trades[depth]
        tokens = token_stack[depth]
        buckets = cut_buckets[depth]
        at_leaf = depth + 1 == last_depth
        for index in search.values[depth]:
            date = dates[index - 1]
            indices[depth] = index
            ok = True
            for i, ts in enumerate(trades):
                tokens[i], fits = ts.place(depth, date)
                if not fits:
                    ok = False
            if not is_tight:
                ok = all(ts.basic_ok(b_value) for ts in trades)
            bound_token = search.assign_type_counts(depth, index)
            if ok:
                for escapable in buckets:
                    if all(indices[pos] <= ceiling for pos, ceiling in escapable):
                        ok = False  # the cut's forbidden region is now locked in
                        break
            if ok:
                bound = search.bound()
                if (bound < lower_bound or bound < best_obj
                        or (bound == best_obj and len(pool) >= pool_size)):
                    ok = False
                elif at_leaf:
                    # everything assigned: the bound is the exact objective
                    if bound > best_obj:
                        best_obj = bound
                        pool.clear()
                        pool.append({j.id: indices[search.job_pos[j.id]]
                                     for j in search.jobs})
                    elif bound == best_obj and len(pool) < pool_size:
                        pool.append({j.id: indices[search.job_pos[j.id]]
                                     for j in search.jobs})
                    ok = False
            if ok:
                descend(depth + 1)
            search.unassign_type_counts(depth, index, bound_token)
            for i, ts in enumerate(trades):
                ts.unassign(depth, date, tokens[i])
            if timed_out:
                return

    if len(search.jobs) == 0:
        obj = evaluator.objective_from_arrivals({k: (0,) * search.wave_count for k in search.type_ids})
        if obj >= lower_bound:
            best_obj = obj
            pool.append({})
    else:
        search.reset_bound()
        descend(0)

    if not pool:
        return MasterResult("timeout" if timed_out else "infeasible")
    pushed = []
    seen: set[tuple] = set()
    for leaf in pool:
        late = maximize_lateness(instance, evaluator, leaf, best_obj)
        key = tuple(sorted(late.items()))
        if key not in seen:  # distinct leaves can push to the same assignment
            seen.add(key)
            pushed.append(late)
    assignment = DueDateAssignment(pushed[0])
    flow = evaluator.flow_plan(assignment)
    solution = MasterSolution(assignment=assignment, flow=flow, objective=best_obj)
    return MasterResult("timeout" if timed_out else "optimal", solution, pool=pushed)
