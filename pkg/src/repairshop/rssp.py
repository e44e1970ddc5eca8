"""Repair scheduling sub-problem: per-trade deadline feasibility.

Given one trade and a set of operations with deadlines, decide whether
start times exist such that the concurrent capacity demand never exceeds
the trade capacity, and produce a witness schedule if so.  The solver is a
complete backtracking search: it branches chronologically on the operation
with the tightest latest start, runs timetable (compulsory-part)
propagation after every commitment, and backtracks on wipeout.

Operations already under way are pinned to their committed start; blocks
without identity (pinned work of jobs outside the sub-problem) enter as a
background profile.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache


@dataclass(frozen=True)
class OpDemand:
    """One operation to place: job, duration, demand, deadline, optional pin."""

    job_id: int
    processing_time: int
    capacity_demand: int
    deadline: int
    fixed_start: int | None = None


@dataclass(frozen=True)
class ScheduledOp:
    """A placed operation on one trade."""

    job_id: int
    start: int
    end: int
    capacity_demand: int


@dataclass(frozen=True)
class TradeSchedule:
    """Start/end times of the operations placed on one trade."""

    trade_id: int
    entries: tuple[ScheduledOp, ...]

    def start_of(self, job_id: int) -> int:
        for e in self.entries:
            if e.job_id == job_id:
                return e.start
        raise KeyError(job_id)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    schedule: TradeSchedule | None = None


class SearchSpaceError(RuntimeError):
    """Brute-force enumeration refused: the start-time grid is too large."""


def _span(demands, background) -> tuple[int, int]:
    lo, hi = 0, 1
    for d in demands:
        est = d.fixed_start if d.fixed_start is not None else 0
        lo = min(lo, est)
        hi = max(hi, d.deadline, est + d.processing_time)
    for start, p, _ in background:
        lo = min(lo, start)
        hi = max(hi, start + p)
    return lo, hi


class _Profile:
    """Per-tick usage counts over a fixed window, with add/remove."""

    def __init__(self, lo: int, hi: int):
        self.lo = lo
        self.used = [0] * (hi - lo)

    def add(self, start: int, end: int, amount: int) -> None:
        for t in range(start - self.lo, end - self.lo):
            self.used[t] += amount


def timetable_propagate(domains: list[tuple[int, int]],
                        demands: list[OpDemand],
                        capacity: int,
                        background: tuple[tuple[int, int, int], ...] = ()) -> list[tuple[int, int]] | None:
    """Shrink [earliest, latest] start domains by compulsory-part reasoning.

    An operation whose domain forces overlap with itself ([latest, earliest
    + duration)) occupies that window in every completion; the aggregated
    compulsory profile must stay within capacity and other operations'
    domain endpoints are pushed off it.  Returns the shrunk domains, or
    None on wipeout.  Domains only ever shrink.
    """
    if not demands:
        return list(domains)
    lo, hi = _span(demands, background)
    doms = list(domains)
    changed = True
    while changed:
        changed = False
        profile = _Profile(lo, hi)
        for start, p, c in background:
            profile.add(start, start + p, c)
        compulsory: list[tuple[int, int] | None] = []
        for (est, lst), d in zip(doms, demands):
            if lst < est:
                return None
            c_lo, c_hi = lst, est + d.processing_time
            if c_lo < c_hi:
                compulsory.append((c_lo, c_hi))
                profile.add(c_lo, c_hi, d.capacity_demand)
            else:
                compulsory.append(None)
        if max(profile.used, default=0) > capacity:
            return None
        for i, d in enumerate(demands):
            est, lst = doms[i]
            if d.fixed_start is not None:
                continue
            own = compulsory[i]

            def fits(t: int) -> bool:
                # own compulsory contribution is subtracted where it overlaps
                top = 0
                for u in range(t, t + d.processing_time):
                    use = profile.used[u - profile.lo]
                    if own and own[0] <= u < own[1]:
                        use -= d.capacity_demand
                    if use > top:
                        top = use
                return top + d.capacity_demand <= capacity

            new_est = est
            while new_est <= lst and not fits(new_est):
                new_est += 1
            if new_est > lst:
                return None
            new_lst = lst
            while new_lst >= new_est and not fits(new_lst):
                new_lst -= 1
            if (new_est, new_lst) != (est, lst):
                doms[i] = (new_est, new_lst)
                changed = True
    return doms


def _initial_domains(demands: list[OpDemand]) -> list[tuple[int, int]] | None:
    doms = []
    for d in demands:
        if d.fixed_start is not None:
            if d.fixed_start + d.processing_time > d.deadline:
                return None
            doms.append((d.fixed_start, d.fixed_start))
        else:
            lst = d.deadline - d.processing_time
            if lst < 0:
                return None
            doms.append((0, lst))
    return doms


def _overlap(start: int, end: int, lo: int, hi: int) -> int:
    return max(0, min(end, hi) - max(start, lo))


def _area_precheck(capacity: int, demands: list[OpDemand],
                   background: tuple[tuple[int, int, int], ...]) -> bool:
    """Necessary condition: work due within [0, d] fits C * d for every deadline."""
    deadlines = sorted({d.deadline for d in demands})
    for cutoff in deadlines:
        area = 0
        for d in demands:
            if d.deadline <= cutoff:
                start = d.fixed_start if d.fixed_start is not None else 0
                if d.fixed_start is not None:
                    area += d.capacity_demand * _overlap(start, start + d.processing_time,
                                                         0, cutoff)
                else:
                    area += d.capacity_demand * d.processing_time
        for s, p, c in background:
            area += c * _overlap(s, s + p, 0, cutoff)
        if area > capacity * cutoff:
            return False
    return True


def _search_feasible(capacity: int, demands: list[OpDemand],
                     releases: list[int], latests: list[int],
                     pinned_entries: list[ScheduledOp],
                     background: tuple[tuple[int, int, int], ...]) -> list[int] | None:
    """Chronological anchored branching over left-shifted schedules.

    In any feasible schedule each operation can be left-shifted until it
    starts at its release or at the end of an operation that started
    earlier, so it suffices to build schedules start-by-start where every
    start is such an anchor.  At each node the smallest feasible anchor
    t* is found; the branches are "one of the operations able to start at
    t* does" and "none does" (which lifts those operations past t*, so
    their next anchors apply).
    """
    free = [i for i, d in enumerate(demands) if d.fixed_start is None]
    bg_entries = [ScheduledOp(-1, s, s + p, c) for s, p, c in background]

    def fits(entries: list[ScheduledOp], t: int, p: int, c: int) -> bool:
        points = [t] + [e.start for e in entries if t < e.start < t + p]
        for u in points:
            used = sum(e.capacity_demand for e in entries if e.start <= u < e.end)
            if used + c > capacity:
                return False
        return True

    def anchored_start(entries: list[ScheduledOp], i: int, floor: int) -> int | None:
        """Smallest feasible candidate start: the release or an entry end."""
        d = demands[i]
        lo = max(floor, releases[i])
        candidates = sorted(
            {releases[i]} | {e.end for e in entries}
        )
        for t in candidates:
            if t < lo or t > latests[i]:
                continue
            if fits(entries, t, d.processing_time, d.capacity_demand):
                return t
        return None

    def descend(placed: dict[int, int], entries: list[ScheduledOp],
                floors: list[int]) -> bool:
        # the skip branch loops in place: recursion depth is one per placement
        floors = list(floors)
        while True:
            if len(placed) == len(free):
                return True
            anchored: dict[int, int] = {}
            for i in free:
                if i in placed:
                    continue
                d = demands[i]
                # profile usage only grows, so an unconditional earliest start
                # past the deadline can never recover
                t_any = earliest_feasible_start(entries, capacity, d.processing_time,
                                                d.capacity_demand,
                                                lower=max(floors[i], releases[i]))
                if t_any > latests[i]:
                    return False
                t = anchored_start(entries, i, floors[i])
                if t is not None:
                    anchored[i] = t
            if not anchored:
                return False  # the next chronological start must be anchored now
            t_star = min(anchored.values())
            at_t = [i for i in sorted(anchored) if anchored[i] == t_star]
            seen: set[tuple[int, int, int, int]] = set()
            for i in at_t:
                d = demands[i]
                signature = (d.processing_time, d.capacity_demand, latests[i], floors[i])
                if signature in seen:
                    continue  # interchangeable with an already-tried twin
                seen.add(signature)
                placed[i] = t_star
                entries.append(ScheduledOp(d.job_id, t_star,
                                           t_star + d.processing_time,
                                           d.capacity_demand))
                if descend(placed, entries, floors):
                    return True
                entries.pop()
                del placed[i]
            # nobody starts at t_star: those operations wait for a later anchor
            for i in at_t:
                floors[i] = t_star + 1

    placed: dict[int, int] = {}
    if not descend(placed, pinned_entries + bg_entries, list(releases)):
        return None
    starts = [0] * len(demands)
    for i, d in enumerate(demands):
        starts[i] = d.fixed_start if d.fixed_start is not None else placed[i]
    return starts


def solve_rssp(capacity: int,
               demands: list[OpDemand] | tuple[OpDemand, ...],
               background: tuple[tuple[int, int, int], ...] = (),
               horizon_end: int | None = None,
               latest: bool = False) -> FeasibilityResult:
    """Complete feasibility search for one trade.

    ``background`` holds immovable (start, duration, demand) blocks.  With
    ``latest`` the witness places operations as late as their deadlines and
    the capacity allow (the search runs on the time-mirrored problem);
    feasibility verdicts are identical either way.  ``horizon_end`` is
    informational: all demand deadlines are expected to be at or before it.
    """
    demands = list(demands)
    if horizon_end is not None:
        assert all(d.deadline <= horizon_end or d.fixed_start is not None for d in demands), \
            "demands past the horizon should be excluded by the caller"
    if background:
        lo, hi = _span(demands, background)
        profile = _Profile(lo, hi)
        for s, p, c in background:
            profile.add(s, s + p, c)
        if max(profile.used) > capacity:
            return FeasibilityResult(False)  # pinned work alone overloads
    if not demands:
        return FeasibilityResult(True, TradeSchedule(trade_id=-1, entries=()))
    doms = _initial_domains(demands)
    if doms is None:
        return FeasibilityResult(False)
    if not _area_precheck(capacity, demands, background):
        return FeasibilityResult(False)
    doms = timetable_propagate(doms, demands, capacity, background)
    if doms is None:
        return FeasibilityResult(False)

    if latest:
        mirror = max([d.deadline for d in demands]
                     + [s + p for s, p, _ in background]
                     + [d.fixed_start + d.processing_time for d in demands
                        if d.fixed_start is not None])
        m_demands = [
            OpDemand(d.job_id, d.processing_time, d.capacity_demand, deadline=mirror,
                     fixed_start=(mirror - d.fixed_start - d.processing_time
                                  if d.fixed_start is not None else None))
            for d in demands
        ]
        m_background = tuple((mirror - s - p, p, c) for s, p, c in background)
        # domain [est, lst] mirrors to [mirror - lst - p, mirror - est - p]
        releases = [mirror - lst - d.processing_time for (est, lst), d in zip(doms, demands)]
        latests = [mirror - est - d.processing_time for (est, lst), d in zip(doms, demands)]
        pinned = [
            ScheduledOp(d.job_id, d.fixed_start, d.fixed_start + d.processing_time,
                        d.capacity_demand)
            for d in m_demands if d.fixed_start is not None
        ]
        starts = _search_feasible(capacity, m_demands, releases, latests, pinned,
                                  m_background)
        if starts is None:
            return FeasibilityResult(False)
        starts = [mirror - s - d.processing_time for s, d in zip(starts, demands)]
    else:
        releases = [est for est, _ in doms]
        latests = [lst for _, lst in doms]
        pinned = [
            ScheduledOp(d.job_id, d.fixed_start, d.fixed_start + d.processing_time,
                        d.capacity_demand)
            for d in demands if d.fixed_start is not None
        ]
        starts = _search_feasible(capacity, demands, releases, latests, pinned,
                                  background)
        if starts is None:
            return FeasibilityResult(False)

    entries = tuple(
        ScheduledOp(d.job_id, start, start + d.processing_time, d.capacity_demand)
        for d, start in zip(demands, starts)
    )
    return FeasibilityResult(True, TradeSchedule(trade_id=-1, entries=entries))


def brute_force_rssp(capacity: int,
                     demands: list[OpDemand] | tuple[OpDemand, ...],
                     background: tuple[tuple[int, int, int], ...] = (),
                     horizon_end: int | None = None,
                     cap: int = 10_000_000) -> FeasibilityResult:
    """Independent oracle: enumerate every start combination and re-check.

    Refuses (raises :class:`SearchSpaceError`) when the grid exceeds
    ``cap`` points; the differential test harness sizes its instances to
    fit.  Verdicts must match :func:`solve_rssp` exactly.
    """
    demands = list(demands)
    doms = _initial_domains(demands)
    if doms is None:
        return FeasibilityResult(False)
    size = 1
    for est, lst in doms:
        size *= lst - est + 1
        if size > cap:
            raise SearchSpaceError(f"start grid exceeds {cap} combinations")

    lo, hi = _span(demands, background)
    used = [0] * (hi - lo)
    for start, p, c in background:
        for t in range(start - lo, start + p - lo):
            used[t] += c
    if used and max(used) > capacity:
        return FeasibilityResult(False)

    starts = [est for est, _ in doms]

    def place(i: int, s: int) -> bool:
        ok = True
        for t in range(s - lo, s + demands[i].processing_time - lo):
            used[t] += demands[i].capacity_demand
            if used[t] > capacity:
                ok = False
        return ok

    def unplace(i: int, s: int) -> None:
        for t in range(s - lo, s + demands[i].processing_time - lo):
            used[t] -= demands[i].capacity_demand

    def enumerate_from(i: int) -> list[int] | None:
        if i == len(demands):
            return list(starts)
        est, lst = doms[i]
        for s in range(est, lst + 1):
            starts[i] = s
            fits = place(i, s)
            if fits:
                found = enumerate_from(i + 1)
                if found is not None:
                    return found
            unplace(i, s)
        return None

    found = enumerate_from(0)
    if found is None:
        return FeasibilityResult(False)
    entries = tuple(
        ScheduledOp(d.job_id, s, s + d.processing_time, d.capacity_demand)
        for d, s in zip(demands, found)
    )
    return FeasibilityResult(True, TradeSchedule(trade_id=-1, entries=entries))


def audit_schedule(capacity: int,
                   entries: tuple[ScheduledOp, ...] | list[ScheduledOp],
                   background: tuple[tuple[int, int, int], ...] = (),
                   upto: int | None = None) -> bool:
    """Re-sum capacity use at every integer tick; the witness checker."""
    if not entries and not background:
        return True
    lo = min([e.start for e in entries] + [b[0] for b in background], default=0)
    hi = max([e.end for e in entries] + [b[0] + b[1] for b in background], default=0)
    if upto is not None:
        hi = min(hi, upto)
    for t in range(lo, hi):
        used = sum(e.capacity_demand for e in entries if e.start <= t < e.end)
        used += sum(c for s, p, c in background if s <= t < s + p)
        if used > capacity:
            return False
    return True


def earliest_feasible_start(entries: list[ScheduledOp] | tuple[ScheduledOp, ...],
                            capacity: int,
                            processing_time: int,
                            demand: int,
                            lower: int = 0) -> int:
    """Earliest start >= lower keeping the profile within capacity.

    The earliest feasible start is either ``lower`` itself or the end of
    some placed operation, so only those candidates are scanned.
    """
    candidates = sorted({lower} | {e.end for e in entries if e.end > lower})
    for t in candidates:
        window_points = {t} | {e.start for e in entries if t < e.start < t + processing_time}
        ok = True
        for u in window_points:
            used = sum(e.capacity_demand for e in entries if e.start <= u < e.end)
            if used + demand > capacity:
                ok = False
                break
        if ok:
            return t
    raise RuntimeError("unreachable: capacity frees up after the last entry ends")


@lru_cache(maxsize=1 << 17)
def solve_rssp_cached(capacity: int,
                      demands: tuple[OpDemand, ...],
                      background: tuple[tuple[int, int, int], ...],
                      latest: bool) -> FeasibilityResult:
    """Memoised entry point used by the solvers; same contract as solve_rssp."""
    return solve_rssp(capacity, demands, background, latest=latest)
