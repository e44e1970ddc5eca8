"""Repair-shop scheduling toolkit.

Static solvers (decomposition, exhaustive reference, dispatch heuristic)
for the capacitated aircraft repair shop, seeded instance generators, and
a deterministic simulator of the dynamic shop under rolling-horizon
rescheduling policies.
"""

from .model import (AircraftType, Aircraft, Trade, Wave, Operation, RepairJob,
                    DueDateSet, StaticInstance, build_due_date_set,
                    validate_instance, load_instance, save_instance)
from .expectation import (DueDateAssignment, FlowPlan, failure_probabilities,
                          compute_arrivals, expected_availability, optimal_flow,
                          objective_of)
from .rssp import (OpDemand, ScheduledOp, TradeSchedule, FeasibilityResult,
                   solve_rssp, brute_force_rssp, timetable_propagate,
                   audit_schedule)
from .master import (BendersCut, cut_violated, relaxation_holds_basic,
                     relaxation_holds_tight, solve_master)
from .benders import LbbdReport, solve_lbbd
from .dispatch import rank_jobs, schedule_greedy
from .exact import solve_global, enumerate_assignments
from .generators import (GenParams, DynamicScenario, gen_static, gen_dynamic,
                         gen_failure_job, load_stats)
from .simulate import (Policy, POLICIES, CoverageTrace, run_simulation,
                       pre_flight_check, post_flight_check, select_flyers,
                       relaxed_ready_time)
from .plans import extract_executable_schedule

__version__ = "0.1.0"
