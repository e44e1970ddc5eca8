"""Aggregation of simulation traces and the CSV schemas.

Long-format trace rows (one per wave per run) and one summary row per
(policy, scheduler) cell: mean and variance of the observed coverage up to
wave 28, mean ready fraction at sub-problem first waves, and the coverage
distribution sampled at ten thresholds.  Timing columns are measurements
and are excluded from determinism comparisons.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass

from .simulate import CoverageTrace

TRACE_SCHEMA = "repairshop-trace/1"
SUMMARY_SCHEMA = "repairshop-summary/1"
CDF_THRESHOLDS = tuple(round(0.1 * i, 1) for i in range(1, 11))


@dataclass
class TraceRecord:
    instance_id: str
    replication: int
    trace: CoverageTrace


@dataclass
class CellSummary:
    policy: str
    scheduler: str
    runs: int
    coverage_mean: float          # mean over runs of coverage up to wave 28
    coverage_var: float           # variance over runs of the same
    rho_mean: float               # mean ready fraction at sub-problem first waves
    cdf: dict[float, float]       # fraction of flights with coverage <= threshold


def summarize(records: list[TraceRecord], upto: int = 28) -> list[CellSummary]:
    cells: dict[tuple[str, str], list[TraceRecord]] = {}
    for rec in records:
        cells.setdefault((rec.trace.policy, rec.trace.scheduler), []).append(rec)
    out = []
    for (policy, scheduler) in sorted(cells):
        group = cells[(policy, scheduler)]
        o28 = [rec.trace.observed_coverage(upto) for rec in group]
        rhos = [v for rec in group for _, v in rec.trace.rhos]
        all_nus = [nu for rec in group for nu in rec.trace.nus]
        cdf = {
            omega: sum(1 for nu in all_nus if nu <= omega + 1e-12) / len(all_nus)
            for omega in CDF_THRESHOLDS
        }
        out.append(CellSummary(
            policy=policy,
            scheduler=scheduler,
            runs=len(group),
            coverage_mean=statistics.fmean(o28),
            coverage_var=statistics.variance(o28) if len(o28) > 1 else 0.0,
            rho_mean=statistics.fmean(rhos) if rhos else 0.0,
            cdf=cdf,
        ))
    return out


def spearman_rank(xs: list[float], ys: list[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("need two sequences of equal length >= 2")

    def ranks(values: list[float]) -> list[float]:
        order = sorted(range(len(values)), key=lambda i: values[i])
        out = [0.0] * len(values)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
                j += 1
            avg = (i + j) / 2 + 1
            for k in range(i, j + 1):
                out[order[k]] = avg
            i = j + 1
        return out

    rx, ry = ranks(xs), ranks(ys)
    mx, my = statistics.fmean(rx), statistics.fmean(ry)
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sx = sum((a - mx) ** 2 for a in rx) ** 0.5
    sy = sum((b - my) ** 2 for b in ry) ** 0.5
    if sx == 0 or sy == 0:
        return 0.0
    return cov / (sx * sy)


def write_trace_csv(path, records: list[TraceRecord], config: dict | None = None) -> None:
    """One row per wave per run; decision time and ready fraction appear on
    the rows of waves that begin a scheduling sub-problem."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {TRACE_SCHEMA}\n")
        for key in sorted(config or {}):
            fh.write(f"# config: {key} = {config[key]}\n")
        writer = csv.writer(fh)
        writer.writerow(["instance_id", "replication", "policy", "scheduler",
                         "wave", "nu", "coverage_mean", "epoch_rho", "decision_ms"])
        for rec in records:
            tr = rec.trace
            rho_at = dict(tr.rhos)
            ms_at = dict(tr.decisions)
            for wave_pos, nu in enumerate(tr.nus, start=1):
                writer.writerow([
                    rec.instance_id, rec.replication, tr.policy, tr.scheduler,
                    wave_pos, f"{nu:.6f}", f"{tr.coverage_mean[wave_pos - 1]:.6f}",
                    f"{rho_at[wave_pos]:.6f}" if wave_pos in rho_at else "",
                    f"{ms_at[wave_pos]:.3f}" if wave_pos in ms_at else "",
                ])


def write_summary_csv(path, cells: list[CellSummary], config: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {SUMMARY_SCHEMA}\n")
        for key in sorted(config or {}):
            fh.write(f"# config: {key} = {config[key]}\n")
        writer = csv.writer(fh)
        writer.writerow(["policy", "scheduler", "runs", "coverage28_mean",
                         "coverage28_var", "rho_mean"]
                        + [f"cdf_{omega}" for omega in CDF_THRESHOLDS])
        for cell in cells:
            writer.writerow([
                cell.policy, cell.scheduler, cell.runs,
                f"{cell.coverage_mean:.6f}", f"{cell.coverage_var:.6f}",
                f"{cell.rho_mean:.6f}",
            ] + [f"{cell.cdf[omega]:.6f}" for omega in CDF_THRESHOLDS])
