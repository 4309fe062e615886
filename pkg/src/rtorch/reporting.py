"""Run statistics: per-task runtime summaries, group skew figures, histograms.

The skew figure SKW is the (min, max) absolute deviation of per-task mean
runtimes from the group average, rounded to whole microseconds and rendered
"min/max".  SD_MX is the runtime standard deviation of the task with the
largest deviation.  Histograms bin measured runtimes on a fixed grid (10 us
by default); counts stay raw in the report and are normalized per task on
CSV export.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import find_peaks

from .simulation import SimTrace


@dataclass(frozen=True)
class TaskStats:
    count: int
    mean_us: float
    stddev_us: float
    min_us: int
    max_us: int
    miss_count: int


@dataclass(frozen=True)
class RunReport:
    per_task: Mapping[str, TaskStats]
    group_avg_us: float
    skw: tuple[int, int]
    sd_mx_us: float
    histogram: Mapping[str, list[tuple[int, int, int]]]  # (bin_lo, bin_hi, count)
    bin_width_us: int

    def to_dict(self) -> dict:
        return {
            "per_task": {
                tid: {
                    "count": s.count,
                    "mean_us": s.mean_us,
                    "stddev_us": s.stddev_us,
                    "min_us": s.min_us,
                    "max_us": s.max_us,
                    "miss_count": s.miss_count,
                }
                for tid, s in self.per_task.items()
            },
            "group_avg_us": self.group_avg_us,
            "skw": list(self.skw),
            "sd_mx_us": self.sd_mx_us,
            "bin_width_us": self.bin_width_us,
            "histogram": {
                tid: [[lo, hi, count] for lo, hi, count in bins]
                for tid, bins in self.histogram.items()
            },
        }


def _bin_runtimes(samples: Sequence[int], bin_width: int) -> list[tuple[int, int, int]]:
    lo0 = (min(samples) // bin_width) * bin_width
    n_bins = (max(samples) - lo0) // bin_width + 1
    counts = [0] * n_bins
    for r in samples:
        counts[(r - lo0) // bin_width] += 1
    return [
        (lo0 + i * bin_width, lo0 + (i + 1) * bin_width, c)
        for i, c in enumerate(counts)
    ]


def build_report(trace: SimTrace, bin_width_us: int = 10) -> RunReport:
    """Summarize a trace; every task must have completed at least one job."""
    misses = trace.miss_counts()
    per_task: dict[str, TaskStats] = {}
    for tid, samples in trace.per_task_runtimes.items():
        if not samples:
            raise ValueError(f"task '{tid}' completed no jobs")
        n = len(samples)
        mean = math.fsum(samples) / n
        var = math.fsum((x - mean) ** 2 for x in samples) / (n - 1) if n > 1 else 0.0
        per_task[tid] = TaskStats(
            count=n,
            mean_us=mean,
            stddev_us=math.sqrt(var),
            min_us=min(samples),
            max_us=max(samples),
            miss_count=misses[tid],
        )

    means = {tid: s.mean_us for tid, s in per_task.items()}
    group_avg = math.fsum(means.values()) / len(means)
    deviations = {tid: abs(m - group_avg) for tid, m in means.items()}
    skw = (round(min(deviations.values())), round(max(deviations.values())))
    # the task whose mean strays furthest from the group; ties resolve by id
    worst = max(deviations, key=lambda tid: (deviations[tid], tid))
    histogram = {
        tid: _bin_runtimes(samples, bin_width_us)
        for tid, samples in trace.per_task_runtimes.items()
    }
    return RunReport(
        per_task=per_task,
        group_avg_us=group_avg,
        skw=skw,
        sd_mx_us=per_task[worst].stddev_us,
        histogram=histogram,
        bin_width_us=bin_width_us,
    )


def export_histogram(report: RunReport, path) -> None:
    """CSV of per-task relative bin counts; each task's rel_count column sums to 1."""
    with open(path, "w", newline="") as fh:
        fh.write("task,bin_lo_us,bin_hi_us,rel_count\n")
        for tid, bins in report.histogram.items():
            total = report.per_task[tid].count
            for lo, hi, count in bins:
                fh.write(f"{tid},{lo},{hi},{count / total!r}\n")


def write_report_json(report: RunReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def render_table(report: RunReport) -> str:
    """Single summary row, columns AVG & SKW & SD_MX (AVG in whole us)."""
    avg = round(report.group_avg_us)
    lo, hi = report.skw
    return f"{avg} & {lo}/{hi} & {report.sd_mx_us:.2f}"


def histogram_modes(
    bins: Sequence[tuple[int, int, int]],
    min_prominence: float = 0.02,
    smooth: int = 3,
) -> list[int]:
    """Indices of local maxima in a task histogram, by relative prominence.

    Counts are normalized, lightly smoothed (moving average of ``smooth``
    bins) and zero-padded so edge bins can peak; ``min_prominence`` is a
    fraction of total mass.
    """
    counts = np.array([c for _, _, c in bins], dtype=float)
    total = counts.sum()
    if total == 0:
        return []
    rel = counts / total
    if smooth > 1:
        kernel = np.ones(smooth) / smooth
        rel = np.convolve(rel, kernel, mode="same")
    padded = np.concatenate([[0.0], rel, [0.0]])
    peaks, _ = find_peaks(padded, prominence=min_prominence)
    return [int(p - 1) for p in peaks]
