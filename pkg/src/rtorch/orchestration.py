"""Monitoring and reallocation: breach detection, victim choice, two allocators.

Each epoch the orchestrator refits task runtimes over a sliding window,
estimates the deadline-miss probability per resource and, when a resource
breaches the strictest threshold among its hosted criticalities, moves the
task with the earliest next deadline somewhere it still fits.  The naive
allocator scores destinations by period similarity; the Monte Carlo allocator
searches random whole assignments and keeps the best objective.  A task moved
in epoch k is not moved again before epoch k+2, which stops flapping between
two marginal placements.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .admission import AdmissionVerdict, admit, runtime_params
from .model import (
    AllocationPlan,
    Criticality,
    ResourceLoad,
    ResourceState,
    TaskSpec,
)
from .probability import NormalParams, buffer, joint_utilization, miss_probability
from .simulation import PlanUpdate, SimHook, SimSnapshot

DEFAULT_THRESHOLDS: Mapping[Criticality, float] = {
    Criticality.HARD: 1e-4,
    Criticality.SOFT: 1e-2,
    Criticality.BEST_EFFORT: 1.0,
}

MIN_FIT_SAMPLES = 30
COOLDOWN_EPOCHS = 2


class Strategy(Enum):
    NAIVE = "naive"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class OrchestratorConfig:
    monitor_period_us: int = 1_000_000
    thresholds: Mapping[Criticality, float] = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    fit_window: int = 1024
    strategy: Strategy = Strategy.NAIVE
    mc_samples: int = 1000
    enabled: bool = True


@dataclass(frozen=True)
class ReallocationDecision:
    """What one epoch decided: moves, why, and any best-effort work demoted."""

    moved: tuple[tuple[str, str, str], ...]  # (task, from, to)
    trigger: tuple[str, float, float]  # (resource, miss_prob, threshold)
    evicted_best_effort: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "moved": [list(m) for m in self.moved],
            "trigger": [self.trigger[0], self.trigger[1], self.trigger[2]],
            "evicted_best_effort": list(self.evicted_best_effort),
        }


@dataclass(frozen=True)
class SystemView:
    """Frozen snapshot of everything a reallocation decision may look at."""

    now_us: int
    tasks: Mapping[str, TaskSpec]
    resources: Mapping[str, ResourceState]
    assignments: Mapping[str, str]
    fits: Mapping[str, NormalParams]
    evicted: frozenset[str] = frozenset()
    next_deadline_us: Mapping[str, int] = field(default_factory=dict)
    cooldown: frozenset[str] = frozenset()

    def hosted(self, rid: str, include_evicted: bool = False) -> list[TaskSpec]:
        return [
            self.tasks[tid]
            for tid, r in self.assignments.items()
            if r == rid and (include_evicted or tid not in self.evicted)
        ]


@dataclass(frozen=True)
class EpochEval:
    resource: str
    miss_prob: float
    threshold: float
    breached: bool


def group_threshold(tasks: Sequence[TaskSpec], thresholds: Mapping[Criticality, float]) -> float:
    """Strictest applicable threshold; permissive default for an empty group."""
    if not tasks:
        return 1.0
    return min(thresholds[t.criticality] for t in tasks)


def _group_miss_prob(
    tasks: Sequence[TaskSpec], u_max: float, fits: Mapping[str, NormalParams]
) -> float:
    if not tasks:
        return 0.0
    joint = joint_utilization([(runtime_params(t, fits), t.period_us) for t in tasks])
    return miss_probability(joint, u_max)


def evaluate_epoch(view: SystemView, config: OrchestratorConfig) -> list[EpochEval]:
    """Per-resource miss probability against the strictest hosted threshold."""
    out = []
    for rid, res in view.resources.items():
        hosted = view.hosted(rid)
        prob = _group_miss_prob(hosted, res.u_max, view.fits)
        thr = group_threshold(hosted, config.thresholds)
        out.append(EpochEval(rid, prob, thr, prob > thr))
    return out


def select_victim(view: SystemView, rid: str) -> str:
    """Task next in line on the resource: earliest next absolute deadline, then id."""
    candidates = _victim_order(view, rid)
    if not candidates:
        raise ValueError(f"resource '{rid}' hosts no tasks")
    return candidates[0]


def _victim_order(view: SystemView, rid: str) -> list[str]:
    hosted = [t.id for t in view.hosted(rid)]
    return sorted(hosted, key=lambda tid: (view.next_deadline_us.get(tid, 0), tid))


def match_score(victim: TaskSpec, hosted: Sequence[TaskSpec]) -> float:
    """Similarity of the victim's period to a resource's hosted workload.

    1 for a perfect period match, falling off with the log period ratio to the
    hosted median; an empty resource is a neutral 0.5.
    """
    if not hosted:
        return 0.5
    median_period = statistics.median(t.period_us for t in hosted)
    return 1.0 / (1.0 + abs(math.log(victim.period_us / median_period)))


def naive_reallocate(
    view: SystemView,
    victim_id: str,
    thresholds: Mapping[Criticality, float],
) -> ReallocationDecision:
    """Move the victim to the admissible resource with the best period match.

    On a less-critical destination whose best-effort tasks block admission,
    those tasks yield their budgets (they keep running at background priority)
    and are reported in ``evicted_best_effort``.  No admissible destination
    yields a decision with an empty move list.
    """
    victim = view.tasks[victim_id]
    host_rid = view.assignments[victim_id]
    host = view.resources[host_rid]
    trigger_prob = _group_miss_prob(view.hosted(host_rid), host.u_max, view.fits)
    trigger = (host_rid, trigger_prob, group_threshold(view.hosted(host_rid), thresholds))

    best: tuple[float, str] | None = None
    best_evicted: tuple[str, ...] = ()
    for rid, res in view.resources.items():
        if rid == host_rid:
            continue
        hosted = [t for t in view.hosted(rid) if t.id != victim_id]
        verdict = admit(res, hosted, victim, group_threshold(hosted + [victim], thresholds), view.fits)
        evicted: tuple[str, ...] = ()
        kept = hosted
        if not verdict.admitted and res.criticality.rank > victim.criticality.rank:
            moveable = [t for t in hosted if t.criticality is Criticality.BEST_EFFORT]
            if moveable:
                kept = [t for t in hosted if t.criticality is not Criticality.BEST_EFFORT]
                retry = admit(res, kept, victim, group_threshold(kept + [victim], thresholds), view.fits)
                if retry.admitted:
                    verdict = retry
                    evicted = tuple(sorted(t.id for t in moveable))
        if not verdict.admitted:
            continue
        score = match_score(victim, kept)
        if best is None or score > best[0] or (score == best[0] and rid < best[1]):
            best = (score, rid)
            best_evicted = evicted

    if best is None:
        return ReallocationDecision(moved=(), trigger=trigger)
    return ReallocationDecision(
        moved=((victim_id, host_rid, best[1]),),
        trigger=trigger,
        evicted_best_effort=best_evicted,
    )


def _objective(
    groups: Mapping[str, list[TaskSpec]],
    resources: Mapping[str, ResourceState],
    fits: Mapping[str, NormalParams],
    thresholds: Mapping[Criticality, float],
) -> tuple[int, float, int]:
    """(breached resources, worst miss probability, occupied resources): less is better."""
    breached = 0
    worst = 0.0
    occupied = 0
    for rid, res in resources.items():
        hosted = groups.get(rid, [])
        if not hosted:
            continue
        occupied += 1
        prob = _group_miss_prob(hosted, res.u_max, fits)
        if prob > worst:
            worst = prob
        if prob > group_threshold(hosted, thresholds):
            breached += 1
    return (breached, worst, occupied)


def plan_objective(view: SystemView, assignments: Mapping[str, str],
                   thresholds: Mapping[Criticality, float]) -> tuple[int, float, int]:
    groups: dict[str, list[TaskSpec]] = {}
    for tid, rid in assignments.items():
        if tid in view.evicted:
            continue
        groups.setdefault(rid, []).append(view.tasks[tid])
    return _objective(groups, view.resources, view.fits, thresholds)


def mc_reallocate(
    view: SystemView,
    thresholds: Mapping[Criticality, float],
    mc_samples: int,
    seed: int,
) -> AllocationPlan:
    """Randomized whole-assignment search; never worse than the incumbent plan.

    Tasks on cooldown keep their incumbent placement; the rest are assigned
    uniformly at random each sample.  The incumbent is always evaluated, so
    the returned plan's objective is <= the incumbent's.
    """
    res_ids = list(view.resources)
    movable = [tid for tid in view.tasks if tid not in view.cooldown]
    rng = np.random.default_rng(seed)

    best_assign = dict(view.assignments)
    best_obj = plan_objective(view, best_assign, thresholds)
    for _ in range(mc_samples):
        candidate = dict(view.assignments)
        picks = rng.integers(0, len(res_ids), size=len(movable))
        for tid, idx in zip(movable, picks):
            candidate[tid] = res_ids[idx]
        obj = plan_objective(view, candidate, thresholds)
        if obj < best_obj:
            best_obj = obj
            best_assign = candidate
    return build_plan(best_assign, view.tasks, view.resources, view.fits, view.evicted)


def build_plan(
    assignments: Mapping[str, str],
    tasks: Mapping[str, TaskSpec],
    resources: Mapping[str, ResourceState],
    fits: Mapping[str, NormalParams] | None = None,
    evicted: frozenset[str] = frozenset(),
) -> AllocationPlan:
    """Assemble an AllocationPlan, computing fresh per-resource load summaries."""
    fits = fits or {}
    groups: dict[str, list[TaskSpec]] = {rid: [] for rid in resources}
    for tid, rid in assignments.items():
        if tid not in evicted:
            groups[rid].append(tasks[tid])
    per_resource = {}
    for rid, res in resources.items():
        hosted = groups[rid]
        per_resource[rid] = ResourceLoad(
            buffer=buffer(hosted),
            miss_prob=_group_miss_prob(hosted, res.u_max, fits),
        )
    return AllocationPlan(assignments=dict(assignments), per_resource=per_resource)


def orchestrate_step(
    view: SystemView, config: OrchestratorConfig, mc_seed: int = 0
) -> Optional[ReallocationDecision]:
    """One monitoring epoch: detect the worst breach and decide on a move.

    Returns None when nothing breaches.  With no admissible destination (or
    every candidate victim on cooldown) the decision carries an empty move
    list so the escalation still gets logged.
    """
    evals = evaluate_epoch(view, config)
    breaches = [e for e in evals if e.breached]
    if not breaches:
        return None
    worst = max(breaches, key=lambda e: (e.miss_prob, e.resource))

    if config.strategy is Strategy.NAIVE:
        victims = [t for t in _victim_order(view, worst.resource) if t not in view.cooldown]
        if not victims:
            return ReallocationDecision(moved=(), trigger=(worst.resource, worst.miss_prob, worst.threshold))
        return naive_reallocate(view, victims[0], config.thresholds)

    plan = mc_reallocate(view, config.thresholds, config.mc_samples, mc_seed)
    moved = tuple(
        (tid, view.assignments[tid], plan.assignments[tid])
        for tid in view.assignments
        if plan.assignments[tid] != view.assignments[tid]
    )
    return ReallocationDecision(moved=moved, trigger=(worst.resource, worst.miss_prob, worst.threshold))


def window_fits(
    runtimes: Mapping[str, Sequence[int]], fit_window: int, min_count: int = MIN_FIT_SAMPLES
) -> dict[str, NormalParams]:
    """Two-pass fit over each task's most recent ``fit_window`` samples.

    Tasks with fewer than ``min_count`` samples get no entry, so consumers
    fall back to the declared execution model.
    """
    fits: dict[str, NormalParams] = {}
    for tid, samples in runtimes.items():
        window = samples[-fit_window:]
        if len(window) < min_count:
            continue
        mean = statistics.fmean(window)
        sigma = statistics.stdev(window) if len(window) > 1 else 0.0
        fits[tid] = NormalParams(mean, sigma)
    return fits


class OrchestratorHook:
    """Simulation hook driving ``orchestrate_step`` once per monitoring epoch.

    Keeps the decision log (one record per epoch, missing nothing) and the
    per-task cooldown bookkeeping across epochs.
    """

    def __init__(
        self,
        tasks: Sequence[TaskSpec],
        resources: Sequence[ResourceState],
        config: OrchestratorConfig,
        base_seed: int = 0,
    ):
        self.period_us = config.monitor_period_us
        self.config = config
        self.base_seed = base_seed
        self._tasks = {t.id: t for t in tasks}
        self._resources = {r.id: r for r in resources}
        self._last_moved: dict[str, int] = {}
        self._epoch = 0
        self.records: list[dict] = []

    def __call__(self, snapshot: SimSnapshot) -> Optional[PlanUpdate]:
        self._epoch += 1
        fits = window_fits(snapshot.runtimes, self.config.fit_window)
        cooldown = frozenset(
            tid for tid, epoch in self._last_moved.items()
            if self._epoch - epoch < COOLDOWN_EPOCHS
        )
        view = SystemView(
            now_us=snapshot.now_us,
            tasks=self._tasks,
            resources=self._resources,
            assignments=snapshot.assignments,
            fits=fits,
            evicted=snapshot.evicted,
            next_deadline_us=snapshot.next_deadline_us,
            cooldown=cooldown,
        )
        evals = evaluate_epoch(view, self.config)
        decision = orchestrate_step(view, self.config, mc_seed=self.base_seed + self._epoch)
        self.records.append({
            "time_us": snapshot.now_us,
            "per_resource": {e.resource: e.miss_prob for e in evals},
            "decision": decision.to_dict() if decision is not None else None,
        })
        if decision is None or not decision.moved:
            return None
        assignments = dict(snapshot.assignments)
        for tid, _src, dst in decision.moved:
            assignments[tid] = dst
            self._last_moved[tid] = self._epoch
        evicted = frozenset(snapshot.evicted | set(decision.evicted_best_effort))
        return PlanUpdate(assignments=assignments, evicted=evicted)


def first_fit_plan(
    tasks: Sequence[TaskSpec],
    resources: Sequence[ResourceState],
    thresholds: Mapping[Criticality, float] = DEFAULT_THRESHOLDS,
    fits: Mapping[str, NormalParams] | None = None,
) -> dict[str, str]:
    """First-fit by declining utilization; raises InfeasibleError when a task fits nowhere."""
    placed: dict[str, list[TaskSpec]] = {r.id: [] for r in resources}
    assignments: dict[str, str] = {}
    order = sorted(tasks, key=lambda t: (-(t.budget_us / t.period_us), t.id))
    for task in order:
        for res in resources:
            hosted = placed[res.id]
            thr = group_threshold(hosted + [task], thresholds)
            if admit(res, hosted, task, thr, fits).admitted:
                hosted.append(task)
                assignments[task.id] = res.id
                break
        else:
            raise InfeasibleError(task.id, f"task '{task.id}' admits on no resource")
    return assignments


class InfeasibleError(Exception):
    """No placement satisfies admission for the named task."""

    def __init__(self, task_id: str, message: str):
        super().__init__(message)
        self.task_id = task_id
