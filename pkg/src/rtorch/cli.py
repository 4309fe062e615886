"""Command-line front end: simulate, analyze, plan.

Exit codes: 0 success, 1 input error, 2 hard-criticality deadline miss
(simulate), 3 infeasible plan (plan).  Set RTORCH_LOG=debug|info|... to raise
log verbosity.  Runs are reproducible: the same scenario and seed produce
byte-identical output files.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from .admission import admit
from .model import Criticality, validate_task
from .orchestration import (
    InfeasibleError,
    OrchestratorHook,
    SystemView,
    build_plan,
    first_fit_plan,
    mc_reallocate,
    Strategy,
)
from .probability import (
    GOODNESS_POOR,
    NormalParams,
    StreamingFit,
    joint_utilization,
    miss_probability,
)
from .reporting import build_report, export_histogram, write_report_json
from .scenario import Scenario, ScenarioError, load_scenario
from .simulation import read_runtimes_csv, run_sim, write_runtimes_csv, write_trace_csv

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_HARD_MISS = 2
EXIT_INFEASIBLE = 3

log = logging.getLogger("rtorch")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; keep 2 reserved for hard misses."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rtorch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a scenario and write trace, runtimes, decisions and report")
    sim.add_argument("--scenario", required=True, help="scenario JSON file")
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim.add_argument("--duration-us", type=int, default=None, help="override the simulated duration")
    sim.add_argument("--out", default="out", help="output directory (default: ./out)")
    sim.add_argument("--no-orchestrator", action="store_true", help="force the monitoring loop off")
    sim.add_argument("--bin-width-us", type=int, default=10, help="histogram bin width (default 10)")

    ana = sub.add_parser("analyze", help="fit runtime samples and estimate the group miss probability")
    ana.add_argument("runtimes", help="CSV with header task,runtime_us")
    ana.add_argument("--u-max", type=float, default=1.0, help="utilization ceiling of the measured CPU")
    ana.add_argument("--period-us", type=int, required=True, help="task period applied to all tasks")
    ana.add_argument("--task-period", action="append", default=[], metavar="TASK=US",
                     help="per-task period override (repeatable)")
    ana.add_argument("--threshold", type=float, default=1e-2, help="flag the group above this miss probability")

    pln = sub.add_parser("plan", help="compute an allocation plan and print it as JSON")
    pln.add_argument("--scenario", required=True, help="scenario JSON file")
    pln.add_argument("--strategy", choices=[s.value for s in Strategy], default=None,
                     help="override the scenario strategy")
    pln.add_argument("--mc-samples", type=int, default=None, help="override the Monte Carlo sample count")
    pln.add_argument("--seed", type=int, default=None, help="seed for the Monte Carlo search")
    return parser


def _initial_assignments(scenario: Scenario) -> dict[str, str]:
    """Explicit plan if the scenario carries one, else first-fit by declining utilization."""
    if scenario.initial_plan is not None:
        return dict(scenario.initial_plan)
    declared = {tid: r.id for r in scenario.resources for tid in r.tasks}
    if declared:
        missing = sorted({t.id for t in scenario.tasks} - set(declared))
        if missing:
            raise ScenarioError(f"resources declare a partial assignment; unassigned: {', '.join(missing)}")
        return declared
    return first_fit_plan(scenario.tasks, scenario.resources, scenario.orchestrator.thresholds)


def cmd_simulate(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        assignments = _initial_assignments(scenario)
    except (ScenarioError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    seed = scenario.sim.seed if args.seed is None else args.seed
    duration = scenario.sim.duration_us if args.duration_us is None else args.duration_us
    hook = None
    if scenario.orchestrator.enabled and not args.no_orchestrator and len(scenario.resources) > 1:
        hook = OrchestratorHook(scenario.tasks, scenario.resources, scenario.orchestrator, base_seed=seed)

    tasks = {t.id: t for t in scenario.tasks}
    resources = {r.id: r for r in scenario.resources}
    plan = build_plan(assignments, tasks, resources)
    try:
        trace = run_sim(
            plan, scenario.tasks, scenario.resources,
            noise=scenario.sim.noise, duration_us=duration, seed=seed, hook=hook,
        )
        report = build_report(trace, bin_width_us=args.bin_width_us)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out / "trace.csv")
    write_runtimes_csv(trace, out / "runtimes.csv")
    write_report_json(report, out / "report.json")
    export_histogram(report, out / "histogram.csv")
    with open(out / "decisions.jsonl", "w") as fh:
        for record in (hook.records if hook is not None else []):
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    log.info("wrote %s", out)

    hard_tasks = {t.id for t in scenario.tasks if t.criticality is Criticality.HARD}
    hard_misses = sum(n for tid, n in trace.miss_counts().items() if tid in hard_tasks)
    if hard_misses:
        print(f"{hard_misses} hard deadline miss(es); outputs in {out}")
        return EXIT_HARD_MISS
    print(f"0 hard deadline misses; outputs in {out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        samples = read_runtimes_csv(args.runtimes)
    except (OSError, ValueError) as exc:
        print(f"error: {args.runtimes}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not samples:
        print(f"error: {args.runtimes}: no samples", file=sys.stderr)
        return EXIT_INPUT

    periods = {tid: args.period_us for tid in samples}
    for override in args.task_period:
        tid, _, value = override.partition("=")
        if tid not in samples or not value.isdigit():
            print(f"error: --task-period {override!r}: unknown task or bad period", file=sys.stderr)
            return EXIT_INPUT
        periods[tid] = int(value)

    models = []
    for tid, values in samples.items():
        fit = StreamingFit()
        for v in values:
            fit.update(v)
        try:
            params, goodness = fit.to_normal()
        except ValueError:
            print(f"error: task '{tid}' has {fit.count} samples; need at least 30", file=sys.stderr)
            return EXIT_INPUT
        flag = "  WARNING: poor normal fit" if goodness > GOODNESS_POOR else ""
        print(f"task {tid}: n={fit.count} mu={params.mu:.1f}us sigma={params.sigma:.1f}us "
              f"goodness={goodness:.4f}{flag}")
        models.append((params, periods[tid]))

    joint = joint_utilization(models)
    prob = miss_probability(joint, args.u_max)
    headroom = 1.0 - math.fsum(p.mu / period for p, period in models)
    marker = "  BREACH" if prob > args.threshold else ""
    print(f"group: joint_mu={joint.mu:.4f} joint_sigma={joint.sigma:.4f} u_max={args.u_max:g} "
          f"miss_prob={prob:.6f} buffer_at_mean={headroom:.4f}{marker}")
    return EXIT_OK


def cmd_plan(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    tasks = {t.id: t for t in scenario.tasks}
    resources = {r.id: r for r in scenario.resources}
    thresholds = scenario.orchestrator.thresholds

    # a task that admits on no resource alone can never be placed
    stuck = []
    for task in scenario.tasks:
        if not any(
            admit(res, [], task, thresholds[task.criticality]).admitted
            for res in scenario.resources
        ):
            stuck.append(task.id)
    total_util = math.fsum(t.budget_us / t.period_us for t in scenario.tasks)
    capacity = math.fsum(r.u_max for r in scenario.resources)
    if stuck or total_util > capacity:
        for tid in stuck:
            print(f"infeasible: task '{tid}' admits on no resource", file=sys.stderr)
        if total_util > capacity:
            print(f"infeasible: total utilization {total_util:.4f} exceeds capacity {capacity:.4f}",
                  file=sys.stderr)
        return EXIT_INFEASIBLE

    strategy = Strategy(args.strategy) if args.strategy else scenario.orchestrator.strategy
    mc_samples = args.mc_samples if args.mc_samples is not None else scenario.orchestrator.mc_samples
    seed = args.seed if args.seed is not None else scenario.sim.seed

    try:
        incumbent = _initial_assignments(scenario)
    except InfeasibleError as exc:
        if strategy is Strategy.NAIVE:
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        # give the random search a starting point even when first-fit gets stuck
        incumbent = {t.id: scenario.resources[0].id for t in scenario.tasks}

    if strategy is Strategy.NAIVE:
        plan = build_plan(incumbent, tasks, resources)
    else:
        view = SystemView(
            now_us=0, tasks=tasks, resources=resources,
            assignments=incumbent, fits={},
        )
        plan = mc_reallocate(view, thresholds, mc_samples, seed)
    print(json.dumps(plan.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    level = os.environ.get("RTORCH_LOG", "").upper()
    if level:
        logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    handlers = {"simulate": cmd_simulate, "analyze": cmd_analyze, "plan": cmd_plan}
    return handlers[args.command](args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
