#!/usr/bin/env python3
"""Regenerate the bundled scenario files and the sample runtime CSV.

The unit-count series (table1_4units .. table1_10units) scales identical
pipeline stages on one CPU until the load tips past it: each stage draws
about 10.11 ms per 100 ms period once scheduling overhead and latency jitter
are added, so nine stages leave headroom and ten oversubscribe the CPU.
fig5_short adds sporadic interference so measured runtimes split into
separated histogram modes.  conveyor starts two heavy camera stages on the
same CPU, which the monitoring loop must pull apart at runtime.
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

REPO_ROOT = Path(__file__).resolve().parent.parent


def unit_scenario(n_units: int) -> dict:
    tasks = [
        {
            "id": f"unit_{i:02d}",
            "period_us": 100_000,
            "budget_us": 10_400,
            "criticality": "hard",
            "exec_model": {
                "mu_us": 10_000,
                "sigma_us": 30,
                "cutoff_lo_us": 9_950,
                "wcet_us": 10_400,
            },
        }
        for i in range(n_units)
    ]
    return {
        "tasks": tasks,
        "resources": [
            {"id": "cpu0", "policy": "EDF", "u_max": 1.0, "criticality": "hard"}
        ],
        "sim": {
            "duration_us": 60_000_000,
            "seed": 1,
            "noise": {
                "base_overhead_us": 80,
                "latency_jitter": {"mu_us": 0, "sigma_us": 80},
            },
        },
        "initial_plan": {t["id"]: "cpu0" for t in tasks},
    }


def fig5_scenario() -> dict:
    tasks = [
        {
            "id": f"stream_{i:02d}",
            "period_us": 10_000,
            "budget_us": 960,
            "criticality": "soft",
            "exec_model": {
                "mu_us": 900,
                "sigma_us": 15,
                "cutoff_lo_us": 840,
                "wcet_us": 960,
            },
        }
        for i in range(4)
    ]
    return {
        "tasks": tasks,
        "resources": [
            {"id": "cpu0", "policy": "EDF", "u_max": 1.0, "criticality": "soft"}
        ],
        "sim": {
            "duration_us": 20_000_000,
            "seed": 2,
            "noise": {
                "interference": {"rate_per_s": 250.0, "magnitude_us": 250}
            },
        },
        "initial_plan": {t["id"]: "cpu0" for t in tasks},
    }


def conveyor_scenario() -> dict:
    camera = {
        "mu_us": 56_250,
        "sigma_us": 6_250,
        "cutoff_lo_us": 31_250,
        "wcet_us": 81_250,
    }
    return {
        "tasks": [
            {
                "id": "cam_a",
                "period_us": 125_000,
                "budget_us": 62_500,
                "criticality": "hard",
                "exec_model": dict(camera),
            },
            {
                "id": "cam_b",
                "period_us": 125_000,
                "budget_us": 62_500,
                "criticality": "hard",
                "exec_model": dict(camera),
            },
            {
                "id": "bg_worker",
                "period_us": 50_000,
                "budget_us": 25_000,
                "criticality": "best_effort",
                "exec_model": {
                    "mu_us": 24_000,
                    "sigma_us": 500,
                    "cutoff_lo_us": 22_000,
                    "wcet_us": 26_000,
                },
            },
        ],
        "resources": [
            {"id": "cpu0", "policy": "EDF", "u_max": 1.0, "criticality": "hard"},
            {"id": "cpu1", "policy": "EDF", "u_max": 1.0, "criticality": "best_effort"},
        ],
        "orchestrator": {
            "enabled": True,
            "monitor_period_us": 1_000_000,
            "strategy": "naive",
            "fit_window": 1024,
            "thresholds": {"hard": 0.05},
        },
        "sim": {"duration_us": 60_000_000, "seed": 7},
        "initial_plan": {"cam_a": "cpu0", "cam_b": "cpu0", "bg_worker": "cpu1"},
    }


def write_camera_samples(path: Path, per_task: int = 400, seed: int = 123) -> None:
    rng = np.random.default_rng(seed)
    with open(path, "w", newline="") as fh:
        fh.write("task,runtime_us\n")
        for task in ("cam_x", "cam_y"):
            draws = rng.normal(56_250, 6_250, size=per_task)
            for value in draws:
                fh.write(f"{task},{max(1, int(round(value)))}\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scenario-dir", type=Path, default=REPO_ROOT / "scenarios")
    parser.add_argument("--data-dir", type=Path, default=REPO_ROOT / "data")
    args = parser.parse_args()

    args.scenario_dir.mkdir(parents=True, exist_ok=True)
    args.data_dir.mkdir(parents=True, exist_ok=True)

    files = {f"table1_{n}units.json": unit_scenario(n) for n in range(4, 11)}
    files["fig5_short.json"] = fig5_scenario()
    files["conveyor.json"] = conveyor_scenario()
    for name, data in sorted(files.items()):
        path = args.scenario_dir / name
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")

    csv_path = args.data_dir / "camera_runtimes.csv"
    write_camera_samples(csv_path)
    print(f"wrote {csv_path}")


if __name__ == "__main__":
    main()
