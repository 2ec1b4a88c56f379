"""Repeated seeded trials and parameter sweeps.

Each trial runs one solver on a fresh ground-truth label source with its own
derived seed, then scores the returned solution against the hidden truth.
Reported runtime covers solver machine time only; the simulated oracle
answers instantly, so no labeling latency is included.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .model import QualityRequirement, Workload, precision, recall
from .oracle import GroundTruthSource
from .solvers import SOLVERS, SolverConfig
from .synth import SyntheticSpec, generate

SWEEP_AXES = ("alpha_beta", "theta", "tau", "sigma", "size")


@dataclass(frozen=True)
class TrialReport:
    """Outcome of one solver run against hidden ground truth."""

    solver: str
    seed: int
    precision: float
    recall: float
    cost_fraction: float
    success: bool
    runtime_seconds: float
    exhausted: bool = False
    error: str | None = None


@dataclass(frozen=True)
class Aggregate:
    solver: str
    n_runs: int
    mean_precision: float
    mean_recall: float
    mean_cost_fraction: float
    success_rate: float
    mean_runtime_seconds: float


def trial_seed(master_seed: int, index: int) -> int:
    """Stable per-trial seed derived from the master seed."""
    return int(np.random.SeedSequence(entropy=master_seed, spawn_key=(index,)).generate_state(1)[0])


def run_trial(workload: Workload, solver: str, config: SolverConfig) -> TrialReport:
    source = GroundTruthSource()
    started = time.perf_counter()
    try:
        solution = SOLVERS[solver](workload, config, source)
    except Exception as exc:  # a failed trial is recorded, not fatal
        return TrialReport(
            solver=solver,
            seed=config.seed,
            precision=float("nan"),
            recall=float("nan"),
            cost_fraction=source.asked_count / len(workload),
            success=False,
            runtime_seconds=time.perf_counter() - started,
            error=f"{type(exc).__name__}: {exc}",
        )
    runtime = time.perf_counter() - started
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        achieved_p = precision(workload, solution.labels)
        achieved_r = recall(workload, solution.labels)
    req = config.requirement
    return TrialReport(
        solver=solver,
        seed=config.seed,
        precision=achieved_p,
        recall=achieved_r,
        cost_fraction=solution.cost_fraction(workload),
        success=achieved_p >= req.alpha and achieved_r >= req.beta,
        runtime_seconds=runtime,
        exhausted=solution.exhausted,
    )


def aggregate(reports: Sequence[TrialReport]) -> Aggregate:
    """Exact means over completed trials; failed trials count against success."""
    if not reports:
        raise ValueError("no trials to aggregate")
    done = [r for r in reports if r.error is None]
    if not done:
        return Aggregate(reports[0].solver, len(reports), float("nan"), float("nan"),
                         float("nan"), 0.0, float("nan"))
    return Aggregate(
        solver=reports[0].solver,
        n_runs=len(reports),
        mean_precision=float(np.mean([r.precision for r in done])),
        mean_recall=float(np.mean([r.recall for r in done])),
        mean_cost_fraction=float(np.mean([r.cost_fraction for r in done])),
        success_rate=sum(r.success for r in reports) / len(reports),
        mean_runtime_seconds=float(np.mean([r.runtime_seconds for r in done])),
    )


def run_trials(
    workload_or_spec: Workload | SyntheticSpec,
    solver: str,
    config: SolverConfig,
    n_runs: int,
    master_seed: int | None = None,
) -> tuple[list[TrialReport], Aggregate]:
    """Independent trials with per-trial seeds derived from the master seed."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; choose from {sorted(SOLVERS)}")
    workload = (
        generate(workload_or_spec) if isinstance(workload_or_spec, SyntheticSpec) else workload_or_spec
    )
    master = config.seed if master_seed is None else master_seed
    reports = [
        run_trial(workload, solver, replace(config, seed=trial_seed(master, t)))
        for t in range(n_runs)
    ]
    return reports, aggregate(reports)


def sweep(
    axis: str,
    values: Iterable[float | int],
    solvers: Sequence[str],
    config: SolverConfig,
    spec: SyntheticSpec | None = None,
    workload: Workload | None = None,
    n_runs: int = 10,
    master_seed: int | None = None,
) -> list[dict]:
    """Cross-product of trials along one experiment axis.

    ``alpha_beta`` and ``theta`` vary the requirement on a fixed workload;
    ``tau``, ``sigma`` and ``size`` regenerate the synthetic workload per
    value (a spec is then required). Seeds are paired across axis values.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    for solver in solvers:
        if solver not in SOLVERS:
            raise ValueError(f"unknown solver {solver!r}")
    if axis in ("tau", "sigma", "size") and spec is None:
        raise ValueError(f"axis {axis!r} requires a synthetic spec")
    if axis in ("alpha_beta", "theta") and workload is None and spec is None:
        raise ValueError(f"axis {axis!r} requires a workload or a spec")
    if workload is None and spec is not None and axis in ("alpha_beta", "theta"):
        workload = generate(spec)

    rows: list[dict] = []
    for value in values:
        cfg = config
        wl = workload
        if axis == "alpha_beta":
            cfg = replace(
                config,
                requirement=QualityRequirement(float(value), float(value), config.requirement.theta),
            )
        elif axis == "theta":
            cfg = replace(
                config,
                requirement=QualityRequirement(
                    config.requirement.alpha, config.requirement.beta, float(value)
                ),
            )
        elif axis == "tau":
            wl = generate(replace(spec, tau=float(value)))
        elif axis == "sigma":
            wl = generate(replace(spec, sigma=float(value)))
        elif axis == "size":
            wl = generate(replace(spec, n_pairs=int(value)))
        assert wl is not None
        for solver in solvers:
            _, agg = run_trials(wl, solver, cfg, n_runs, master_seed=master_seed)
            rows.append(
                {
                    "axis": axis,
                    "value": value,
                    "solver": solver,
                    "n_runs": agg.n_runs,
                    "mean_precision": agg.mean_precision,
                    "mean_recall": agg.mean_recall,
                    "mean_cost_fraction": agg.mean_cost_fraction,
                    "success_rate": agg.success_rate,
                    "mean_runtime_seconds": agg.mean_runtime_seconds,
                }
            )
    return rows


def write_rows_csv(rows: Sequence[dict], path: str) -> None:
    if not rows:
        raise ValueError("nothing to write")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def write_reports_csv(reports: Sequence[TrialReport], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["solver", "seed", "precision", "recall", "cost_fraction",
             "success", "runtime_seconds", "exhausted", "error"]
        )
        for r in reports:
            writer.writerow(
                [r.solver, r.seed, r.precision, r.recall, r.cost_fraction,
                 int(r.success), r.runtime_seconds, int(r.exhausted), r.error or ""]
            )
