"""Command-line entry points.

Subcommands: ``generate`` synthetic workloads, ``resolve`` one workload with a
chosen solver, ``evaluate`` repeated trials or parameter sweeps, and ``serve``
an interactive labeling session over HTTP. Exit codes for resolve: 0 on
success, 2 when the solver exhausted the workload (full-human fallback),
1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import threading
import warnings
from pathlib import Path

from .gp import HyperPolicy
from .harness import run_trials, sweep, write_reports_csv, write_rows_csv
from .model import QualityRequirement, Workload, precision, recall
from .oracle import GroundTruthSource
from .service import LabelingService, make_server
from .similarity import RecordTable, SimilarityConfig, block, load_gold_csv
from .solvers import SOLVERS, SolverConfig
from .synth import SyntheticSpec, generate


def _add_requirement_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=0.9, help="precision target")
    parser.add_argument("--beta", type=float, default=0.9, help="recall target")
    parser.add_argument("--theta", type=float, default=0.9, help="confidence level")


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--solver", choices=sorted(SOLVERS), default="hybrid")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--base-window", type=int, default=5)
    parser.add_argument(
        "--sampling-range",
        type=str,
        default="0.01,0.05",
        help="lo,hi fraction of subsets the regression loop may sample",
    )
    parser.add_argument("--per-subset-samples", type=int, default=20)
    parser.add_argument("--epsilon", type=float, default=0.05)
    parser.add_argument("--gp-hyper", choices=["fixed", "grid"], default="grid")


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    lo, hi = (float(x) for x in args.sampling_range.split(","))
    return SolverConfig(
        requirement=QualityRequirement(args.alpha, args.beta, args.theta),
        base_window=args.base_window,
        sampling_range=(lo, hi),
        epsilon=args.epsilon,
        per_subset_samples=args.per_subset_samples,
        seed=args.seed,
        gp_hyper=HyperPolicy(mode=args.gp_hyper),
    )


def _load_workload(args: argparse.Namespace) -> Workload:
    if args.workload:
        return Workload.from_csv(args.workload, subset_size=args.subset_size)
    if not (args.records_a and args.records_b and args.sim_config):
        raise ValueError("need either --workload or --records-a/--records-b/--sim-config")
    with open(args.sim_config, encoding="utf-8") as fh:
        sim = json.load(fh)
    config = SimilarityConfig(
        measures=sim["measures"],
        weights=sim.get("weights"),
        blocking_threshold=sim.get("blocking_threshold", 0.0),
        token_prefilter=sim.get("token_prefilter", False),
    )
    gold = load_gold_csv(args.gold) if args.gold else None
    return block(
        RecordTable.from_csv(args.records_a),
        RecordTable.from_csv(args.records_b),
        config,
        gold=gold,
        subset_size=args.subset_size,
    )


def cmd_generate(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        n_pairs=args.n, subset_size=args.subset_size, tau=args.tau, sigma=args.sigma, seed=args.seed
    )
    generate(spec).to_csv(args.out)
    print(f"wrote {args.n} pairs to {args.out}")
    return 0


def cmd_resolve(args: argparse.Namespace) -> int:
    workload = _load_workload(args)
    if args.oracle == "ground-truth" and not workload.has_truth:
        raise ValueError("workload has no truth column; the ground-truth oracle needs one")
    config = _solver_config(args)
    source = GroundTruthSource(journal_path=args.journal)
    solution = SOLVERS[args.solver](workload, config, source)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "solution.json", "w", encoding="utf-8") as fh:
        json.dump(solution.to_dict(workload, include_labels=True), fh)
    with open(out_dir / "labels.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair_id", "label", "source"])
        for pid, lab in solution.labels.items():
            writer.writerow([pid, lab, solution.labels.source_of(pid)])

    summary = {
        "solver": solution.solver,
        "human_cost": solution.human_cost,
        "cost_fraction": solution.cost_fraction(workload),
        "bounds": solution.to_dict(workload, include_labels=False)["bounds"],
        "exhausted": solution.exhausted,
        "requirement": {"alpha": args.alpha, "beta": args.beta, "theta": args.theta},
        "seed": args.seed,
    }
    if workload.has_truth:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            summary["achieved"] = {
                "precision": precision(workload, solution.labels),
                "recall": recall(workload, solution.labels),
            }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary, indent=2))
    return 2 if solution.exhausted else 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _solver_config(args)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    spec = None
    workload = None
    if args.workload:
        workload = Workload.from_csv(args.workload, subset_size=args.subset_size)
    else:
        spec = SyntheticSpec(
            n_pairs=args.n, subset_size=args.subset_size, tau=args.tau,
            sigma=args.sigma, seed=args.spec_seed,
        )

    if args.sweep:
        values = [float(v) for v in args.values.split(",")]
        rows = sweep(
            args.sweep, values, solvers, config, spec=spec, workload=workload,
            n_runs=args.runs, master_seed=args.seed,
        )
        path = out_dir / f"sweep_{args.sweep}.csv"
        write_rows_csv(rows, str(path))
        print(f"wrote {path}")
        return 0

    target = workload if workload is not None else spec
    summary = {}
    for solver in solvers:
        reports, agg = run_trials(target, solver, config, args.runs, master_seed=args.seed)
        write_reports_csv(reports, str(out_dir / f"trials_{solver}.csv"))
        summary[solver] = {
            "n_runs": agg.n_runs,
            "mean_precision": agg.mean_precision,
            "mean_recall": agg.mean_recall,
            "mean_cost_fraction": agg.mean_cost_fraction,
            "success_rate": agg.success_rate,
            "mean_runtime_seconds": agg.mean_runtime_seconds,
        }
    with open(out_dir / "aggregate.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    workload = _load_workload(args)
    service = LabelingService(
        workload,
        args.solver,
        _solver_config(args),
        journal_path=args.journal,
        static_dir=args.static_dir,
    )
    server = make_server(service, port=args.port)
    service.start()
    host, port = server.server_address[:2]
    print(f"labeling service on http://{host}:{port}/ (journal: {args.journal or 'none'})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairtriage",
        description="Split pair-resolution work between machine and human under quality guarantees",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic ground-truthed workload CSV")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--subset-size", type=int, default=200)
    gen.add_argument("--tau", type=float, default=14.0)
    gen.add_argument("--sigma", type=float, default=0.1)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    res = sub.add_parser("resolve", help="run one solver over a workload")
    res.add_argument("--workload", help="workload CSV (id,metric[,truth])")
    res.add_argument("--records-a", help="record CSV for the first table")
    res.add_argument("--records-b", help="record CSV for the second table")
    res.add_argument("--gold", help="gold mapping CSV of true matches (id_a,id_b)")
    res.add_argument("--sim-config", help="JSON similarity config for blocking")
    res.add_argument("--subset-size", type=int, default=200)
    res.add_argument("--oracle", choices=["ground-truth"], default="ground-truth")
    res.add_argument("--journal", help="answer journal path (resumable sessions)")
    res.add_argument("--out-dir", required=True)
    _add_requirement_flags(res)
    _add_solver_flags(res)
    res.set_defaults(func=cmd_resolve)

    ev = sub.add_parser("evaluate", help="repeated trials or parameter sweeps")
    ev.add_argument("--workload", help="fixed workload CSV; otherwise synthetic flags apply")
    ev.add_argument("--n", type=int, default=20000)
    ev.add_argument("--subset-size", type=int, default=200)
    ev.add_argument("--tau", type=float, default=14.0)
    ev.add_argument("--sigma", type=float, default=0.1)
    ev.add_argument("--spec-seed", type=int, default=0)
    ev.add_argument("--solvers", default="base,partial_sampling,hybrid")
    ev.add_argument("--runs", type=int, default=10)
    ev.add_argument("--sweep", choices=["alpha_beta", "theta", "tau", "sigma", "size"])
    ev.add_argument("--values", help="comma-separated sweep values")
    ev.add_argument("--out-dir", required=True)
    _add_requirement_flags(ev)
    _add_solver_flags(ev)
    ev.set_defaults(func=cmd_evaluate)

    srv = sub.add_parser("serve", help="interactive labeling session over HTTP")
    srv.add_argument("--workload", help="workload CSV")
    srv.add_argument("--records-a")
    srv.add_argument("--records-b")
    srv.add_argument("--gold")
    srv.add_argument("--sim-config")
    srv.add_argument("--subset-size", type=int, default=200)
    srv.add_argument("--port", type=int, default=8417)
    srv.add_argument("--journal", help="answer journal path (resumable sessions)")
    srv.add_argument("--static-dir", help="directory with the labeler frontend bundle")
    _add_requirement_flags(srv)
    _add_solver_flags(srv)
    srv.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
