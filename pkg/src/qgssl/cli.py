"""Command-line interface: run, sweep, tune, rb, and report subcommands.

Exit codes: 0 on success, 1 for configuration or input errors, 2 when a
propagation run diverges or fails to converge (partial artifacts are still
written where possible).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from .benchmarking import rb_experiment, sweep, write_sweep_csv
from .harness import (
    ExperimentConfig,
    make_report,
    resolve_dataset,
    run_experiment,
    write_metrics_csv,
    write_result,
)
from .propagation import DivergenceError
from .qelp import _config_echo, hyperparameter_search


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _parse_int_list(text: str) -> list:
    tokens = text.replace(",", " ").split()
    if not tokens:
        raise ValueError("expected a comma-separated list of integers")
    return [int(token) for token in tokens]


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    try:
        config = ExperimentConfig.from_json(args.config)
        if args.seeds is not None:
            config = replace(config, seeds=tuple(_parse_int_list(args.seeds)))
        dataset = resolve_dataset(config.dataset)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))

    try:
        result = run_experiment(config, dataset)
    except DivergenceError as exc:
        print(
            f"divergent propagation with alpha1={config.alpha1}, "
            f"alpha2={config.alpha2}: {exc}",
            file=sys.stderr,
        )
        return 2

    out_base = Path(args.out) if args.out else Path(config.out_dir)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%f")
    run_dir = out_base / Path(args.config).stem / stamp
    result_path = write_result(result, run_dir / "result.json")
    write_metrics_csv(result, run_dir / "metrics.csv")
    print(result_path)

    stuck = [
        seed
        for seed in result.seeds
        if result.diagnostics[seed] is not None
        and not result.diagnostics[seed].converged
    ]
    if stuck:
        print(
            f"propagation did not converge within {config.max_iter} iteration(s) "
            f"for seed(s) {', '.join(str(s) for s in stuck)}",
            file=sys.stderr,
        )
        return 2
    return 0


def _cmd_sweep(args) -> int:
    try:
        config = ExperimentConfig.from_json(args.config)
        dataset = resolve_dataset(config.dataset)
        values = _parse_int_list(args.values)
        seeds = _parse_int_list(args.seeds) if args.seeds else None
        lengths = _parse_int_list(args.lengths) if args.lengths else None
        rows = sweep(
            dataset,
            config.pipeline_config(config.seeds[0]),
            args.knob,
            values,
            noise_p=args.noise,
            seeds=seeds,
            rb_lengths=lengths,
            rb_repetitions=args.reps,
            rb_shots=args.shots,
        )
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    path = _out_dir(args) / "sweep.csv"
    write_sweep_csv(rows, path)
    print(path)
    return 0


def _cmd_tune(args) -> int:
    try:
        config = ExperimentConfig.from_json(args.config)
        dataset = resolve_dataset(config.dataset)
        grid = json.loads(Path(args.grid).read_text())
        if not isinstance(grid, dict):
            raise ValueError("grid file must hold a JSON object of value lists")
        best, leaderboard = hyperparameter_search(dataset, grid, config.seeds)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    out = _out_dir(args)
    keys = [k for k in leaderboard[0] if k != "mean_accuracy"]
    with open(out / "leaderboard.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys + ["mean_accuracy"])
        for row in leaderboard:
            writer.writerow(
                [row[k] for k in keys] + [repr(float(row["mean_accuracy"]))]
            )
    best_path = out / "best_config.json"
    best_path.write_text(json.dumps(_config_echo(best), indent=2, sort_keys=True) + "\n")
    print(best_path)
    return 0


def _cmd_rb(args) -> int:
    try:
        lengths = _parse_int_list(args.lengths) if args.lengths else None
        result = rb_experiment(
            lengths=lengths,
            repetitions=args.reps,
            shots=args.shots,
            noise_p=args.noise,
            seed=args.seed,
            qubits=args.qubits,
        )
    except ValueError as exc:
        return _fail(str(exc))
    print(f"fitted p = {result.fit_p}")
    print(f"average fidelity = {result.fidelity}")
    print(f"error per step = {result.error_per_clifford}")
    if args.out:
        out = _out_dir(args)
        document = {
            "lengths": list(result.lengths),
            "survival": [float(s) for s in result.survival],
            "fit_p": float(result.fit_p),
            "fit_A": float(result.fit_A),
            "fit_B": float(result.fit_B),
            "fit_converged": bool(result.fit_converged),
            "fidelity": float(result.fidelity),
            "error_per_clifford": float(result.error_per_clifford),
            "noise_p": float(args.noise),
            "seed": int(args.seed),
            "qubits": int(args.qubits),
            "repetitions": int(args.reps),
            "shots": int(args.shots),
        }
        (out / "rb.json").write_text(
            json.dumps(document, indent=2, sort_keys=True) + "\n"
        )
        with open(out / "rb.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["length", "survival"])
            for length, survival in zip(result.lengths, result.survival):
                writer.writerow([length, repr(float(survival))])
    return 0


def _cmd_report(args) -> int:
    try:
        report_path = make_report(args.results, args.out)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    print(report_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgssl",
        description=(
            "Graph-based semi-supervised learning experiments with "
            "quantum-state diagnostics"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment from a JSON config")
    run_p.add_argument("--config", required=True, help="path to a JSON config file")
    run_p.add_argument("--out", default=None, help="output directory root")
    run_p.add_argument("--seeds", default=None, help="comma-separated seed override")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser(
        "sweep", help="vary one knob, recording accuracy, entanglement, and rb score"
    )
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--knob", required=True, choices=("layers", "qubits"))
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--noise", type=float, default=0.02)
    sweep_p.add_argument("--seeds", default=None, help="comma-separated seeds")
    sweep_p.add_argument("--lengths", default=None, help="benchmark sequence lengths")
    sweep_p.add_argument("--reps", type=int, default=100)
    sweep_p.add_argument("--shots", type=int, default=500)
    sweep_p.add_argument("--out", default=None)
    sweep_p.set_defaults(func=_cmd_sweep)

    tune_p = sub.add_parser("tune", help="grid-search hyperparameters")
    tune_p.add_argument("--config", required=True)
    tune_p.add_argument("--grid", required=True, help="JSON file of value lists")
    tune_p.add_argument("--out", default=None)
    tune_p.set_defaults(func=_cmd_tune)

    rb_p = sub.add_parser("rb", help="randomized benchmarking of the simulator")
    rb_p.add_argument("--noise", type=float, default=0.0)
    rb_p.add_argument("--lengths", default=None, help="comma-separated lengths")
    rb_p.add_argument("--reps", type=int, default=100)
    rb_p.add_argument("--shots", type=int, default=500)
    rb_p.add_argument("--seed", type=int, default=0)
    rb_p.add_argument("--qubits", type=int, default=1, choices=(1, 2))
    rb_p.add_argument("--out", default=None)
    rb_p.set_defaults(func=_cmd_rb)

    report_p = sub.add_parser(
        "report", help="aggregate result.json artifacts into CSV tables"
    )
    report_p.add_argument("results", help="directory searched for result.json files")
    report_p.add_argument("--out", default="report")
    report_p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
