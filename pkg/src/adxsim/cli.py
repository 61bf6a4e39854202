"""Command-line harness.

Subcommands: simulate, optimize, exp1-income, exp1-ga-gsp, exp2, grid.
Options can come from a JSON config file (--config); explicit flags win.
Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .accounting import PenaltyCoefficients
from .domain import WorldConfig, derive_seed, generate_world
from .experiments import (ExperimentSpec, GRID_DEFAULT_REPLICATIONS,
                          emit_report, run_experiment)
from .ga import GAConfig, optimize
from .selection import WeightVector
from .simulation import SimulationConfig, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parse_floats(text: str, n: int, what: str) -> list[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != n:
        raise ValueError(f"{what} needs {n} comma-separated values")
    return [float(p) for p in parts]


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="base seed (u64)")
    p.add_argument("--config", type=str, default=None,
                   help="JSON file of option defaults; flags override")
    p.add_argument("--out", type=str, default="out",
                   help="output directory for reports")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--scale", type=float, default=0.1,
                   help="desk-scale factor for visits/population/generations")
    p.add_argument("--paper-scale", action="store_true",
                   help="run at full scale (overrides --scale)")
    p.add_argument("--replications", type=int, default=None,
                   help="replications per configuration")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel worker processes for replications/cells")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock runtime_ms (breaks byte determinism)")
    p.add_argument("--network-counts", type=str, default=None,
                   help="comma-separated network counts, e.g. 10,20,30")
    p.add_argument("--cost-form", choices=("prose", "printed"), default="prose",
                   help="campaign cost orientation")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="adxsim",
        description="Ad-exchange auction simulator with GA weight optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="run one simulation and write its report")
    p.add_argument("--networks", type=int, default=10)
    p.add_argument("--mode", choices=("asf", "gsp_collaborative",
                                      "gsp_independent"), default="asf")
    p.add_argument("--visits", type=int, default=None)
    p.add_argument("--weights", type=str, default=None,
                   help="six comma-separated weights (default: uniform)")
    p.add_argument("--coeffs", type=str, default=None,
                   help="five comma-separated penalty coefficients (default 0.5)")
    p.add_argument("--no-penalties", action="store_true")

    p = sub.add_parser("optimize", parents=[common],
                       help="optimize weights with the GA on one world")
    p.add_argument("--networks", type=int, default=10)
    p.add_argument("--visits", type=int, default=None)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--crossover", type=float, default=0.7)
    p.add_argument("--mutation", type=float, default=0.2)
    p.add_argument("--elitism", type=float, default=0.05)
    p.add_argument("--coeffs", type=str, default=None)

    sub.add_parser("exp1-income", parents=[common],
                   help="independent vs collaborative GSP income")
    sub.add_parser("exp1-ga-gsp", parents=[common],
                   help="GA fitness vs penalized collaborative GSP")

    p = sub.add_parser("exp2", parents=[common],
                       help="weight response to an amplified spam coefficient")
    p.add_argument("--x2", type=float, default=3.0,
                   help="spam-click penalty coefficient")
    p.add_argument("--theta-reading", choices=("spam", "advertiser"),
                   default="spam", help="which weight the summary watches")

    sub.add_parser("grid", parents=[common],
                   help="10x10 crossover/mutation probability grid")
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Fold --config file values in as subcommand defaults; flags still win.

    Keys use flag names with dashes or underscores; list values for
    comma-separated options are joined automatically.
    """
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", type=str, default=None)
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config) as fh:
            values = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read config file: {exc}") from exc
    if not isinstance(values, dict):
        raise ValueError("config file must hold a JSON object")
    cleaned = {}
    for key, value in values.items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        cleaned[key.replace("-", "_")] = value

    sub_action = next(a for a in parser._actions
                      if isinstance(a, argparse._SubParsersAction))  # noqa: SLF001
    command = next((a for a in argv if not a.startswith("-")), None)
    if command not in sub_action.choices:
        raise ValueError("a known subcommand is required when using --config")
    sub = sub_action.choices[command]
    valid = {a.dest for a in sub._actions}  # noqa: SLF001
    unknown = sorted(set(cleaned) - valid)
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    sub.set_defaults(**cleaned)


def _scale(args) -> float:
    return 1.0 if args.paper_scale else args.scale


def _spec_from_args(args, experiment: str) -> ExperimentSpec:
    default_reps = GRID_DEFAULT_REPLICATIONS if experiment == "grid" else 30
    counts = ([int(x) for x in args.network_counts.split(",")]
              if args.network_counts else [10, 20, 30, 40, 50])
    return ExperimentSpec(
        experiment=experiment,
        network_counts=counts,
        replications=args.replications if args.replications else default_reps,
        scale_factor=_scale(args),
        base_seed=args.seed,
        jobs=args.jobs,
        timing=args.timing,
        spam_click_coefficient=getattr(args, "x2", 3.0),
        theta_reading=getattr(args, "theta_reading", "spam"),
        campaign_cost_form=args.cost_form,
    )


def _cmd_simulate(args) -> int:
    visits = args.visits if args.visits else max(1000, round(150_000 * _scale(args)))
    weights = (WeightVector.from_sequence(_parse_floats(args.weights, 6, "--weights"))
               if args.weights else WeightVector.uniform())
    coeffs = (PenaltyCoefficients(*_parse_floats(args.coeffs, 5, "--coeffs"))
              if args.coeffs else PenaltyCoefficients.all_equal(0.5))
    config = SimulationConfig(
        mode=args.mode, visits_total=visits,
        weights=weights if args.mode == "asf" else None,
        coefficients=coeffs, apply_penalties=not args.no_penalties,
        campaign_cost_form=args.cost_form)
    world = generate_world(WorldConfig(networks=args.networks),
                           derive_seed(args.seed, 0))
    report = simulate(world, config, derive_seed(args.seed, 1))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "simulate_report.json")
    with open(path, "w") as fh:
        fh.write(report.to_json())
    print(f"mode={report.mode} visits={report.visits_processed} "
          f"clicks={report.clicks_total} income={report.income:.2f} "
          f"performance={report.performance:.2f}")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_optimize(args) -> int:
    scale = _scale(args)
    visits = args.visits if args.visits else max(1000, round(150_000 * scale))
    population = args.population if args.population else max(10, round(100 * scale))
    generations = args.generations if args.generations else max(10, round(100 * scale))
    coeffs = (PenaltyCoefficients(*_parse_floats(args.coeffs, 5, "--coeffs"))
              if args.coeffs else PenaltyCoefficients.all_equal(0.5))
    world = generate_world(WorldConfig(networks=args.networks),
                           derive_seed(args.seed, 0))
    sim_config = SimulationConfig(mode="asf", visits_total=visits,
                                  weights=WeightVector.uniform(),
                                  coefficients=coeffs,
                                  campaign_cost_form=args.cost_form)
    ga_config = GAConfig(population_size=population, generations=generations,
                         crossover_prob=args.crossover,
                         mutation_prob=args.mutation,
                         elitism_fraction=args.elitism,
                         seed=derive_seed(args.seed, 2))
    result = optimize(world, sim_config, ga_config)

    os.makedirs(args.out, exist_ok=True)
    hist_path = os.path.join(args.out, "optimize_history.csv")
    with open(hist_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "best_fitness", "mean_fitness",
                         "theta1", "theta2", "theta3", "theta4", "theta5",
                         "theta6"])
        for rec in result.history:
            writer.writerow([rec.generation, round(rec.best_fitness, 2),
                             round(rec.mean_fitness, 2),
                             *[float(t) for t in rec.best_weights.as_tuple()]])
    best_path = os.path.join(args.out, "optimize_best.json")
    with open(best_path, "w") as fh:
        json.dump({"best_fitness": round(result.best_fitness, 2),
                   "best_income": round(result.best_income, 2),
                   "best_weights": list(result.best_weights.as_tuple())},
                  fh, sort_keys=True, indent=1)
    thetas = ", ".join(f"{t:.4f}" for t in result.best_weights.as_tuple())
    print(f"best_fitness={result.best_fitness:.2f} weights=[{thetas}]")
    print(f"wrote {hist_path}, {best_path}")
    return EXIT_OK


def _cmd_experiment(args, experiment: str) -> int:
    spec = _spec_from_args(args, experiment)
    result = run_experiment(spec)
    paths = emit_report(result, args.format, args.out)
    cols = result.summary_columns
    print(" | ".join(cols))
    for row in result.summary_rows:
        print(" | ".join(str(row.get(c, "")) for c in cols))
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "optimize":
            return _cmd_optimize(args)
        if args.command == "exp1-income":
            return _cmd_experiment(args, "exp1_income")
        if args.command == "exp1-ga-gsp":
            return _cmd_experiment(args, "exp1_ga_vs_gsp")
        if args.command == "exp2":
            return _cmd_experiment(args, "exp2_coeff")
        if args.command == "grid":
            return _cmd_experiment(args, "grid")
        raise ValueError(f"unknown command {args.command!r}")
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
