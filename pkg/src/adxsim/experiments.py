"""Experiment harness: income comparison, GA vs GSP, coefficient shift, and
the crossover/mutation grid, each emitting per-replication rows plus summary
tables as CSV or JSON.

Desk scaling: `scale_factor` shrinks visits, population and generations from
the full-scale defaults (150k visits, 100 x 100 GA), floored at 1,000 visits
and 10/10 GA so tiny scales stay meaningful. Money is rounded to cents and
derived statistics to 6 decimals when rows are built; files are then plain
renderings of those numbers, so fixed seeds give byte-identical output.

The runtime_ms column is 0 unless timing is explicitly enabled: wall-clock
values would break the byte-for-byte determinism contract of the output.
"""

from __future__ import annotations

import csv
import functools
import json
import os
import time
from dataclasses import dataclass, field
from math import sqrt

from .accounting import PenaltyCoefficients
from .domain import WorldConfig, derive_seed, generate_world
from .ga import GAConfig, optimize
from .selection import WeightVector
from .simulation import SimulationConfig, simulate

FULL_SCALE_VISITS = 150_000
FULL_SCALE_POPULATION = 100
FULL_SCALE_GENERATIONS = 100
MIN_VISITS = 1_000
MIN_POPULATION = 10
MIN_GENERATIONS = 10

GRID_DEFAULT_REPLICATIONS = 10
GRID_PROBS = [round(0.1 * k, 1) for k in range(1, 11)]

REPLICATION_COLUMNS = [
    "experiment", "n_networks", "mode", "seed", "replication", "income",
    "pen1", "pen2", "pen3", "pen4", "pen5", "fitness",
    "theta1", "theta2", "theta3", "theta4", "theta5", "theta6", "runtime_ms",
]

EXPERIMENTS = ("exp1_income", "exp1_ga_vs_gsp", "exp2_coeff", "grid")

# Weight index watched by the coefficient-shift experiment: the spam-advert
# variable under the default reading, the advertiser-satisfaction one under
# the alternative reading.
THETA_READING_INDEX = {"spam": 2, "advertiser": 1}


@dataclass
class ExperimentSpec:
    experiment: str
    network_counts: list[int] = field(default_factory=lambda: [10, 20, 30, 40, 50])
    replications: int = 30
    scale_factor: float = 0.1
    base_seed: int = 0
    jobs: int = 1
    timing: bool = False
    spam_click_coefficient: float = 3.0
    theta_reading: str = "spam"
    campaign_cost_form: str = "prose"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not (0.0 < self.scale_factor <= 1.0):
            raise ValueError("scale_factor must be in (0, 1]")
        if not self.network_counts:
            raise ValueError("network_counts must be non-empty")
        if self.theta_reading not in THETA_READING_INDEX:
            raise ValueError("theta_reading must be 'spam' or 'advertiser'")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def scaled_visits(self) -> int:
        return max(MIN_VISITS, round(FULL_SCALE_VISITS * self.scale_factor))

    def scaled_population(self) -> int:
        return max(MIN_POPULATION, round(FULL_SCALE_POPULATION * self.scale_factor))

    def scaled_generations(self) -> int:
        return max(MIN_GENERATIONS, round(FULL_SCALE_GENERATIONS * self.scale_factor))


@dataclass(frozen=True)
class SummaryStats:
    max: float
    mean: float
    min: float
    std_dev: float

    def __post_init__(self):
        if not (self.min <= self.mean <= self.max):
            raise ValueError("summary stats must satisfy min <= mean <= max")
        if self.std_dev < 0:
            raise ValueError("std_dev must be >= 0")

    @classmethod
    def from_values(cls, values) -> "SummaryStats":
        vals = list(values)
        if not vals:
            raise ValueError("cannot summarize zero values")
        n = len(vals)
        mean = sum(vals) / n
        sd = sqrt(sum((v - mean) ** 2 for v in vals) / (n - 1)) if n > 1 else 0.0
        return cls(max=max(vals), mean=mean, min=min(vals), std_dev=sd)


@dataclass
class ExperimentResult:
    name: str
    replication_rows: list[dict]
    summary_rows: list[dict]
    summary_columns: list[str]
    extra: dict = field(default_factory=dict)


def _row(experiment, n_networks, mode, seed, replication, income, pens,
         fitness, thetas, runtime_ms) -> dict:
    row = {
        "experiment": experiment,
        "n_networks": n_networks,
        "mode": mode,
        "seed": seed,
        "replication": replication,
        "income": round(income, 2),
        "fitness": round(fitness, 2),
        "runtime_ms": runtime_ms,
    }
    for k, v in zip(("pen1", "pen2", "pen3", "pen4", "pen5"), pens):
        row[k] = round(v, 2)
    for k in range(6):
        row[f"theta{k + 1}"] = float(thetas[k]) if thetas is not None else ""
    return row


def _clock(enabled: bool, t0: float) -> int:
    return int((time.perf_counter() - t0) * 1000) if enabled else 0


def _maybe_parallel(jobs: int, tasks):
    """Run a list of zero-arg callables, possibly across processes."""
    if jobs <= 1:
        return [t() for t in tasks]
    from joblib import Parallel, delayed
    return Parallel(n_jobs=jobs)(delayed(t)() for t in tasks)


# --- experiment 1a: independent vs collaborative income ---

def _exp1_income_cell(n: int, rep: int, base_seed: int, visits: int,
                      timing: bool) -> list[dict]:
    rep_seed = derive_seed(base_seed, 1, n, rep)
    world = generate_world(WorldConfig(networks=n), derive_seed(rep_seed, 0))
    sim_seed = derive_seed(rep_seed, 1)
    rows = []
    for mode in ("gsp_independent", "gsp_collaborative"):
        t0 = time.perf_counter()
        report = simulate(world, SimulationConfig(
            mode=mode, visits_total=visits,
            coefficients=PenaltyCoefficients.zero(),
            apply_penalties=False), sim_seed)
        rows.append(_row("exp1_income", n, mode, rep_seed, rep, report.income,
                         report.penalties.as_tuple(), report.performance,
                         None, _clock(timing, t0)))
    return rows


def run_exp1_income(spec: ExperimentSpec) -> ExperimentResult:
    """Paired GSP runs (penalties off) per network count and replication."""
    visits = spec.scaled_visits()
    tasks = []
    for n in spec.network_counts:
        for rep in range(spec.replications):
            tasks.append(functools.partial(_exp1_income_cell, n, rep,
                                           spec.base_seed, visits, spec.timing))
    rows = [r for cell in _maybe_parallel(spec.jobs, tasks) for r in cell]

    summary = []
    for n in spec.network_counts:
        indep = [r["income"] for r in rows
                 if r["n_networks"] == n and r["mode"] == "gsp_independent"]
        collab = [r["income"] for r in rows
                  if r["n_networks"] == n and r["mode"] == "gsp_collaborative"]
        mi, mc = sum(indep) / len(indep), sum(collab) / len(collab)
        summary.append({
            "n_networks": n,
            "independent_income": mi,
            "collaborative_income": mc,
            "ratio": mc / mi if mi else "",
        })
    return ExperimentResult(
        name="exp1_income", replication_rows=rows, summary_rows=summary,
        summary_columns=["n_networks", "independent_income",
                         "collaborative_income", "ratio"])


# --- experiment 1b: GA against penalized collaborative GSP ---

def _exp1_ga_gsp_cell(n: int, rep: int, base_seed: int, visits: int,
                      population: int, generations: int, cost_form: str,
                      timing: bool) -> list[dict]:
    rep_seed = derive_seed(base_seed, 2, n, rep)
    world = generate_world(WorldConfig(networks=n), derive_seed(rep_seed, 0))
    coeffs = PenaltyCoefficients.all_equal(0.5)
    rows = []

    t0 = time.perf_counter()
    sim_cfg = SimulationConfig(mode="asf", visits_total=visits,
                               weights=WeightVector.uniform(), coefficients=coeffs,
                               campaign_cost_form=cost_form)
    result = optimize(world, sim_cfg,
                      GAConfig(population_size=population,
                               generations=generations,
                               seed=derive_seed(rep_seed, 2)))
    rows.append(_row("exp1_ga_vs_gsp", n, "ga", rep_seed, rep,
                     result.best_income, result.best_penalties.as_tuple(),
                     result.best_fitness, result.best_weights.as_tuple(),
                     _clock(timing, t0)))

    t0 = time.perf_counter()
    report = simulate(world, SimulationConfig(
        mode="gsp_collaborative", visits_total=visits, coefficients=coeffs,
        apply_penalties=True), derive_seed(rep_seed, 1))
    rows.append(_row("exp1_ga_vs_gsp", n, "gsp_collaborative", rep_seed, rep,
                     report.income, report.penalties.as_tuple(),
                     report.performance, None, _clock(timing, t0)))
    return rows


def run_exp1_ga_vs_gsp(spec: ExperimentSpec) -> ExperimentResult:
    """GA-optimized selection vs penalized collaborative GSP, means per n."""
    visits = spec.scaled_visits()
    pop = spec.scaled_population()
    gens = spec.scaled_generations()
    tasks = []
    for n in spec.network_counts:
        for rep in range(spec.replications):
            tasks.append(functools.partial(
                _exp1_ga_gsp_cell, n, rep, spec.base_seed, visits, pop, gens,
                spec.campaign_cost_form, spec.timing))
    rows = [r for cell in _maybe_parallel(spec.jobs, tasks) for r in cell]

    summary = []
    for n in spec.network_counts:
        ga = [r["fitness"] for r in rows
              if r["n_networks"] == n and r["mode"] == "ga"]
        gsp = [r["fitness"] for r in rows
               if r["n_networks"] == n and r["mode"] == "gsp_collaborative"]
        summary.append({
            "n_networks": n,
            "ga_fitness": sum(ga) / len(ga),
            "gsp_fitness": sum(gsp) / len(gsp),
        })
    return ExperimentResult(
        name="exp1_ga_vs_gsp", replication_rows=rows, summary_rows=summary,
        summary_columns=["n_networks", "ga_fitness", "gsp_fitness"])


# --- experiment 2: coefficient shift on spam clicks ---

def _exp2_cell(n: int, rep: int, base_seed: int, x2: float, visits: int,
               population: int, generations: int, cost_form: str,
               timing: bool) -> dict:
    rep_seed = derive_seed(base_seed, 3, n, rep)
    world = generate_world(WorldConfig(networks=n), derive_seed(rep_seed, 0))
    coeffs = PenaltyCoefficients(0.5, x2, 0.5, 0.5, 0.5)
    t0 = time.perf_counter()
    sim_cfg = SimulationConfig(mode="asf", visits_total=visits,
                               weights=WeightVector.uniform(), coefficients=coeffs,
                               campaign_cost_form=cost_form)
    result = optimize(world, sim_cfg,
                      GAConfig(population_size=population,
                               generations=generations,
                               seed=derive_seed(rep_seed, 2)))
    return _row("exp2_coeff", n, "ga", rep_seed, rep, result.best_income,
                result.best_penalties.as_tuple(), result.best_fitness,
                result.best_weights.as_tuple(), _clock(timing, t0))


def run_exp2(spec: ExperimentSpec) -> ExperimentResult:
    """GA adaptation to an amplified spam-click coefficient.

    Reports the optimized weight vector of the best replication, summary
    stats of the replication fitnesses, and how often the amplified
    objective's weight ends up as the argmax of the optimized vector.
    """
    n = spec.network_counts[0]
    visits = spec.scaled_visits()
    pop = spec.scaled_population()
    gens = spec.scaled_generations()
    x2 = spec.spam_click_coefficient
    tasks = [
        functools.partial(_exp2_cell, n, rep, spec.base_seed, x2, visits, pop,
                          gens, spec.campaign_cost_form, spec.timing)
        for rep in range(spec.replications)
    ]
    rows = _maybe_parallel(spec.jobs, tasks)

    fitnesses = [r["fitness"] for r in rows]
    stats = SummaryStats.from_values(fitnesses)
    watch = THETA_READING_INDEX[spec.theta_reading]
    thetas = [[r[f"theta{k + 1}"] for k in range(6)] for r in rows]
    argmax_hits = sum(1 for t in thetas if t.index(max(t)) == watch)
    best_row = max(rows, key=lambda r: (r["fitness"], -r["replication"]))

    summary_row = {
        "n_networks": n,
        "x2": x2,
        "fitness_max": stats.max,
        "fitness_mean": stats.mean,
        "fitness_min": stats.min,
        "fitness_std": stats.std_dev,
        "watched_theta_index": watch + 1,
        "watched_theta_argmax_share": argmax_hits / len(rows),
    }
    for k in range(6):
        summary_row[f"theta{k + 1}"] = best_row[f"theta{k + 1}"]
    return ExperimentResult(
        name="exp2_coeff", replication_rows=rows, summary_rows=[summary_row],
        summary_columns=list(summary_row.keys()),
        extra={"stats": stats,
               "best_weights": [best_row[f"theta{k + 1}"] for k in range(6)],
               "watched_argmax_share": argmax_hits / len(rows)})


# --- crossover/mutation grid ---

def _grid_cell(ci: int, mi: int, base_seed: int, n: int, reps: int,
               visits: int, population: int, generations: int,
               cost_form: str, timing: bool) -> list[dict]:
    cross = GRID_PROBS[ci]
    mut = GRID_PROBS[mi]
    coeffs = PenaltyCoefficients.all_equal(0.5)
    rows = []
    for rep in range(reps):
        world = generate_world(WorldConfig(networks=n),
                               derive_seed(base_seed, 4, rep, 0))
        t0 = time.perf_counter()
        sim_cfg = SimulationConfig(mode="asf", visits_total=visits,
                                   weights=WeightVector.uniform(),
                                   coefficients=coeffs,
                                   campaign_cost_form=cost_form)
        result = optimize(world, sim_cfg, GAConfig(
            population_size=population, generations=generations,
            crossover_prob=cross, mutation_prob=mut,
            seed=derive_seed(base_seed, 4, rep, 1 + ci * 10 + mi)))
        row = _row("grid", n, "ga", derive_seed(base_seed, 4, rep, 0), rep,
                   result.best_income, result.best_penalties.as_tuple(),
                   result.best_fitness, result.best_weights.as_tuple(),
                   _clock(timing, t0))
        row["crossover_prob"] = cross
        row["mutation_prob"] = mut
        rows.append(row)
    return rows


def run_grid(spec: ExperimentSpec) -> ExperimentResult:
    """Mean fitness over the 10x10 (crossover, mutation) probability grid.

    Worlds are paired across cells (one world per replication index) so cell
    differences reflect operator probabilities, not world luck.
    """
    n = spec.network_counts[0]
    visits = spec.scaled_visits()
    pop = spec.scaled_population()
    gens = spec.scaled_generations()
    tasks = []
    for mi in range(10):
        for ci in range(10):
            tasks.append(functools.partial(
                _grid_cell, ci, mi, spec.base_seed, n, spec.replications,
                visits, pop, gens, spec.campaign_cost_form, spec.timing))
    cells = _maybe_parallel(spec.jobs, tasks)
    rows = [r for cell in cells for r in cell]

    matrix = [[0.0] * 10 for _ in range(10)]  # [mutation][crossover]
    k = 0
    for mi in range(10):
        for ci in range(10):
            vals = [r["fitness"] for r in cells[k]]
            matrix[mi][ci] = sum(vals) / len(vals)
            k += 1
    grand_mean = sum(sum(r) for r in matrix) / 100.0
    best_mi, best_ci, best_val = 0, 0, matrix[0][0]
    for mi in range(10):
        for ci in range(10):
            if matrix[mi][ci] > best_val:
                best_mi, best_ci, best_val = mi, ci, matrix[mi][ci]
    summary = [{
        "crossover_prob": GRID_PROBS[best_ci],
        "mutation_prob": GRID_PROBS[best_mi],
        "best_cell_mean": best_val,
        "grand_mean": grand_mean,
    }]
    return ExperimentResult(
        name="grid", replication_rows=rows, summary_rows=summary,
        summary_columns=["crossover_prob", "mutation_prob", "best_cell_mean",
                         "grand_mean"],
        extra={"matrix": matrix, "probs": GRID_PROBS})


RUNNERS = {
    "exp1_income": run_exp1_income,
    "exp1_ga_vs_gsp": run_exp1_ga_vs_gsp,
    "exp2_coeff": run_exp2,
    "grid": run_grid,
}


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    return RUNNERS[spec.experiment](spec)


# --- report emission ---

def _write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c, "") for c in columns])


def _write_json(path: str, columns: list[str], rows: list[dict]) -> None:
    doc = {"columns": columns,
           "rows": [{c: (None if row.get(c, "") == "" else row.get(c))
                     for c in columns} for row in rows]}
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)


def emit_report(result: ExperimentResult, fmt: str, out_dir: str) -> list[str]:
    """Write replication rows and summary (plus grid matrix) to out_dir.

    Column order is fixed; content is deterministic for fixed seeds.
    Returns the written paths.
    """
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    os.makedirs(out_dir, exist_ok=True)
    write = _write_csv if fmt == "csv" else _write_json
    paths = []

    rep_cols = list(REPLICATION_COLUMNS)
    if result.name == "grid":
        rep_cols += ["crossover_prob", "mutation_prob"]
    p = os.path.join(out_dir, f"{result.name}_replications.{fmt}")
    write(p, rep_cols, result.replication_rows)
    paths.append(p)

    p = os.path.join(out_dir, f"{result.name}_summary.{fmt}")
    write(p, result.summary_columns, result.summary_rows)
    paths.append(p)

    if result.name == "grid":
        probs = result.extra["probs"]
        cols = ["mutation_prob"] + [f"crossover_{c}" for c in probs]
        rows = []
        for mi, mp in enumerate(probs):
            row = {"mutation_prob": mp}
            for ci, cp in enumerate(probs):
                row[f"crossover_{cp}"] = result.extra["matrix"][mi][ci]
            rows.append(row)
        p = os.path.join(out_dir, f"grid_matrix.{fmt}")
        write(p, cols, rows)
        paths.append(p)
    return paths
