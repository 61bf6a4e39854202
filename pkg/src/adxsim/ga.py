"""Binary-genotype genetic algorithm over the six selection weights.

Individuals are 288-bit strings (six 48-bit genes, read big-endian), repaired
onto the unit simplex before evaluation. Fitness of an individual is the
income minus all penalties of one full simulation run; every individual of a
generation is scored against the same world and visit stream, re-drawn for
the next generation so weights cannot overfit one stream.

Mutation semantics: `mutation_prob` gates whether an individual mutates at
all; a mutating individual then flips each bit independently with
probability 1/length (so the swept 0.1..1.0 range stays a sensible dial).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import engine as _eng
from .accounting import PenaltyBreakdown
from .domain import STREAM_GA, WorldState, rng_stream
from .engine import MODE_ASF, RunBuffers, StaticWorld, penalties_from_buffers, visit_uniforms
from .selection import WeightVector
from .simulation import SimulationConfig

GENE_BITS = 48
N_GENES = 6
GENOTYPE_LEN = GENE_BITS * N_GENES
GENE_MAX = 2 ** GENE_BITS - 1

ROULETTE_EPS = 1e-9


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 100
    generations: int = 100
    crossover_prob: float = 0.7
    mutation_prob: float = 0.2
    elitism_fraction: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        for name in ("crossover_prob", "mutation_prob", "elitism_fraction"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")


def _check_genotype(genotype) -> np.ndarray:
    bits = np.asarray(genotype, dtype=np.uint8)
    if bits.shape != (GENOTYPE_LEN,):
        raise ValueError(f"genotype must be {GENOTYPE_LEN} bits")
    if bits.max(initial=0) > 1:
        raise ValueError("genotype bits must be 0 or 1")
    return bits


def random_genotype(rng) -> np.ndarray:
    return rng.integers(0, 2, size=GENOTYPE_LEN, dtype=np.uint8)


def decode(genotype) -> tuple[int, ...]:
    """Six unsigned integers, each gene read as 48 big-endian bits."""
    bits = _check_genotype(genotype)
    out = []
    for g in range(N_GENES):
        chunk = bits[g * GENE_BITS:(g + 1) * GENE_BITS]
        out.append(int.from_bytes(np.packbits(chunk).tobytes(), "big"))
    return tuple(out)


def encode(phenotype) -> np.ndarray:
    """Inverse of decode."""
    vals = [int(v) for v in phenotype]
    if len(vals) != N_GENES:
        raise ValueError(f"expected {N_GENES} genes")
    parts = []
    for v in vals:
        if not (0 <= v <= GENE_MAX):
            raise ValueError("gene out of range")
        parts.append(np.unpackbits(
            np.frombuffer(v.to_bytes(GENE_BITS // 8, "big"), dtype=np.uint8)))
    return np.concatenate(parts)


def repair(phenotype) -> WeightVector:
    """Normalize six non-negative integers onto the unit simplex.

    Exact rational division keeps repair(k * p) == repair(p) bit for bit;
    the all-zero phenotype maps to the uniform vector.
    """
    vals = [int(v) for v in phenotype]
    if len(vals) != N_GENES:
        raise ValueError(f"expected {N_GENES} genes")
    if any(v < 0 for v in vals):
        raise ValueError("genes must be non-negative")
    total = sum(vals)
    if total == 0:
        return WeightVector.uniform()
    return WeightVector.from_sequence(float(Fraction(v, total)) for v in vals)


def crossover_double_point(a, b, rng) -> tuple[np.ndarray, np.ndarray]:
    """Swap the segment between two uniform cut points in [1, len-1]."""
    pa = _check_genotype(a)
    pb = _check_genotype(b)
    c1 = int(rng.integers(1, GENOTYPE_LEN))
    c2 = int(rng.integers(1, GENOTYPE_LEN))
    lo, hi = min(c1, c2), max(c1, c2)
    child1 = np.concatenate([pa[:lo], pb[lo:hi], pa[hi:]])
    child2 = np.concatenate([pb[:lo], pa[lo:hi], pb[hi:]])
    return child1, child2


def mutate(genotype, mutation_prob: float, rng) -> np.ndarray:
    """With probability `mutation_prob`, flip each bit with probability 1/len."""
    bits = _check_genotype(genotype).copy()
    if rng.random() < mutation_prob:
        mask = rng.random(GENOTYPE_LEN) < (1.0 / GENOTYPE_LEN)
        bits[mask] ^= 1
    return bits


def _shifted_weights(fitnesses) -> np.ndarray:
    arr = np.asarray(fitnesses, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("population must be non-empty")
    return arr - arr.min() + ROULETTE_EPS


def _roulette_index(cumulative: np.ndarray, rng) -> int:
    u = rng.random() * cumulative[-1]
    idx = int(np.searchsorted(cumulative, u, side="right"))
    return min(idx, len(cumulative) - 1)


def select_roulette(population, fitnesses, rng):
    """Proportional selection on min-shifted fitness (handles negatives)."""
    cumulative = np.cumsum(_shifted_weights(fitnesses))
    return population[_roulette_index(cumulative, rng)]


class FitnessEvaluator:
    """Reusable fitness machinery bound to one world template.

    Holds the array image of the world and one set of run buffers, so scoring
    an individual costs one kernel run plus the penalty pass.
    """

    def __init__(self, world: WorldState, sim_config: SimulationConfig):
        if sim_config.mode != "asf":
            raise ValueError("weight optimization requires asf mode")
        if world.click_ledger:
            raise ValueError("world template must start with an empty ledger")
        self.static = StaticWorld(world)
        self.config = sim_config
        self.buffers = RunBuffers(self.static, sim_config.visits_total)
        self._printed = sim_config.campaign_cost_form == "printed"

    def run_weights(self, weights: WeightVector,
                    uniforms) -> tuple[float, float, PenaltyBreakdown]:
        """(fitness, income, penalties) of one run under fixed weights."""
        result = _eng.run_visits(
            self.static, self.buffers, mode=MODE_ASF,
            theta=np.array(weights.as_tuple()), printed_cost=self._printed,
            thresholds=self.config.thresholds,
            visits=self.config.visits_total, uniforms=uniforms)
        if self.config.apply_penalties:
            pens = penalties_from_buffers(self.static, self.buffers, result,
                                          self.config.coefficients)
        else:
            pens = PenaltyBreakdown()
        return result.income - pens.total(), result.income, pens

    def evaluate(self, genotype, uniforms):
        weights = repair(decode(genotype))
        value, income, pens = self.run_weights(weights, uniforms)
        return value, weights, income, pens


def fitness(genotype, world_template: WorldState, sim_config: SimulationConfig,
            seed: int) -> float:
    """Income minus total penalties for one simulation run under the
    genotype's repaired weights."""
    evaluator = FitnessEvaluator(world_template, sim_config)
    uniforms = visit_uniforms(seed, sim_config.visits_total)
    value, _, _, _ = evaluator.evaluate(genotype, uniforms)
    return value


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_weights: WeightVector


@dataclass(frozen=True)
class OptimizeResult:
    best_weights: WeightVector
    best_fitness: float
    best_income: float
    best_penalties: PenaltyBreakdown
    best_genotype: np.ndarray
    history: list[GenerationRecord]

    def best_so_far(self) -> list[float]:
        out = []
        cur = -math.inf
        for rec in self.history:
            cur = max(cur, rec.best_fitness)
            out.append(cur)
        return out


def _breed(pop: np.ndarray, fitnesses: list[float], ga: GAConfig, rng) -> np.ndarray:
    size = ga.population_size
    n_elite = math.ceil(ga.elitism_fraction * size)
    order = np.lexsort((np.arange(size), -np.asarray(fitnesses)))
    new: list[np.ndarray] = [pop[i].copy() for i in order[:n_elite]]
    cumulative = np.cumsum(_shifted_weights(fitnesses))
    while len(new) < size:
        p1 = pop[_roulette_index(cumulative, rng)]
        p2 = pop[_roulette_index(cumulative, rng)]
        if rng.random() < ga.crossover_prob:
            c1, c2 = crossover_double_point(p1, p2, rng)
        else:
            c1, c2 = p1.copy(), p2.copy()
        new.append(mutate(c1, ga.mutation_prob, rng))
        if len(new) < size:
            new.append(mutate(c2, ga.mutation_prob, rng))
    return np.stack(new)


def optimize(world_template: WorldState, sim_config: SimulationConfig,
             ga_config: GAConfig) -> OptimizeResult:
    """Evolve the weight vector; returns the best-ever individual.

    Each generation draws one fresh visit-stream seed, evaluates the whole
    population on it, copies the elite fraction unchanged and fills the rest
    with roulette parents put through crossover and mutation. With
    generations == 0 the random initial population is evaluated once and its
    best returned. Bit-reproducible for fixed (world, configs).
    """
    rng = rng_stream(ga_config.seed, STREAM_GA)
    evaluator = FitnessEvaluator(world_template, sim_config)
    pop = np.stack([random_genotype(rng) for _ in range(ga_config.population_size)])

    best_fit = -math.inf
    best_income = 0.0
    best_pens = PenaltyBreakdown()
    best_geno: np.ndarray | None = None
    best_weights: WeightVector | None = None
    history: list[GenerationRecord] = []

    n_eval_gens = max(1, ga_config.generations)
    for gen in range(1, n_eval_gens + 1):
        stream_seed = int(rng.integers(0, 2 ** 62))
        uniforms = visit_uniforms(stream_seed, sim_config.visits_total)
        fits = []
        gen_best = -math.inf
        gen_best_weights = None
        for ind in pop:
            value, weights, income, pens = evaluator.evaluate(ind, uniforms)
            fits.append(value)
            if value > gen_best:
                gen_best = value
                gen_best_weights = weights
            if value > best_fit:
                best_fit = value
                best_income = income
                best_pens = pens
                best_geno = ind.copy()
                best_weights = weights
        history.append(GenerationRecord(
            generation=gen, best_fitness=gen_best,
            mean_fitness=sum(fits) / len(fits), best_weights=gen_best_weights))
        if gen == n_eval_gens:
            break
        pop = _breed(pop, fits, ga_config, rng)

    return OptimizeResult(best_weights=best_weights, best_fitness=best_fit,
                          best_income=best_income, best_penalties=best_pens,
                          best_genotype=best_geno, history=history)
