"""Real-coded GA that searches for the best (or worst) performing 4-agent team.

A genotype is 20 trait scores, five per agent in N, E, O, A, C order. Fitness
is the mean group best of the decoded team over repeated simulations.
Selection is truncation, variation is single-point crossover followed by a
signed creep mutation of one gene.
"""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import TRAIT_CODES, NoiseModel, TraitVector
from .engine import SimConfig, team_performance
from .seeding import derive_seed

TEAM_SIZE = 4
N_GENES = 5 * TEAM_SIZE

GENERAL_TRAIT_MIN = (0.1,) * 5
GENERAL_TRAIT_MAX = (0.9,) * 5
# calibrated to the MBA sample, order N, E, O, A, C
SAMPLE_TRAIT_MIN = (0.25, 0.42, 0.38, 0.25, 0.50)
SAMPLE_TRAIT_MAX = (0.68, 0.83, 0.79, 0.67, 1.00)


@dataclass(frozen=True)
class Genotype:
    genes: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "genes", tuple(float(g) for g in self.genes))
        if len(self.genes) != N_GENES:
            raise ValueError(f"genotype needs {N_GENES} genes, got {len(self.genes)}")

    def as_array(self) -> np.ndarray:
        return np.array(self.genes)


@dataclass(frozen=True)
class GAConfig:
    mode: str = "best"
    n_pop: int = 30
    n_parents: int = 5
    n_gen: int = 100
    fitness_reps: int = 100
    trait_min: tuple[float, ...] = GENERAL_TRAIT_MIN
    trait_max: tuple[float, ...] = GENERAL_TRAIT_MAX
    noise: NoiseModel = field(default_factory=NoiseModel)
    creep: float = 0.05
    t_max: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("best", "worst"):
            raise ValueError(f"mode must be 'best' or 'worst', got {self.mode!r}")
        if not (1 <= self.n_parents <= self.n_pop):
            raise ValueError("need 1 <= n_parents <= n_pop")
        if self.n_gen < 1 or self.fitness_reps < 1:
            raise ValueError("n_gen and fitness_reps must be >= 1")
        lo, hi = _per_trait(self.trait_min), _per_trait(self.trait_max)
        object.__setattr__(self, "trait_min", lo)
        object.__setattr__(self, "trait_max", hi)
        if any(a > b for a, b in zip(lo, hi)) or min(lo) < 0.0 or max(hi) > 1.0:
            raise ValueError("trait bounds must satisfy 0 <= trait_min <= trait_max <= 1")

    @property
    def gene_min(self) -> np.ndarray:
        return np.tile(self.trait_min, TEAM_SIZE)

    @property
    def gene_max(self) -> np.ndarray:
        return np.tile(self.trait_max, TEAM_SIZE)


def _per_trait(bound) -> tuple[float, ...]:
    if np.isscalar(bound):
        return (float(bound),) * 5
    bound = tuple(float(b) for b in bound)
    if len(bound) != 5:
        raise ValueError("per-trait bounds need 5 values (N, E, O, A, C)")
    return bound


@dataclass
class GenerationTrace:
    generation: int
    fitness: list[float]
    mean_fitness: float
    best_ever_fitness: float
    parent_mean_traits: TraitVector
    population: list[Genotype] = field(default_factory=list)


@dataclass
class EvolveResult:
    best_genotype: Genotype
    best_fitness: float
    traces: list[GenerationTrace]
    final_population: list[Genotype]


def decode(g: Genotype) -> list[TraitVector]:
    return [TraitVector.from_sequence(g.genes[5 * k:5 * k + 5]) for k in range(TEAM_SIZE)]


def encode(team: Sequence[TraitVector]) -> Genotype:
    if len(team) != TEAM_SIZE:
        raise ValueError(f"team must have {TEAM_SIZE} agents")
    return Genotype(np.concatenate([tv.as_array() for tv in team]))


def team_mean_traits(g: Genotype) -> TraitVector:
    return TraitVector.from_sequence(g.as_array().reshape(TEAM_SIZE, 5).mean(axis=0))


def evaluate_fitness(g: Genotype, cfg: GAConfig, seed: int | None = None) -> float:
    seed = cfg.seed if seed is None else seed
    sim = SimConfig(decode(g), noise=cfg.noise, t_max=cfg.t_max, seed=seed)
    return team_performance(sim, cfg.fitness_reps)


def select_parents(population: Sequence[Genotype], fitness: Sequence[float], cfg: GAConfig) -> list[Genotype]:
    """Truncation selection; equal fitness keeps population order."""
    if len(population) != len(fitness):
        raise ValueError("population and fitness lengths differ")
    f = np.asarray(fitness, dtype=float)
    order = np.argsort(-f if cfg.mode == "best" else f, kind="stable")
    return [population[i] for i in order[:cfg.n_parents]]


def crossover(p1: Genotype, p2: Genotype, rng: np.random.Generator, point: int | None = None) -> Genotype:
    c = int(rng.integers(1, N_GENES)) if point is None else point
    return Genotype(p1.genes[:c] + p2.genes[c:])


def mutate(g: Genotype, cfg: GAConfig, rng: np.random.Generator) -> Genotype:
    genes = g.as_array()
    idx = int(rng.integers(N_GENES))
    step = cfg.creep if rng.random() < 0.5 else -cfg.creep
    genes[idx] = min(max(genes[idx] + step, cfg.gene_min[idx]), cfg.gene_max[idx])
    return Genotype(genes)


def random_genotype(cfg: GAConfig, rng: np.random.Generator) -> Genotype:
    lo, hi = cfg.gene_min, cfg.gene_max
    return Genotype(lo + (hi - lo) * rng.random(N_GENES))


def _fitness_job(args):
    g, cfg, seed = args
    return evaluate_fitness(g, cfg, seed)


def evolve(cfg: GAConfig, executor: Executor | None = None) -> EvolveResult:
    """Run the generational loop and return the best-ever team with its trace.

    Each individual's evaluation seed depends only on (cfg.seed, generation,
    index), so handing an executor in changes speed, not results.
    """
    rng = np.random.Generator(np.random.PCG64(derive_seed(cfg.seed, "ga-variation")))
    population = [random_genotype(cfg, rng) for _ in range(cfg.n_pop)]
    better = (lambda a, b: a > b) if cfg.mode == "best" else (lambda a, b: a < b)
    best_g, best_f = None, None
    traces = []

    for gen in range(cfg.n_gen):
        jobs = [(g, cfg, derive_seed(cfg.seed, "ga-fitness", gen, j)) for j, g in enumerate(population)]
        mapper = executor.map if executor is not None else map
        fitness = list(mapper(_fitness_job, jobs))

        for g, f in zip(population, fitness):
            if best_f is None or better(f, best_f):
                best_g, best_f = g, f

        parents = select_parents(population, fitness, cfg)
        mean_traits = np.mean([team_mean_traits(p).as_array() for p in parents], axis=0)
        traces.append(GenerationTrace(
            generation=gen,
            fitness=fitness,
            mean_fitness=float(np.mean(fitness)),
            best_ever_fitness=best_f,
            parent_mean_traits=TraitVector.from_sequence(mean_traits),
            population=population,
        ))

        if gen == cfg.n_gen - 1:
            break
        children = []
        for _ in range(cfg.n_pop):
            if len(parents) > 1:
                i, j = rng.choice(len(parents), size=2, replace=False)
            else:
                i = j = 0
            child = crossover(parents[i], parents[j], rng)
            children.append(mutate(child, cfg, rng))
        population = children

    return EvolveResult(best_g, best_f, traces, population)


GA_TRACE_COLUMNS = ("ga_run_id", "generation", "individual_id", "fitness")
GA_GENERATION_COLUMNS = ("ga_run_id", "generation", "mean_fitness", "best_ever_fitness") + TRAIT_CODES


def trace_rows(run_id: int, result: EvolveResult):
    for tr in result.traces:
        for j, f in enumerate(tr.fitness):
            yield (run_id, tr.generation, j, f)


def generation_rows(run_id: int, result: EvolveResult):
    for tr in result.traces:
        yield (run_id, tr.generation, tr.mean_fitness, tr.best_ever_fitness, *tr.parent_mean_traits.as_array())
