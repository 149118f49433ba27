import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bigfive_abm.core import NoiseModel, TraitVector
from bigfive_abm.ga import (
    SAMPLE_TRAIT_MAX,
    SAMPLE_TRAIT_MIN,
    GAConfig,
    Genotype,
    crossover,
    decode,
    encode,
    evaluate_fitness,
    evolve,
    mutate,
    select_parents,
)

WORKED = [0.2, 0.3, 0.5, 0.8, 0.4, 0.1, 0.4, 0.6, 0.4, 0.7,
          0.8, 0.2, 0.4, 0.7, 0.6, 0.3, 0.3, 0.5, 0.3, 0.2]

genes = st.lists(st.floats(0.1, 0.9), min_size=20, max_size=20)


def test_decode_worked_example():
    team = decode(Genotype(WORKED))
    assert team == [
        TraitVector(0.2, 0.3, 0.5, 0.8, 0.4),
        TraitVector(0.1, 0.4, 0.6, 0.4, 0.7),
        TraitVector(0.8, 0.2, 0.4, 0.7, 0.6),
        TraitVector(0.3, 0.3, 0.5, 0.3, 0.2),
    ]


def test_decode_uniform():
    assert decode(Genotype([0.5] * 20)) == [TraitVector.uniform(0.5)] * 4


@given(genes)
def test_decode_encode_round_trip(g):
    assert encode(decode(Genotype(g))).genes == Genotype(g).genes


def test_genotype_length_checked():
    with pytest.raises(ValueError):
        Genotype([0.5] * 19)


def test_config_validation():
    with pytest.raises(ValueError):
        GAConfig(mode="median")
    with pytest.raises(ValueError):
        GAConfig(n_pop=4, n_parents=5)
    with pytest.raises(ValueError):
        GAConfig(trait_min=0.8, trait_max=0.2)
    cfg = GAConfig(trait_min=SAMPLE_TRAIT_MIN, trait_max=SAMPLE_TRAIT_MAX)
    assert cfg.gene_min[5:10].tolist() == list(SAMPLE_TRAIT_MIN)


@pytest.mark.parametrize("mode,expected", [("best", [0]), ("worst", [1])])
def test_select_parents_truncation(mode, expected):
    pop = [Genotype([v] * 20) for v in (0.2, 0.3, 0.4)]
    cfg = GAConfig(mode=mode, n_pop=3, n_parents=1)
    chosen = select_parents(pop, [0.9, 0.1, 0.5], cfg)
    assert chosen == [pop[i] for i in expected]


def test_select_parents_everyone_sorted():
    pop = [Genotype([v] * 20) for v in (0.2, 0.3, 0.4, 0.5)]
    cfg = GAConfig(mode="best", n_pop=4, n_parents=4)
    assert select_parents(pop, [0.5, 0.9, 0.5, 0.1], cfg) == [pop[1], pop[0], pop[2], pop[3]]


def test_crossover_identical_parents(rng):
    p = Genotype(WORKED)
    assert crossover(p, p, rng) == p


def test_crossover_at_agent_boundary(rng):
    a, b = Genotype([0.1] * 20), Genotype([0.9] * 20)
    child = crossover(a, b, rng, point=5)
    assert child.genes[:5] == (0.1,) * 5 and child.genes[5:] == (0.9,) * 15


@settings(deadline=None)
@given(genes, genes, st.integers(0, 2**32))
def test_crossover_genes_come_from_parents(g1, g2, seed):
    a, b = Genotype(g1), Genotype(g2)
    child = crossover(a, b, np.random.default_rng(seed))
    assert all(c in (x, y) for c, x, y in zip(child.genes, a.genes, b.genes))
    cut = next((i for i in range(20) if child.genes[i:] == b.genes[i:]), 20)
    assert child.genes[:cut] == a.genes[:cut]


def test_crossover_point_range():
    rng = np.random.default_rng(1)
    a, b = Genotype([0.1] * 20), Genotype([0.9] * 20)
    points = {crossover(a, b, rng).genes.index(0.9) for _ in range(2000)}
    assert points == set(range(1, 20))


def test_mutate_caps_at_trait_max():
    cfg = GAConfig()
    g = Genotype([0.9] * 20)
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = mutate(g, cfg, rng)
        assert max(m.genes) == 0.9
        assert sum(a != b for a, b in zip(m.genes, g.genes)) <= 1


def test_mutate_creep_step():
    cfg = GAConfig()
    rng = np.random.default_rng(4)
    g = Genotype([0.5] * 20)
    seen = set()
    for _ in range(200):
        m = mutate(g, cfg, rng)
        diff = [i for i in range(20) if m.genes[i] != g.genes[i]]
        assert len(diff) == 1
        seen.add(round(m.genes[diff[0]], 12))
    assert seen == {0.45, 0.55}


@settings(deadline=None)
@given(genes, st.integers(0, 2**32))
def test_mutate_respects_bounds(g, seed):
    cfg = GAConfig(trait_min=SAMPLE_TRAIT_MIN, trait_max=SAMPLE_TRAIT_MAX)
    g = np.clip(g, cfg.gene_min, cfg.gene_max)
    m = mutate(Genotype(g), cfg, np.random.default_rng(seed)).as_array()
    assert np.all(m >= cfg.gene_min) and np.all(m <= cfg.gene_max)


def test_fitness_range_and_determinism():
    cfg = GAConfig(fitness_reps=5, seed=9, noise=NoiseModel(0.2))
    g = Genotype(WORKED)
    f = evaluate_fitness(g, cfg)
    assert 0.0 <= f <= 1.0 and f == evaluate_fitness(g, cfg)


def test_fitness_prefers_calm_conscientious_team():
    cfg = GAConfig(fitness_reps=30, seed=3)
    good = Genotype([0.0, 0.5, 0.5, 0.5, 1.0] * 4)
    bad = Genotype([1.0, 0.5, 0.5, 0.5, 0.0] * 4)
    assert evaluate_fitness(good, cfg) > evaluate_fitness(bad, cfg)


TINY = dict(n_pop=8, n_parents=3, n_gen=4, fitness_reps=2, t_max=30)


def test_evolve_single_generation():
    res = evolve(GAConfig(n_gen=1, n_pop=6, n_parents=2, fitness_reps=2, t_max=20, seed=1))
    assert len(res.traces) == 1 and len(res.traces[0].fitness) == 6


@pytest.mark.parametrize("mode", ["best", "worst"])
def test_evolve_best_ever_monotone(mode):
    res = evolve(GAConfig(mode=mode, seed=2, **TINY))
    best = [t.best_ever_fitness for t in res.traces]
    steps = np.diff(best)
    assert np.all(steps >= 0) if mode == "best" else np.all(steps <= 0)
    assert res.best_fitness == best[-1]
    for tr in res.traces:
        assert len(tr.fitness) == 8
        assert all(0.0 <= f <= 1.0 for f in tr.fitness)


def test_evolve_population_stays_in_bounds():
    cfg = GAConfig(trait_min=SAMPLE_TRAIT_MIN, trait_max=SAMPLE_TRAIT_MAX, seed=5, **TINY)
    res = evolve(cfg)
    for g in res.final_population + [res.best_genotype]:
        a = g.as_array()
        assert np.all(a >= cfg.gene_min) and np.all(a <= cfg.gene_max)
    assert len(res.final_population) == cfg.n_pop


def test_evolve_is_deterministic():
    cfg = GAConfig(seed=6, noise=NoiseModel(0.2), **TINY)
    a, b = evolve(cfg), evolve(cfg)
    assert a.best_genotype == b.best_genotype
    assert [t.fitness for t in a.traces] == [t.fitness for t in b.traces]


def test_evolve_with_executor_matches_serial():
    from concurrent.futures import ThreadPoolExecutor

    cfg = GAConfig(seed=7, **TINY)
    with ThreadPoolExecutor(4) as ex:
        par = evolve(cfg, ex)
    ser = evolve(cfg)
    assert [t.fitness for t in par.traces] == [t.fitness for t in ser.traces]
