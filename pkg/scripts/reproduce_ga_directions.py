"""Evolve best and worst 4-agent teams with and without noise, then test agreeableness directions.

Defaults are the reduced scale used by the acceptance suite; pass
``--n-gen 100 --fitness-reps 100 --runs 60`` for the full protocol.
"""

import argparse
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from bigfive_abm.core import TRAIT_CODES, NoiseModel, TraitVector
from bigfive_abm.ga import GAConfig, evolve, team_mean_traits
from bigfive_abm.io import fmt, write_csv
from bigfive_abm.seeding import derive_seed
from bigfive_abm.stats import COMPARE_COLUMNS, compare_evolved_traits, comparison_rows, t_test

CONDITIONS = (("best", 0.0), ("worst", 0.0), ("best", 0.2), ("worst", 0.2))


def run_one(job):
    mode, eta, r, args = job
    cfg = GAConfig(mode=mode, n_pop=args.n_pop, n_parents=args.n_parents, n_gen=args.n_gen,
                   fitness_reps=args.fitness_reps, noise=NoiseModel(eta),
                   seed=derive_seed(args.seed, "acceptance-ga", CONDITIONS.index((mode, eta)), r))
    res = evolve(cfg)
    return team_mean_traits(res.best_genotype).as_array(), res.best_fitness


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--n-pop", type=int, default=30)
    ap.add_argument("--n-parents", type=int, default=5)
    ap.add_argument("--n-gen", type=int, default=30)
    ap.add_argument("--fitness-reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--jobs", type=int, default=os.cpu_count())
    ap.add_argument("--out", type=Path, default=Path("ga_out"))
    args = ap.parse_args()

    jobs = [(m, e, r, args) for m, e in CONDITIONS for r in range(args.runs)]
    with ProcessPoolExecutor(args.jobs) as ex:
        results = list(ex.map(run_one, jobs))

    args.out.mkdir(parents=True, exist_ok=True)
    rows, teams = [], {}
    for (mode, eta, r, _), (traits, fitness) in zip(jobs, results):
        rows.append((mode, eta, r, fitness, *traits))
        teams.setdefault((mode, eta), []).append(traits)
    write_csv(args.out / "evolved_teams.csv", ("mode", "noise", "run_id", "fitness") + TRAIT_CODES, rows)

    A, C = TRAIT_CODES.index("A"), TRAIT_CODES.index("C")
    t = {k: np.array(v) for k, v in teams.items()}
    for (mode, eta), arr in t.items():
        print(f"{mode:5s} eta={eta:.1f}  " + "  ".join(f"{c}={m:.3f}" for c, m in zip(TRAIT_CODES, arr.mean(0))))
    tt = t_test(t[("best", 0.2)][:, A], t[("worst", 0.2)][:, A], "pooled")
    print(f"(a) A best0.2 > worst0.2, pooled t({tt.df:g})={fmt(tt.statistic)}, p={fmt(tt.p_two_tailed)}")
    print(f"(b) A best0 < worst0: {t[('best', 0.0)][:, A].mean() < t[('worst', 0.0)][:, A].mean()}")
    print(f"(c) A worst0.2 < worst0: {t[('worst', 0.2)][:, A].mean() < t[('worst', 0.0)][:, A].mean()}")
    print(f"(d) C best0 > worst0: {t[('best', 0.0)][:, C].mean() > t[('worst', 0.0)][:, C].mean()}")

    for eta in (0.0, 0.2):
        table = compare_evolved_traits([TraitVector.from_sequence(x) for x in t[("best", eta)]],
                                       [TraitVector.from_sequence(x) for x in t[("worst", eta)]])
        write_csv(args.out / f"ttest_best_vs_worst_eta{eta:g}.csv", COMPARE_COLUMNS, comparison_rows(table))


if __name__ == "__main__":
    main()
