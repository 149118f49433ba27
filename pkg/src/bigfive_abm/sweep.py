"""One-trait-at-a-time parameter sweeps and the published-trend checks.

For each grid value the swept trait is set on every team member while the
remaining traits are drawn uniformly on [0, 1] per agent and per run.
"""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import TRAIT_CODES, NoiseModel, TraitVector
from .engine import SimConfig, run_simulation
from .seeding import derive_seed

DEFAULT_GRID = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_NOISE = (0.0, 0.10, 0.20)
SLOPE_THRESHOLD = 0.3


@dataclass(frozen=True)
class SweepConfig:
    swept_trait: str
    grid: tuple[float, ...] = DEFAULT_GRID
    runs_per_cell: int = 100
    team_size: int = 6
    noise_levels: tuple[float, ...] = DEFAULT_NOISE
    t_max: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.swept_trait not in TRAIT_CODES:
            raise ValueError(f"swept_trait must be one of {TRAIT_CODES}, got {self.swept_trait!r}")
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        object.__setattr__(self, "noise_levels", tuple(float(e) for e in self.noise_levels))
        if not self.grid or any(not (0.0 <= g <= 1.0) for g in self.grid):
            raise ValueError("grid values must lie in [0, 1]")
        if self.runs_per_cell < 1:
            raise ValueError("runs_per_cell must be >= 1")
        if self.team_size < 2:
            raise ValueError("team_size must be >= 2")


@dataclass(frozen=True)
class SweepCell:
    trait: str
    value: float
    noise: float
    mean: float
    sd: float
    n_runs: int


def _cell_job(args) -> SweepCell:
    cfg, gi, ni = args
    value, eta = cfg.grid[gi], cfg.noise_levels[ni]
    k = TRAIT_CODES.index(cfg.swept_trait)
    cell_seed = derive_seed(cfg.seed, "sweep", k, gi, ni)
    perf = np.empty(cfg.runs_per_cell)
    for r in range(cfg.runs_per_cell):
        rng = np.random.Generator(np.random.PCG64(derive_seed(cell_seed, "team", r)))
        traits = rng.random((cfg.team_size, 5))
        traits[:, k] = value
        sim = SimConfig([TraitVector.from_sequence(row) for row in traits],
                        noise=NoiseModel(eta), t_max=cfg.t_max,
                        seed=derive_seed(cell_seed, "run", r))
        perf[r] = run_simulation(sim).group_best_value
    sd = float(np.std(perf, ddof=1)) if perf.size > 1 else 0.0
    return SweepCell(cfg.swept_trait, value, eta, float(perf.mean()), sd, cfg.runs_per_cell)


def run_sweep(cfg: SweepConfig, executor: Executor | None = None) -> list[SweepCell]:
    """Cells ordered noise-major, then by grid value."""
    jobs = [(cfg, gi, ni) for ni in range(len(cfg.noise_levels)) for gi in range(len(cfg.grid))]
    mapper = executor.map if executor is not None else map
    return list(mapper(_cell_job, jobs))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    xc, yc = x - x.mean(), y - y.mean()
    denom = np.sqrt((xc ** 2).sum() * (yc ** 2).sum())
    return float((xc * yc).sum() / denom) if denom > 0 else 0.0


class _Table:
    """Lookup of sweep cells by (trait, noise) with completeness checks."""

    def __init__(self, tables: Mapping[str, Sequence[SweepCell]]):
        missing = [c for c in TRAIT_CODES if c not in tables]
        if missing:
            raise ValueError(f"missing sweep tables for traits {missing}")
        self.cells = {}
        for code in TRAIT_CODES:
            for c in tables[code]:
                self.cells.setdefault((code, c.noise), []).append(c)
        self.noise_levels = sorted({eta for (_, eta) in self.cells})
        if len(self.noise_levels) < 2:
            raise ValueError("trend checks need at least two noise levels")
        grid = None
        for code in TRAIT_CODES:
            for eta in self.noise_levels:
                cells = self.cells.get((code, eta))
                if not cells:
                    raise ValueError(f"missing cells for trait {code} at noise {eta}")
                cells.sort(key=lambda c: c.value)
                g = tuple(c.value for c in cells)
                if grid is None:
                    grid = g
                elif g != grid:
                    raise ValueError(f"trait {code} at noise {eta} has an incomplete grid")
        self.grid = np.array(grid)
        self.low, self.high = self.noise_levels[0], self.noise_levels[-1]

    def means(self, code, eta):
        return np.array([c.mean for c in self.cells[(code, eta)]])

    def sds(self, code, eta):
        return np.array([c.sd for c in self.cells[(code, eta)]])

    def slope(self, code, eta):
        return pearson(self.grid, self.means(code, eta))


def trait_slope(tables: Mapping[str, Sequence[SweepCell]], code: str, eta: float) -> float:
    """Pearson r between grid value and cell mean for one trait at one noise level."""
    return _Table(tables).slope(code, eta)


def check_trends(tables: Mapping[str, Sequence[SweepCell]], threshold: float = SLOPE_THRESHOLD) -> list[dict]:
    """Evaluate the seven validation trends against complete sweep tables.

    The lowest noise level in the tables stands in for "no uncertainty" and the
    highest for "high uncertainty". A slope counts as directional when
    ``|r| >= threshold`` and as flat when ``|r| < threshold``.
    """
    tb = _Table(tables)
    low, high = tb.low, tb.high
    noisy = [eta for eta in tb.noise_levels if eta != low]
    report = []

    def add(tid, desc, observed, passed):
        report.append({"trend_id": tid, "description": desc, "observed_statistic": observed,
                       "threshold": threshold if tid >= 4 else 0.0, "pass": bool(passed)})

    deltas = {c: float(tb.means(c, high).mean() - tb.means(c, low).mean()) for c in TRAIT_CODES}
    add(1, "mean performance falls from lowest to highest noise for every trait",
        {"delta_mean": deltas}, all(d < 0 for d in deltas.values()))

    sd_deltas = {c: float(tb.sds(c, high).mean() - tb.sds(c, low).mean()) for c in TRAIT_CODES}
    add(2, "performance SD rises from lowest to highest noise for every trait",
        {"delta_sd": sd_deltas}, all(d > 0 for d in sd_deltas.values()))

    n_means = tb.means("N", low)
    gap = float(n_means[:-1].min() - n_means[-1])
    add(3, "at lowest noise, maximal neuroticism gives the lowest mean",
        {"mean_at_max": float(n_means[-1]), "min_gap_to_others": gap}, gap > 0)

    r_e = {str(eta): tb.slope("E", eta) for eta in tb.noise_levels}
    add(4, "extraversion slope negative without noise, positive with noise",
        {"pearson_r": r_e},
        r_e[str(low)] <= -threshold and all(r_e[str(e)] >= threshold for e in noisy))

    for tid, code, name in ((5, "O", "openness"), (6, "A", "agreeableness")):
        r = {str(eta): tb.slope(code, eta) for eta in tb.noise_levels}
        add(tid, f"{name} slope flat without noise, positive with noise",
            {"pearson_r": r},
            abs(r[str(low)]) < threshold and all(r[str(e)] >= threshold for e in noisy))

    r_c = {str(eta): tb.slope("C", eta) for eta in tb.noise_levels}
    r_sd = {str(eta): pearson(tb.grid, tb.sds("C", eta)) for eta in tb.noise_levels}
    add(7, "conscientiousness raises mean and lowers SD at every noise level",
        {"pearson_r_mean": r_c, "pearson_r_sd": r_sd},
        all(r_c[k] >= threshold and r_sd[k] <= -threshold for k in r_c))
    return report


SWEEP_COLUMNS = ("trait", "grid_value", "noise", "mean_perf", "sd_perf", "n_runs")


def sweep_rows(cells: Sequence[SweepCell]):
    for c in cells:
        yield (c.trait, c.value, c.noise, c.mean, c.sd, c.n_runs)
