"""Personality-gated particle-swarm team simulation.

Each agent moves through a bounded 2-d solution space. At every timestep its
Big-Five traits are sampled as independent coin flips, and the active traits
decide how it moves: withdraw, jump at random, procrastinate, explore nearby
points, follow neighbours, or return to its own best position. The team's score
is the true (noise-free) fitness at the best position any member found.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _kernels as K
from .core import (
    Bounds,
    NoiseModel,
    ObjectiveSpec,
    SampledTraits,
    TraitVector,
    evaluate_objective,
)
from .seeding import derive_seed


@dataclass(frozen=True)
class ModelConstants:
    t_max: int = 100
    n_hist: int = 6
    p_neu: float = 0.5
    p_con: float = 0.5
    v_max: float = 5.0
    v_init: tuple[float, ...] = (1.0, 1.0)
    mu_large: float = 12.0
    sigma_large: float = 5.0
    mu_small: float = 1.0
    sigma_small: float = 0.01
    r1: float = 0.5
    r2: float = 0.3
    r3: float = 0.2
    a_large: tuple[float, ...] = (20.0, 20.0)
    a_small: tuple[float, ...] = (5.0, 5.0)
    n_neigh_large: int = 5
    n_neigh_small: int = 2

    def __post_init__(self):
        if abs(self.r1 + self.r2 + self.r3 - 1.0) > 1e-12:
            raise ValueError("top-3 weights must sum to 1")
        if not (self.r1 >= self.r2 >= self.r3):
            raise ValueError("top-3 weights must be non-increasing")
        if self.n_hist < 2:
            raise ValueError("n_hist must be at least 2")

    def packed(self) -> np.ndarray:
        return np.array([
            self.n_hist, self.p_neu, self.p_con, self.v_max,
            self.mu_large, self.sigma_large, self.mu_small, self.sigma_small,
            self.r1, self.r2, self.r3, self.n_neigh_large, self.n_neigh_small,
        ], dtype=float)


@dataclass(frozen=True)
class SimConfig:
    team_traits: tuple[TraitVector, ...]
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    noise: NoiseModel = field(default_factory=NoiseModel)
    t_max: int = 100
    constants: ModelConstants = field(default_factory=ModelConstants)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "team_traits", tuple(self.team_traits))
        if len(self.team_traits) < 2:
            raise ValueError("a team needs at least 2 agents")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        d = self.objective.bounds.ndim
        if len(self.constants.v_init) != d or len(self.constants.a_large) != d or len(self.constants.a_small) != d:
            raise ValueError(f"vector constants must have the domain dimension {d}")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def team_size(self) -> int:
        return len(self.team_traits)


@dataclass
class AgentState:
    traits: TraitVector
    position: np.ndarray
    velocity: np.ndarray
    personal_best_value: float
    personal_best_position: np.ndarray
    fitness_history: list[float] = field(default_factory=list)
    visited_positions: list[np.ndarray] = field(default_factory=list)


@dataclass
class SimResult:
    group_best_value: float
    group_best_position: np.ndarray
    trajectories: np.ndarray          # (t_max + 1, team, ndim)
    perceived_fitness: np.ndarray     # (t_max + 1, team)
    per_timestep_group_best: np.ndarray

    def true_fitness(self, objective: ObjectiveSpec) -> np.ndarray:
        return 1.0 - np.sqrt((self.trajectories ** 2).sum(axis=-1)) / objective.radius


class _AgentDraws(NamedTuple):
    pos0: np.ndarray
    vel0: np.ndarray
    uniforms: np.ndarray
    normals: np.ndarray
    noise: np.ndarray


def agent_rng(seed: int, agent_index: int) -> np.random.Generator:
    """Independent stream for one agent of one run."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(agent_index,))))


def _draw(rng: np.random.Generator, config: SimConfig) -> _AgentDraws:
    # draw order is part of the reproducibility contract
    b = config.objective.bounds
    d = b.ndim
    pos0 = b.lower + (b.upper - b.lower) * rng.random(d)
    vel0 = np.asarray(config.constants.v_init) * (2.0 * rng.random(d) - 1.0)
    uniforms = rng.random((config.t_max, K.n_slots(d)))
    normals = rng.standard_normal(config.t_max)
    if config.noise.eta > 0.0:
        noise = rng.random(K.noise_length(config.t_max, d))
    else:
        noise = np.zeros(1)
    return _AgentDraws(pos0, vel0, uniforms, normals, noise)


def init_team(config: SimConfig, rngs: Sequence[np.random.Generator] | None = None) -> list[AgentState]:
    """Initial agents: uniform position in the domain, small random velocity."""
    if rngs is None:
        rngs = [agent_rng(config.seed, i) for i in range(config.team_size)]
    eta = config.noise.eta
    team = []
    for traits, rng in zip(config.team_traits, rngs):
        dr = _draw(rng, config)
        f = evaluate_objective(dr.pos0, config.objective)
        pf = K.perceive(f, eta, dr.noise[0]) if eta > 0.0 else f
        team.append(AgentState(
            traits=traits,
            position=dr.pos0,
            velocity=dr.vel0,
            personal_best_value=pf,
            personal_best_position=dr.pos0.copy(),
            fitness_history=[pf],
            visited_positions=[dr.pos0.copy()],
        ))
    return team


def group_best(team: Sequence[AgentState]) -> tuple[float, np.ndarray]:
    best = max(range(len(team)), key=lambda i: (team[i].personal_best_value, -i))
    return team[best].personal_best_value, team[best].personal_best_position.copy()


def neuroticism_triggered(history: Sequence[float], n_hist: int = 6) -> bool:
    """True once the window is full and at least half its transitions failed to improve."""
    hist = np.asarray(history[-n_hist:], dtype=float)
    return bool(K.triggered(hist, len(hist), n_hist))


def openness_candidates(agent: AgentState, o_active: bool, rng: np.random.Generator,
                        constants: ModelConstants = ModelConstants(),
                        bounds: Bounds = Bounds(), delta: float | None = None) -> np.ndarray:
    """Previously visited positions followed by +/- delta probes along each axis.

    Probes are clamped into the domain. ``delta`` overrides the normal draw.
    """
    if delta is None:
        mu, sigma = ((constants.mu_large, constants.sigma_large) if o_active
                     else (constants.mu_small, constants.sigma_small))
        delta = mu + sigma * rng.standard_normal()
    visited = np.asarray(agent.visited_positions, dtype=float)
    return K.build_candidates(visited, np.asarray(agent.position, dtype=float),
                              float(delta), bounds.lower, bounds.upper)


def openness_accel(candidates, position, perceive: Callable[[np.ndarray], float],
                   constants: ModelConstants = ModelConstants()) -> np.ndarray:
    cands = np.asarray(candidates, dtype=float)
    if len(cands) < 3:
        raise RuntimeError("openness step needs at least 3 candidates")
    fit = np.array([perceive(c) for c in cands], dtype=float)
    return K.top3_accel(cands, fit, np.asarray(position, dtype=float),
                        constants.r1, constants.r2, constants.r3)


def social_accel(agent_index: int, team: Sequence[AgentState], e_active: Sequence[bool],
                 k: int, mode: str = "current") -> np.ndarray:
    """Pull toward the weighted centroid of the k nearest teammates.

    ``mode="projected"`` aims at where each neighbour will be two steps on at
    its current velocity. Extraverted neighbours count twice.
    """
    if len(team) < 2:
        raise ValueError("social acceleration needs at least one teammate")
    if mode not in ("current", "projected"):
        raise ValueError(f"unknown mode {mode!r}")
    pos = np.array([a.position for a in team], dtype=float)
    vel = np.array([a.velocity for a in team], dtype=float)
    return K.social_accel(pos, vel, np.asarray(e_active, dtype=np.bool_), agent_index, k,
                          mode == "projected")


def personal_best_accel(agent: AgentState) -> np.ndarray:
    return np.asarray(agent.personal_best_position, dtype=float) - np.asarray(agent.position, dtype=float)


def step_agent(agent_index: int, team: Sequence[AgentState], sampled: Sequence[SampledTraits],
               constants: ModelConstants, rng: np.random.Generator,
               objective: ObjectiveSpec = ObjectiveSpec(),
               noise: NoiseModel = NoiseModel()) -> tuple[np.ndarray, np.ndarray]:
    """One behavioural update for ``team[agent_index]``; returns (velocity, acceleration).

    ``sampled`` holds this timestep's trait realisation for every teammate.
    Uses the same compiled update as :func:`run_simulation`.
    """
    agent = team[agent_index]
    b = objective.bounds
    d = b.ndim
    t = len(agent.visited_positions)
    u = rng.random(K.n_slots(d))
    z = rng.standard_normal()
    cand_noise = rng.random(t + 2 * d) if noise.eta > 0.0 else np.zeros(0)
    active = np.array([s.as_array() for s in sampled], dtype=np.bool_)
    pos = np.array([a.position for a in team], dtype=float)
    vel = np.array([a.velocity for a in team], dtype=float)
    trig = neuroticism_triggered(agent.fitness_history, constants.n_hist)
    return K.agent_update(
        agent_index, np.asarray(agent.visited_positions, dtype=float), pos, vel,
        np.asarray(agent.personal_best_position, dtype=float), trig, active,
        u, z, cand_noise, noise.eta, b.lower, b.upper, objective.radius,
        constants.packed(), np.asarray(constants.a_large, dtype=float),
        np.asarray(constants.a_small, dtype=float),
    )


def run_with_rngs(config: SimConfig, rngs: Sequence[np.random.Generator]) -> SimResult:
    """Run with caller-supplied per-agent streams (``rngs[i]`` drives agent i)."""
    draws = [_draw(rng, config) for rng in rngs]
    b = config.objective.bounds
    traits = np.array([tv.as_array() for tv in config.team_traits])
    traj, perceived, trace, gpos, gval = K.simulate(
        traits,
        np.array([dr.pos0 for dr in draws]),
        np.array([dr.vel0 for dr in draws]),
        np.array([dr.uniforms for dr in draws]),
        np.array([dr.normals for dr in draws]),
        np.array([dr.noise for dr in draws]),
        config.noise.eta, b.lower, b.upper, config.objective.radius,
        config.constants.packed(),
        np.asarray(config.constants.a_large, dtype=float),
        np.asarray(config.constants.a_small, dtype=float),
        config.t_max,
    )
    return SimResult(
        group_best_value=evaluate_objective(gpos, config.objective),
        group_best_position=gpos,
        trajectories=traj,
        perceived_fitness=perceived,
        per_timestep_group_best=trace,
    )


def run_simulation(config: SimConfig) -> SimResult:
    return run_with_rngs(config, [agent_rng(config.seed, i) for i in range(config.team_size)])


def replicate_seed(seed: int, run_index: int) -> int:
    return derive_seed(seed, "replicate", run_index)


def team_performance(config: SimConfig, n_runs: int) -> float:
    """Mean true group-best fitness over ``n_runs`` independently seeded runs."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    total = 0.0
    for r in range(n_runs):
        cfg = SimConfig(config.team_traits, config.objective, config.noise, config.t_max,
                        config.constants, replicate_seed(config.seed, r))
        total += run_simulation(cfg).group_best_value
    return total / n_runs


TRAJECTORY_COLUMNS = ("run_id", "timestep", "agent_id", "x", "y", "perceived_fitness", "true_fitness")


def trajectory_rows(run_id: int, result: SimResult, objective: ObjectiveSpec):
    true_f = result.true_fitness(objective)
    t_len, n, _ = result.trajectories.shape
    for t in range(t_len):
        for i in range(n):
            x, y = result.trajectories[t, i]
            yield (run_id, t, i, x, y, result.perceived_fitness[t, i], true_f[t, i])


def write_trajectories(path, results: Sequence[tuple[int, SimResult]], objective: ObjectiveSpec) -> None:
    from .io import fmt

    if objective.bounds.ndim != 2:
        raise ValueError("trajectory export is defined for 2-d domains")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for run_id, res in results:
            for row in trajectory_rows(run_id, res, objective):
                w.writerow([row[0], row[1], row[2]] + [fmt(v) for v in row[3:]])
