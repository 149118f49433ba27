import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bigfive_abm.core import NoiseModel, ObjectiveSpec, SampledTraits, TraitVector, evaluate_objective
from bigfive_abm.engine import (
    AgentState,
    ModelConstants,
    SimConfig,
    agent_rng,
    init_team,
    neuroticism_triggered,
    openness_accel,
    openness_candidates,
    personal_best_accel,
    replicate_seed,
    run_simulation,
    run_with_rngs,
    social_accel,
    step_agent,
    team_performance,
    write_trajectories,
)

HALF = TraitVector.uniform(0.5)


def agent(pos, vel=(0.0, 0.0), best=None, history=(), visited=None, traits=HALF):
    pos = np.asarray(pos, dtype=float)
    return AgentState(
        traits=traits,
        position=pos,
        velocity=np.asarray(vel, dtype=float),
        personal_best_value=0.0,
        personal_best_position=np.asarray(pos if best is None else best, dtype=float),
        fitness_history=list(history),
        visited_positions=[pos.copy()] if visited is None else [np.asarray(v, float) for v in visited],
    )


def sampled(n=False, e=False, o=False, a=False, c=True):
    return SampledTraits(n, e, o, a, c)


def table_perceive(values):
    return lambda c: values[tuple(np.round(c, 9))]


# --- constants -----------------------------------------------------------

def test_default_constants_match_published_table():
    c = ModelConstants()
    assert (c.t_max, c.n_hist, c.p_neu, c.p_con, c.v_max) == (100, 6, 0.5, 0.5, 5.0)
    assert c.v_init == (1.0, 1.0)
    assert (c.mu_large, c.sigma_large, c.mu_small, c.sigma_small) == (12.0, 5.0, 1.0, 0.01)
    assert (c.r1, c.r2, c.r3) == (0.5, 0.3, 0.2)
    assert c.a_large == (20.0, 20.0) and c.a_small == (5.0, 5.0)
    assert (c.n_neigh_large, c.n_neigh_small) == (5, 2)


def test_constants_weight_validation():
    with pytest.raises(ValueError):
        ModelConstants(r1=0.2, r2=0.3, r3=0.5)
    with pytest.raises(ValueError):
        ModelConstants(r1=0.5, r2=0.3, r3=0.3)


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig([HALF])
    with pytest.raises(ValueError):
        SimConfig([HALF, HALF], t_max=0)


# --- initialization ----------------------------------------------------------

def test_init_team_deterministic():
    cfg = SimConfig([HALF] * 6, seed=42)
    a, b = init_team(cfg), init_team(cfg)
    for x, y in zip(a, b):
        assert np.array_equal(x.position, y.position) and np.array_equal(x.velocity, y.velocity)


def test_init_team_statistics():
    pos, vel = [], []
    for s in range(10**4 // 4):
        for ag in init_team(SimConfig([HALF] * 4, seed=s)):
            pos.append(ag.position)
            vel.append(ag.velocity)
    pos, vel = np.array(pos), np.array(vel)
    assert np.all(np.abs(pos.mean(axis=0)) < 2.0)
    assert np.all(np.abs(pos) <= 100.0)
    assert np.abs(vel).max() <= 1.0


def test_init_team_bests_and_first_trajectory_row_agree():
    cfg = SimConfig([HALF] * 3, noise=NoiseModel(0.2), seed=5)
    team = init_team(cfg)
    res = run_simulation(cfg)
    for i, ag in enumerate(team):
        assert np.array_equal(ag.position, res.trajectories[0, i])
        assert ag.personal_best_value == res.perceived_fitness[0, i]
    assert res.per_timestep_group_best[0] == max(ag.personal_best_value for ag in team)


# --- neuroticism trigger --------------------------------------------------------

@pytest.mark.parametrize("hist,expected", [
    ([.1, .2, .3, .4, .5, .6], False),
    ([.6, .5, .4, .3, .2, .1], True),
    ([.6, .5, .4], False),
    ([.1, .1, .1, .2, .3, .4], False),   # two stalls
    ([.1, .1, .1, .1, .3, .4], True),    # three stalls
])
def test_neuroticism_triggered(hist, expected):
    assert neuroticism_triggered(hist) is expected


def test_neuroticism_uses_latest_window():
    assert neuroticism_triggered([.9, .8, .7, .6, .1, .2, .3, .4, .5, .6]) is False


# --- openness (d) --------------------------------------------------------------

def test_openness_candidates_hand_built():
    cands = openness_candidates(agent((0, 0)), True, None, delta=2.0)
    expected = [(0, 0), (2, 0), (-2, 0), (0, 2), (0, -2)]
    assert cands.tolist() == [list(map(float, p)) for p in expected]


def test_openness_candidate_count_grows_with_time():
    visited = [(float(t), 1.0) for t in range(7)]
    cands = openness_candidates(agent((6, 1), visited=visited), False, np.random.default_rng(0))
    assert len(cands) == 7 + 4


def test_openness_candidates_are_clamped():
    cands = openness_candidates(agent((99.0, -99.5)), True, None, delta=3.0)
    assert np.all(np.abs(cands) <= 100.0)
    assert cands[1].tolist() == [100.0, -99.5]


def test_closed_mind_delta_is_tight(rng):
    ag = agent((0, 0))
    deltas = np.array([openness_candidates(ag, False, rng)[1, 0] for _ in range(10**4)])
    assert np.mean(np.abs(deltas - 1.0) < 0.05) >= 0.999


def test_open_mind_delta_distribution(rng):
    ag = agent((0, 0))
    deltas = np.array([openness_candidates(ag, True, rng)[1, 0] for _ in range(20000)])
    assert deltas.mean() == pytest.approx(12.0, abs=0.15)
    assert deltas.std() == pytest.approx(5.0, abs=0.15)


def test_openness_accel_weighted_sum():
    cands = [(2, 0), (1, 0), (0, 0)]
    fit = {(2.0, 0.0): 0.9, (1.0, 0.0): 0.8, (0.0, 0.0): 0.7}
    a = openness_accel(cands, (0, 0), table_perceive(fit))
    assert np.allclose(a, (1.3, 0.0), atol=1e-12, rtol=0)


def test_openness_accel_picks_top_three_from_shuffled():
    cands = [(0, 0), (9, 9), (0, -4), (0, 4), (5, 5)]
    fit = {(0.0, 0.0): 0.7, (9.0, 9.0): 0.1, (0.0, -4.0): 0.8, (0.0, 4.0): 0.9, (5.0, 5.0): 0.2}
    a = openness_accel(cands, (0, 0), table_perceive(fit))
    assert np.allclose(a, (0.0, 0.8), atol=1e-12, rtol=0)


def test_openness_accel_zero_displacement():
    a = openness_accel([(3, 3)] * 5, (3, 3), lambda c: 0.5)
    assert np.array_equal(a, [0.0, 0.0])


def test_openness_accel_ties_keep_construction_order():
    a = openness_accel([(1, 0), (2, 0), (3, 0), (4, 0)], (0, 0), lambda c: 0.5)
    assert np.allclose(a, (0.5 * 1 + 0.3 * 2 + 0.2 * 3, 0.0), atol=1e-12)


def test_openness_accel_needs_three():
    with pytest.raises(RuntimeError):
        openness_accel([(0, 0), (1, 1)], (0, 0), lambda c: 0.5)


# --- social (e), (g) and personal best (f) ------------------------------------

def test_social_symmetric_neighbours():
    team = [agent((0, 0)), agent((2, 0)), agent((-2, 0))]
    a = social_accel(0, team, [False, False, False], k=2)
    assert np.allclose(a, (0, 0), atol=1e-12)


def test_social_extravert_counts_twice():
    team = [agent((0, 0)), agent((2, 0)), agent((-2, 0))]
    a = social_accel(0, team, [False, True, False], k=2)
    assert np.allclose(a, (2 / 3, 0), atol=1e-12, rtol=0)


def test_social_projected_target():
    team = [agent((0, 0)), agent((1, 1), vel=(1, 0)), agent((50, 50), vel=(1, 1))]
    a = social_accel(0, team, [False, False, False], k=1, mode="projected")
    assert np.allclose(a, (3, 1), atol=1e-12, rtol=0)


def test_social_k_capped_at_team_size():
    team = [agent((0, 0)), agent((4, 0)), agent((0, 4))]
    a = social_accel(0, team, [False] * 3, k=5)
    assert np.allclose(a, (2, 2), atol=1e-12)


def test_social_nearest_only():
    team = [agent((0, 0)), agent((1, 0)), agent((0, 2)), agent((90, 90))]
    a = social_accel(0, team, [False] * 4, k=2)
    assert np.allclose(a, (0.5, 1.0), atol=1e-12)


def test_social_distance_ties_go_to_lower_index():
    team = [agent((0, 0)), agent((0, 3)), agent((3, 0)), agent((-3, 0))]
    a = social_accel(0, team, [False] * 4, k=1)
    assert np.allclose(a, (0, 3), atol=1e-12)


def test_social_rejects_bad_input():
    with pytest.raises(ValueError):
        social_accel(0, [agent((0, 0))], [False], k=1)
    with pytest.raises(ValueError):
        social_accel(0, [agent((0, 0)), agent((1, 1))], [False] * 2, k=1, mode="sideways")


def test_personal_best_accel():
    assert np.array_equal(personal_best_accel(agent((3, 4), best=(0, 0))), [-3.0, -4.0])
    assert np.array_equal(personal_best_accel(agent((3, 4))), [0.0, 0.0])
    a = personal_best_accel(agent((1, 1), best=(4, 5)))
    assert np.linalg.norm(a) == pytest.approx(5.0)


# --- step_agent branches ---------------------------------------------------------

STALLED = [.6, .5, .4, .3, .2, .1]


def test_neurotic_withdrawal_stops(rng):
    team = [agent((10, 10), vel=(3, 3), history=STALLED), agent((0, 0))]
    v, a = step_agent(0, team, [sampled(n=True), sampled()], ModelConstants(p_neu=1.0), rng)
    assert np.array_equal(v, [0, 0]) and np.array_equal(a, [0, 0])


def test_neurotic_impulse_is_uncapped(rng):
    team = [agent((10, 10), vel=(3, 3), history=STALLED), agent((0, 0))]
    norms = []
    for _ in range(200):
        v, a = step_agent(0, team, [sampled(n=True), sampled()], ModelConstants(p_neu=0.0), rng)
        assert np.array_equal(v, a)
        assert np.all(np.abs(a) <= 20.0)
        norms.append(np.linalg.norm(v))
    assert max(norms) > 5.0


def test_neurotic_without_stall_falls_through(rng):
    team = [agent((10, 10), history=[.1, .2, .3, .4, .5, .6]), agent((0, 0))]
    c = ModelConstants(p_neu=1.0, mu_small=0.0, sigma_small=0.0)
    v, a = step_agent(0, team, [sampled(n=True), sampled()], c, rng)
    assert np.array_equal(v, [0, 0])   # everything cancels: delta=0 and best=position


def test_procrastination_stops(rng):
    team = [agent((10, 10), vel=(2, 2)), agent((0, 0))]
    v, a = step_agent(0, team, [sampled(c=False), sampled()], ModelConstants(p_con=1.0), rng)
    assert np.array_equal(v, [0, 0]) and np.array_equal(a, [0, 0])


def test_branch_three_velocity_cap(rng):
    # delta = 0 makes every candidate the current position, so the openness term is 0
    # and a = ((best - x) + 0) / 2 = (3, 4); v = (3, 4) + (3, 4) = (6, 8) -> capped to (3, 4)
    c = ModelConstants(mu_small=0.0, sigma_small=0.0)
    team = [agent((0, 0), vel=(3, 4), best=(6, 8)), agent((50, 50))]
    v, a = step_agent(0, team, [sampled(), sampled()], c, rng)
    assert np.allclose(a, (3, 4), atol=1e-12, rtol=0)
    assert np.allclose(v, (3, 4), atol=1e-12, rtol=0)


def test_branch_three_mean_of_terms(rng):
    c = ModelConstants(mu_small=0.0, sigma_small=0.0)
    team = [agent((0, 0), vel=(0.5, 0), best=(2, 0)), agent((30, 30))]
    v, a = step_agent(0, team, [sampled(), sampled()], c, rng)
    assert np.allclose(a, (1, 0), atol=1e-12)
    assert np.allclose(v, (1.5, 0), atol=1e-12)


def test_extravert_uses_team_centroid(rng):
    c = ModelConstants(mu_small=0.0, sigma_small=0.0)
    team = [agent((0, 0), best=(40, 40)), agent((2, 0)), agent((-2, 4))]
    v, a = step_agent(0, team, [sampled(e=True), sampled(), sampled()], c, rng)
    assert np.allclose(a, (0, 1), atol=1e-12)   # centroid (0, 2), averaged with openness 0


def test_agreeable_uses_k_from_extraversion_branch(rng):
    c = ModelConstants(mu_small=0.0, sigma_small=0.0)
    # introvert: k=2 nearest of three teammates; projected neighbours (2,0)+2*(0,1) and (0,2)+2*(1,0)
    team = [agent((0, 0)), agent((2, 0), vel=(0, 1)), agent((0, 2), vel=(1, 0)), agent((60, 60))]
    v, a = step_agent(0, team, [sampled(a=True)] + [sampled()] * 3, c, rng)
    assert np.allclose(a, np.array([2.0, 2.0]) / 3, atol=1e-12)


def test_sloppiness_adds_bounded_jitter(rng):
    c = ModelConstants(p_con=0.0, mu_small=0.0, sigma_small=0.0)
    team = [agent((0, 0)), agent((20, 20))]
    seen = []
    for _ in range(300):
        v, a = step_agent(0, team, [sampled(c=False), sampled()], c, rng)
        assert np.all(np.abs(a) <= 5.0 / 3 + 1e-12)
        seen.append(a)
    assert np.ptp(np.array(seen), axis=0).min() > 2.0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), eta=st.sampled_from([0.0, 0.2]), n_agents=st.integers(2, 6))
def test_branch_three_never_exceeds_vmax(seed, eta, n_agents):
    rng = np.random.default_rng(seed)
    team = []
    for _ in range(n_agents):
        visited = rng.uniform(-100, 100, size=(int(rng.integers(1, 8)), 2))
        team.append(agent(visited[-1], vel=rng.uniform(-30, 30, 2), best=rng.uniform(-100, 100, 2),
                          visited=visited, history=list(rng.random(6))))
    samp = [SampledTraits(False, *(bool(b) for b in rng.random(4) < 0.5)) for _ in range(n_agents)]
    samp[0] = SampledTraits(False, samp[0].e_active, samp[0].o_active, samp[0].a_active, True)
    v, _ = step_agent(0, team, samp, ModelConstants(), rng, noise=NoiseModel(eta))
    assert np.linalg.norm(v) <= 5.0 + 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_neurotic_stillness_or_impulse(seed):
    rng = np.random.default_rng(seed)
    team = [agent(rng.uniform(-100, 100, 2), vel=rng.uniform(-5, 5, 2), history=[0.5] * 6),
            agent(rng.uniform(-100, 100, 2))]
    v, a = step_agent(0, team, [sampled(n=True), sampled()], ModelConstants(), rng)
    assert np.array_equal(a, [0, 0]) or np.all(np.abs(a) <= 20.0)


# --- whole runs ------------------------------------------------------------------

def test_run_is_deterministic():
    cfg = SimConfig([TraitVector(0.2, 0.4, 0.6, 0.8, 0.3)] * 5, noise=NoiseModel(0.1), seed=77)
    a, b = run_simulation(cfg), run_simulation(cfg)
    assert a.group_best_value == b.group_best_value
    assert np.array_equal(a.trajectories, b.trajectories)
    assert np.array_equal(a.perceived_fitness, b.perceived_fitness)


@pytest.mark.parametrize("eta", [0.0, 0.2])
def test_run_invariants(eta):
    rng = np.random.default_rng(int(eta * 10))
    for s in range(20):
        team = [TraitVector.from_sequence(rng.random(5)) for _ in range(4)]
        cfg = SimConfig(team, noise=NoiseModel(eta), seed=s)
        res = run_simulation(cfg)
        assert np.all(np.abs(res.trajectories) <= 100.0)
        assert res.group_best_value == evaluate_objective(res.group_best_position, cfg.objective)
        assert np.all(np.diff(res.per_timestep_group_best) >= 0)
        assert res.trajectories.shape == (101, 4, 2)


def test_zero_noise_group_best_matches_true_best():
    res = run_simulation(SimConfig([HALF] * 4, seed=3))
    assert res.per_timestep_group_best[-1] == res.group_best_value
    true_f = res.true_fitness(ObjectiveSpec())
    assert res.group_best_value == pytest.approx(true_f.max(), abs=1e-15)


def test_conscientious_calm_team_finds_optimum():
    team = [TraitVector(0.0, 0.5, 0.5, 0.5, 1.0)] * 6
    hits = sum(run_simulation(SimConfig(team, seed=s)).group_best_value > 0.95 for s in range(100))
    assert hits >= 90


def test_permuting_agents_permutes_results():
    rng = np.random.default_rng(8)
    team = [TraitVector.from_sequence(rng.random(5)) for _ in range(5)]
    cfg = SimConfig(team, noise=NoiseModel(0.2), seed=11)
    perm = [3, 0, 4, 2, 1]
    base = run_with_rngs(cfg, [agent_rng(cfg.seed, i) for i in range(5)])
    pcfg = SimConfig([team[p] for p in perm], noise=cfg.noise, seed=cfg.seed)
    permuted = run_with_rngs(pcfg, [agent_rng(cfg.seed, p) for p in perm])
    assert np.array_equal(permuted.trajectories, base.trajectories[:, perm])
    assert np.array_equal(permuted.perceived_fitness, base.perceived_fitness[:, perm])


def test_team_performance():
    cfg = SimConfig([HALF] * 4, noise=NoiseModel(0.1), seed=21)
    single = run_simulation(SimConfig(cfg.team_traits, noise=cfg.noise, seed=replicate_seed(21, 0)))
    assert team_performance(cfg, 1) == single.group_best_value
    p = team_performance(cfg, 10)
    assert 0.0 <= p <= 1.0 and p == team_performance(cfg, 10)
    with pytest.raises(ValueError):
        team_performance(cfg, 0)


def test_trajectory_export(tmp_path):
    cfg = SimConfig([HALF] * 3, noise=NoiseModel(0.2), t_max=5, seed=2)
    res = run_simulation(cfg)
    path = tmp_path / "traj.csv"
    write_trajectories(path, [(0, res)], cfg.objective)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["run_id", "timestep", "agent_id", "x", "y", "perceived_fitness", "true_fitness"]
    assert len(rows) == 1 + 6 * 3
    last = rows[-1]
    assert (last[1], last[2]) == ("5", "2")
    assert float(last[3]) == pytest.approx(res.trajectories[5, 2, 0], rel=1e-11)
