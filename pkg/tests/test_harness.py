import json

import numpy as np
import pytest

from postdiff import (
    ConfigError,
    Environment,
    ExperimentConfig,
    PolicyConfig,
    PolicyKind,
    PolicyState,
    RngStream,
    draw_reward,
    phi_curve,
    run_experiment,
    run_simulation,
    select,
    sweep,
)
from postdiff.harness import load_config, load_grid

UR = PolicyConfig(PolicyKind.UNIFORM)
TS = PolicyConfig(PolicyKind.THOMPSON)


def reference_trajectory(config, sim_index):
    """Plain-Python replay of one simulation through the public API."""
    rng = RngStream(config.base_seed, sim_index)
    env = config.env
    state = PolicyState()
    arms = []
    for _ in range(config.n):
        choice = select(config.policy, state, rng)
        reward = draw_reward(env, choice.arm, rng)
        state = state.updated(choice.arm, reward)
        arms.append(choice.arm)
    return state, arms


def test_degenerate_environment():
    cfg = ExperimentConfig(UR, n=4, n_sims=3, p_star=(1.0, 1.0))
    res = run_simulation(cfg, 0)
    assert res.total_reward == 4 and sum(res.pulls) == 4


def test_ts_locks_onto_deterministic_arm():
    cfg = ExperimentConfig(TS, n=100, n_sims=1000, p_star=(1.0, 0.0))
    out = run_experiment(cfg)
    share = np.mean([r.pulls[0] >= 90 for r in out.results])
    assert share >= 0.99


@pytest.mark.parametrize(
    "policy",
    [
        UR,
        TS,
        PolicyConfig(PolicyKind.GREEDY),
        PolicyConfig(PolicyKind.EPSILON_TS, epsilon=0.2),
        PolicyConfig(PolicyKind.DECLINING_EPSILON_GREEDY),
        PolicyConfig(PolicyKind.TOP_TWO_TS, beta_top2=0.7),
        PolicyConfig(PolicyKind.TS_POSTDIFF, c=0.1),
        PolicyConfig(PolicyKind.TS_PROBCLIP, p_max=0.8),
    ],
    ids=lambda p: p.kind.value,
)
def test_kernel_matches_reference_loop(policy):
    cfg = ExperimentConfig(policy, effect_size=0.2, n=60, n_sims=5, base_seed=31)
    for i in range(cfg.n_sims):
        res = run_simulation(cfg, i, trace=True)
        state, arms = reference_trajectory(cfg, i)
        assert res.pulls == state.pulls
        assert res.successes == state.successes
        assert list(res.trace.arms) == arms


def test_result_invariants_and_determinism():
    cfg = ExperimentConfig(PolicyConfig(PolicyKind.TS_POSTDIFF, c=0.1), effect_size=0.1, n=200, n_sims=50)
    a = run_experiment(cfg).results
    b = run_experiment(cfg).results
    assert a == b
    for r in a:
        assert sum(r.pulls) == 200
        assert all(s <= n for s, n in zip(r.successes, r.pulls))
        assert r.total_reward == sum(r.successes)
        assert r.ur_branch_count + r.ts_branch_count == 200


def test_run_simulation_equals_experiment_entry():
    cfg = ExperimentConfig(TS, effect_size=0.1, n=150, n_sims=20)
    out = run_experiment(cfg)
    assert all(run_simulation(cfg, i) == out.results[i] for i in (0, 7, 19))


def test_parallel_equals_serial():
    cfg = ExperimentConfig(PolicyConfig(PolicyKind.TS_POSTDIFF, c=0.15), effect_size=0.1, n=300, n_sims=301)
    serial = run_experiment(cfg, workers=1)
    parallel = run_experiment(cfg, workers=3)
    assert serial.results == parallel.results
    assert serial.summary == parallel.summary


def test_simulations_are_isolated():
    big = ExperimentConfig(TS, effect_size=0.1, n=100, n_sims=10)
    small = ExperimentConfig(TS, effect_size=0.1, n=100, n_sims=4)
    full = run_experiment(big).results
    assert run_experiment(small).results == full[:4]
    # dropping simulation 2 changes nobody else
    for i in (0, 1, 3):
        assert run_simulation(big, i) == full[i]


def test_phi_recording_does_not_perturb_trajectory():
    policy = PolicyConfig(PolicyKind.TS_POSTDIFF, c=0.1)
    plain = ExperimentConfig(policy, effect_size=0.1, n=120, n_sims=8)
    rec = ExperimentConfig(policy, effect_size=0.1, n=120, n_sims=8, record_phi=True, phi_checkpoints=(1, 60, 120))
    for a, b in zip(run_experiment(plain).results, run_experiment(rec).results):
        assert (a.pulls, a.successes) == (b.pulls, b.successes)
        assert len(b.phi_hat_at_checkpoints) == 3
        assert a.phi_hat_at_checkpoints is None


def test_phi_curve_boundary():
    cfg = ExperimentConfig(
        PolicyConfig(PolicyKind.TS_POSTDIFF, c=1.0), effect_size=0.3, n=100, n_sims=50,
        record_phi=True, phi_checkpoints=(1, 50, 100),
    )
    assert all(v == pytest.approx(1.0) for _, v in phi_curve(cfg))


def test_phi_curve_requires_recording():
    with pytest.raises(ConfigError):
        phi_curve(ExperimentConfig(PolicyConfig(PolicyKind.TS_POSTDIFF, c=0.1), n=10, n_sims=2))


def test_postdiff_interpolation_on_full_runs():
    for c, expected in ((0.0, 0), (1.0, 100)):
        cfg = ExperimentConfig(PolicyConfig(PolicyKind.TS_POSTDIFF, c=c), n=100, n_sims=20)
        assert all(r.ur_branch_count == expected for r in run_experiment(cfg).results)


def test_ur_prop_opt_is_half():
    cfg = ExperimentConfig(UR, effect_size=0.2, n=197, n_sims=4000)
    s = run_experiment(cfg).summary
    assert abs(s.prop_opt - 0.5) <= 3 * s.prop_opt_se


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=0),
        dict(n_sims=0),
        dict(effect_size=1.5),
        dict(alpha_level=0.0),
        dict(record_phi=True, phi_checkpoints=(1, 2)),
        dict(phi_checkpoints=(1, 2)),
        dict(p_star=(0.5, 1.2)),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        ExperimentConfig(TS, **kwargs)


@pytest.mark.parametrize("cps", [(), (0, 5), (5, 5), (3, 1), (1, 11)])
def test_checkpoint_validation(cps):
    with pytest.raises(ConfigError):
        ExperimentConfig(PolicyConfig(PolicyKind.TS_POSTDIFF, c=0.1), n=10, record_phi=True, phi_checkpoints=cps)


def test_sim_index_range():
    cfg = ExperimentConfig(UR, n=5, n_sims=3)
    with pytest.raises(ConfigError):
        run_simulation(cfg, 3)


def test_config_json_round_trip(tmp_path):
    cfg = ExperimentConfig(
        PolicyConfig(PolicyKind.TS_POSTDIFF, c=0.125, mc_samples_phi=200),
        effect_size=0.1, n=785, n_sims=100, base_seed=7, record_phi=True, phi_checkpoints=(10, 785),
    )
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path) == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**cfg.to_dict(), "bogus": 1})


def test_grid_file_with_defaults(tmp_path):
    path = tmp_path / "grid.json"
    path.write_text(json.dumps({
        "defaults": {"n": 50, "n_sims": 10},
        "experiments": [{"policy": "ur"}, {"policy": {"kind": "ts-postdiff", "c": 0.2}, "effect_size": 0.1}],
    }))
    grid = load_grid(path)
    assert [g.n for g in grid] == [50, 50]
    assert grid[1].policy.c == 0.2


def test_sweep():
    one = ExperimentConfig(TS, effect_size=0.1, n=100, n_sims=30)
    assert sweep([one])[0].summary == run_experiment(one).summary
    with pytest.raises(ConfigError):
        sweep([one, ExperimentConfig(TS, effect_size=0.1, n=100, n_sims=60)])
    with pytest.raises(ConfigError):
        sweep([])


def test_environment_from_config():
    assert ExperimentConfig(UR, effect_size=0.2).env == Environment((0.6, 0.4))
