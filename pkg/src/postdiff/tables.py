"""Built-in experiment grids behind ``postdiff reproduce <table-id>``.

Each grid is a list of (policy, effect size, n) triples. Settings follow the
usual layout: no effect at n=785 and n=197, effect 0.1 at n=785 (the UR
sample size for 80% power) and effect 0.2 at n=197.
"""

from __future__ import annotations

from .harness import DEFAULT_SEED, DEFAULT_SIMS, ExperimentConfig
from .policies import ConfigError, PolicyConfig, PolicyKind

STANDARD_SETTINGS = ((0.0, 785), (0.0, 197), (0.1, 785), (0.2, 197))


def _ur():
    return PolicyConfig(PolicyKind.UNIFORM)


def _ts():
    return PolicyConfig(PolicyKind.THOMPSON)


def _postdiff(c):
    return PolicyConfig(PolicyKind.TS_POSTDIFF, c=c)


def _eps_ts(eps):
    return PolicyConfig(PolicyKind.EPSILON_TS, epsilon=eps)


def _eps_greedy(eps):
    return PolicyConfig(PolicyKind.EPSILON_GREEDY, epsilon=eps)


def _top2(beta):
    return PolicyConfig(PolicyKind.TOP_TWO_TS, beta_top2=beta)


def _probclip(p_max):
    return PolicyConfig(PolicyKind.TS_PROBCLIP, p_max=p_max)


def _fixed_dec():
    policies = [
        _ur(),
        _ts(),
        _eps_ts(0.1),
        _eps_ts(0.6),
        PolicyConfig(PolicyKind.DECLINING_EPSILON_TS),
        PolicyConfig(PolicyKind.DECLINING_EPSILON_GREEDY),
        _eps_greedy(0.1),
        _eps_greedy(0.6),
        PolicyConfig(PolicyKind.GREEDY),
        _postdiff(0.1),
        _postdiff(0.2),
    ]
    return [(p, w, n) for p in policies for w, n in STANDARD_SETTINGS]


def _choosing_c():
    cs = (0.0, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.2, 1.0)
    return [(_postdiff(c), w, 785) for c in cs for w in (0.0, 0.1)]


def _more_c_eps():
    pairs = [(0.05, 0.025), (0.075, 0.05), (0.1, 0.1), (0.125, 0.2), (0.2, 0.6)]
    policies = [p for c, eps in pairs for p in (_postdiff(c), _eps_ts(eps))]
    return [(p, w, n) for p in policies for w, n in STANDARD_SETTINGS]


def _probclip_grid():
    policies = [_postdiff(0.125), _probclip(0.9), _postdiff(0.2), _probclip(0.6)]
    return [(p, w, n) for p in policies for w, n in STANDARD_SETTINGS]


def _top2_grid():
    policies = [_top2(0.95), _eps_greedy(0.1), _probclip(0.9), _top2(0.7), _eps_greedy(0.6), _probclip(0.6)]
    return [(p, w, n) for p in policies for w, n in STANDARD_SETTINGS]


def _power_reward():
    # Top-Two beta and PostDiff c values matched on FPR per sample size
    out = []
    for n, betas, cs, effects in (
        (197, (0.7625, 0.85, 0.9125, 0.95), (0.275, 0.225, 0.175, 0.125), (0.0, 0.2, 0.3, 0.5)),
        (785, (0.8375, 0.8875, 0.9375, 0.975), (0.15, 0.125, 0.1, 0.075), (0.0, 0.1, 0.2, 0.3)),
    ):
        policies = [_ur(), _ts(), *(_top2(b) for b in betas), *(_postdiff(c) for c in cs)]
        out += [(p, w, n) for p in policies for w in effects]
    return out


TABLES = {
    "fixed-dec": _fixed_dec,
    "choosing-c": _choosing_c,
    "more-c-eps": _more_c_eps,
    "probclip": _probclip_grid,
    "top2": _top2_grid,
    "power-reward": _power_reward,
}


def table_grid(table_id: str, n_sims: int = DEFAULT_SIMS, seed: int = DEFAULT_SEED) -> list[ExperimentConfig]:
    if table_id not in TABLES:
        raise ConfigError(f"unknown table {table_id!r}; expected one of {sorted(TABLES)}")
    return [
        ExperimentConfig(policy, effect_size=w, n=n, n_sims=n_sims, base_seed=seed)
        for policy, w, n in TABLES[table_id]()
    ]
