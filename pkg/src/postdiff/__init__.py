"""Two-arm Bernoulli bandit simulator for adaptive experiments.

Allocation rules (UR, TS, Greedy, epsilon mixtures, Top-Two TS, TS PostDiff,
TS with probability clipping), a Wald-test analysis layer and a seeded
Monte-Carlo harness that reports FPR, Power, Type-S error, Reward and
allocation shares.
"""

from .analysis import (
    MetricsSummary,
    TestResult,
    aggregate_metrics,
    normal_cdf,
    normal_quantile,
    required_sample_size,
    wald_test,
)
from .core import (
    ArmPosterior,
    ContractError,
    Environment,
    RngStream,
    draw_reward,
    posterior_update,
    sample_beta,
)
from .harness import (
    ExperimentConfig,
    ExperimentOutcome,
    SimulationResult,
    phi_curve,
    run_experiment,
    run_simulation,
    sweep,
)
from .policies import (
    ArmChoice,
    Branch,
    ConfigError,
    EpsilonSchedule,
    PolicyConfig,
    PolicyKind,
    PolicyState,
    estimate_phi,
    prob_first_arm_beats_second,
    select,
    select_epsilon_mix,
    select_greedy,
    select_top2_ts,
    select_ts,
    select_ts_postdiff,
    select_ts_probclip,
    select_uniform,
)

__version__ = "0.1.0"
