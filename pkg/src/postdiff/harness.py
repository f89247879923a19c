"""Seeded Monte-Carlo runs over experiment configurations.

Simulation ``i`` of a config draws everything from the stream
``(base_seed, i)``; its φ̂ diagnostics use ``(base_seed, PHI_STREAM_OFFSET + i)``.
Results therefore do not depend on chunking, worker count or which other
simulations ran.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels as K
from .analysis import MetricsSummary, TestResult, aggregate_metrics, wald_test
from .core import Environment
from .policies import Branch, ConfigError, PolicyConfig, PolicyKind

log = logging.getLogger(__name__)

DEFAULT_SEED = 2021
DEFAULT_SIMS = 10_000
PHI_STREAM_OFFSET = 1 << 63
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a policy run ``n_sims`` times for ``n`` participants.

    ``p_star`` overrides the arm means derived from ``effect_size``.
    """

    policy: PolicyConfig
    effect_size: float = 0.0
    n: int = 785
    n_sims: int = DEFAULT_SIMS
    base_seed: int = DEFAULT_SEED
    alpha_level: float = 0.05
    record_phi: bool = False
    phi_checkpoints: tuple[int, ...] = ()
    p_star: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "phi_checkpoints", tuple(int(t) for t in self.phi_checkpoints))
        if self.p_star is not None:
            object.__setattr__(self, "p_star", tuple(float(p) for p in self.p_star))
        self.validate()

    def validate(self):
        if not isinstance(self.policy, PolicyConfig):
            raise ConfigError("policy must be a PolicyConfig")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ConfigError(f"n must be an integer >= 1, got {self.n!r}")
        if not (isinstance(self.n_sims, int) and self.n_sims >= 1):
            raise ConfigError(f"n_sims must be an integer >= 1, got {self.n_sims!r}")
        if not 0.0 <= self.effect_size <= 1.0:
            raise ConfigError(f"effect_size must be in [0, 1], got {self.effect_size}")
        if not 0.0 < self.alpha_level < 1.0:
            raise ConfigError(f"alpha_level must be in (0, 1), got {self.alpha_level}")
        if not isinstance(self.base_seed, int):
            raise ConfigError(f"base_seed must be an integer, got {self.base_seed!r}")
        if self.p_star is not None:
            try:
                Environment(self.p_star)
            except ValueError as exc:
                raise ConfigError(f"p_star: {exc}") from None
        cps = self.phi_checkpoints
        if self.record_phi:
            if self.policy.kind is not PolicyKind.TS_POSTDIFF:
                raise ConfigError("record_phi needs a ts-postdiff policy (phi is defined by its c)")
            if not cps:
                raise ConfigError("phi_checkpoints must be non-empty when record_phi is set")
        elif cps:
            raise ConfigError("phi_checkpoints given but record_phi is false")
        if any(t < 1 or t > self.n for t in cps):
            raise ConfigError(f"phi_checkpoints must lie in [1, n={self.n}]")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ConfigError("phi_checkpoints must be strictly increasing")

    @property
    def env(self) -> Environment:
        if self.p_star is not None:
            return Environment(self.p_star)
        return Environment.from_effect_size(self.effect_size)

    @property
    def key(self) -> tuple:
        return (self.policy.kind.value, self.policy.describe_params(), self.env.p_star, self.n)

    def to_dict(self) -> dict:
        out = {
            "policy": self.policy.to_dict(),
            "effect_size": self.effect_size,
            "n": self.n,
            "n_sims": self.n_sims,
            "base_seed": self.base_seed,
            "alpha_level": self.alpha_level,
            "record_phi": self.record_phi,
            "phi_checkpoints": list(self.phi_checkpoints),
        }
        if self.p_star is not None:
            out["p_star"] = list(self.p_star)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config field(s) {sorted(unknown)}")
        if "policy" not in data:
            raise ConfigError("policy is required")
        policy = data.pop("policy")
        if isinstance(policy, str):
            policy = {"kind": policy}
        data["policy"] = PolicyConfig.from_dict(policy)
        if "phi_checkpoints" in data:
            data["phi_checkpoints"] = tuple(data["phi_checkpoints"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


def load_grid(path: str | Path) -> list[ExperimentConfig]:
    """Read a grid file: a list of configs, or ``{"defaults": {...}, "experiments": [...]}``."""
    data = json.loads(Path(path).read_text())
    defaults = {}
    if isinstance(data, dict):
        defaults = data.get("defaults", {})
        data = data.get("experiments")
    if not isinstance(data, list) or not data:
        raise ConfigError("grid file must contain a non-empty list of experiments")
    return [ExperimentConfig.from_dict({**defaults, **entry}) for entry in data]


@dataclass(frozen=True)
class Trace:
    """Per-step record of one trajectory (arms are 1-based)."""

    arms: np.ndarray
    rewards: np.ndarray
    branches: np.ndarray


@dataclass(frozen=True)
class SimulationResult:
    pulls: tuple[int, int]
    successes: tuple[int, int]
    total_reward: int
    test: TestResult
    branch_counts: tuple[int, ...] = (0,) * K.N_BRANCHES
    phi_hat_at_checkpoints: tuple[float, ...] | None = None
    trace: Trace | None = field(default=None, compare=False, repr=False)

    @property
    def ur_branch_count(self) -> int:
        return self.branch_counts[Branch.UR]

    @property
    def ts_branch_count(self) -> int:
        return self.branch_counts[Branch.TS]


@dataclass
class ExperimentOutcome:
    config: ExperimentConfig
    summary: MetricsSummary
    results: list[SimulationResult]


class SimulationError(RuntimeError):
    def __init__(self, sim_index: int, cause: BaseException):
        super().__init__(f"simulation {sim_index} failed: {cause!r}")
        self.sim_index = sim_index


def _run_chunk(config: ExperimentConfig, sim_indices: np.ndarray, trace: bool):
    policy = config.policy
    checkpoints = np.asarray(config.phi_checkpoints if config.record_phi else (), dtype=np.int64)
    return K.simulate_batch(
        policy.kernel_code,
        policy.kernel_params(),
        np.asarray(config.env.p_star, dtype=np.float64),
        config.n,
        np.uint64(config.base_seed & _U64),
        sim_indices,
        np.uint64(PHI_STREAM_OFFSET),
        checkpoints,
        float(policy.c or 0.0),
        policy.phi_samples,
        trace,
    )


def _run_chunk_located(config, sim_indices, trace):
    try:
        return _run_chunk(config, sim_indices, trace)
    except Exception:
        # rerun one at a time to attach the failing index
        for i in sim_indices:
            try:
                _run_chunk(config, np.array([i], dtype=np.int64), trace)
            except Exception as exc:
                raise SimulationError(int(i), exc) from exc
        raise


def _results_from_arrays(config, arrays, trace) -> list[SimulationResult]:
    pulls, successes, branches, phi, t_arm, t_reward, t_branch = arrays
    out = []
    for j in range(pulls.shape[0]):
        n1, n2 = int(pulls[j, 0]), int(pulls[j, 1])
        s1, s2 = int(successes[j, 0]), int(successes[j, 1])
        out.append(
            SimulationResult(
                pulls=(n1, n2),
                successes=(s1, s2),
                total_reward=s1 + s2,
                test=wald_test(n1, s1, n2, s2, config.alpha_level),
                branch_counts=tuple(int(x) for x in branches[j]),
                phi_hat_at_checkpoints=tuple(float(x) for x in phi[j]) if config.record_phi else None,
                trace=Trace(t_arm[j] + 1, t_reward[j].copy(), t_branch[j].copy()) if trace else None,
            )
        )
    return out


def _simulate(config: ExperimentConfig, sim_indices: np.ndarray, workers: int, trace: bool):
    workers = max(1, int(workers))
    if workers == 1 or len(sim_indices) < 2:
        parts = [_run_chunk_located(config, sim_indices, trace)]
    else:
        chunks = [c for c in np.array_split(sim_indices, workers) if len(c)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _run_chunk_located(config, c, trace), chunks))
    arrays = tuple(np.concatenate([p[i] for p in parts]) for i in range(7))
    return arrays


def run_simulation(config: ExperimentConfig, sim_index: int, trace: bool = False) -> SimulationResult:
    """One trajectory, fully determined by ``(config.base_seed, sim_index)``."""
    config.validate()
    if not 0 <= sim_index < config.n_sims:
        raise ConfigError(f"sim_index must be in [0, n_sims={config.n_sims}), got {sim_index}")
    arrays = _run_chunk_located(config, np.array([sim_index], dtype=np.int64), trace)
    return _results_from_arrays(config, arrays, trace)[0]


def run_experiment(config: ExperimentConfig, workers: int = 1, trace: bool = False) -> ExperimentOutcome:
    config.validate()
    log.debug("running %s x%d (n=%d, w=%g)", config.policy.label, config.n_sims, config.n, config.effect_size)
    arrays = _simulate(config, np.arange(config.n_sims, dtype=np.int64), workers, trace)
    results = _results_from_arrays(config, arrays, trace)
    summary = aggregate_metrics(results, config.env, config.alpha_level)
    return ExperimentOutcome(config, summary, results)


@dataclass(frozen=True)
class SweepRow:
    config: ExperimentConfig
    summary: MetricsSummary


def sweep(grid: Sequence[ExperimentConfig], workers: int = 1) -> list[SweepRow]:
    if not grid:
        raise ConfigError("sweep grid is empty")
    seen = {}
    for i, cfg in enumerate(grid):
        cfg.validate()
        if cfg.key in seen:
            raise ConfigError(f"duplicate sweep entry {cfg.key} (rows {seen[cfg.key]} and {i})")
        seen[cfg.key] = i
    return [SweepRow(cfg, run_experiment(cfg, workers).summary) for cfg in grid]


def phi_curve(config: ExperimentConfig, workers: int = 1) -> list[tuple[int, float]]:
    """Cross-simulation mean of φ̂ at every checkpoint."""
    config.validate()
    if not config.record_phi:
        raise ConfigError("phi_curve needs record_phi=true")
    arrays = _simulate(config, np.arange(config.n_sims, dtype=np.int64), workers, False)
    means = arrays[3].mean(axis=0)
    return [(t, float(m)) for t, m in zip(config.phi_checkpoints, means)]
