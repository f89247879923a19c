"""Frequentist analysis of finished trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from statistics import NormalDist, StatisticsError
from typing import Sequence

from .core import ContractError, Environment

_STD_NORMAL = NormalDist()


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF on the open interval (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ContractError(f"normal_quantile is defined on (0, 1), got {p}")
    try:
        return _STD_NORMAL.inv_cdf(p)
    except StatisticsError as exc:  # pragma: no cover - guarded above
        raise ContractError(str(exc)) from exc


@lru_cache(maxsize=64)
def critical_value(alpha_level: float) -> float:
    """Two-sided critical value z_{1 - alpha/2}."""
    if not 0.0 < alpha_level < 1.0:
        raise ContractError(f"alpha_level must be in (0, 1), got {alpha_level}")
    return normal_quantile(1.0 - alpha_level / 2.0)


def required_sample_size(effect_size: float, alpha_level: float = 0.05, power_target: float = 0.8) -> int:
    """Total participants for a two-arm UR design to reach ``power_target``.

    Normal approximation with both arm variances at their p = 0.5 bound,
    split evenly across arms: n = (z_{1-a/2} + z_power)^2 / w^2.
    """
    if not 0.0 < effect_size <= 1.0:
        raise ContractError(f"effect_size must be in (0, 1], got {effect_size}")
    if not 0.0 < power_target < 1.0:
        raise ContractError(f"power_target must be in (0, 1), got {power_target}")
    z = critical_value(alpha_level) + normal_quantile(power_target)
    return math.ceil(z * z / (effect_size * effect_size))


@dataclass(frozen=True)
class TestResult:
    z: float
    reject: bool
    estimated_superior_arm: int | None
    degenerate: bool = False

    __test__ = False  # not a pytest class


def wald_test(n1: int, s1: int, n2: int, s2: int, alpha_level: float = 0.05) -> TestResult:
    """Two-proportion Wald z-test with unpooled per-arm standard errors.

    Degenerate cases: an unpulled arm never rejects (z is NaN); a zero
    standard error rejects with infinite z when the means differ and gives
    z = 0 otherwise.
    """
    for n, s in ((n1, s1), (n2, s2)):
        if not 0 <= s <= n:
            raise ContractError(f"need 0 <= successes <= pulls, got s={s}, n={n}")
    crit = critical_value(alpha_level)
    if n1 == 0 or n2 == 0:
        return TestResult(math.nan, False, None, degenerate=True)

    p1 = s1 / n1
    p2 = s2 / n2
    superior = 1 if p1 > p2 else 2 if p2 > p1 else None
    se = math.sqrt(p1 * (1 - p1) / n1 + p2 * (1 - p2) / n2)
    if se == 0.0:
        if p1 == p2:
            return TestResult(0.0, False, None, degenerate=True)
        return TestResult(math.copysign(math.inf, p1 - p2), True, superior, degenerate=True)
    z = (p1 - p2) / se
    return TestResult(z, abs(z) > crit, superior)


@dataclass(frozen=True)
class MetricsSummary:
    """Batch metrics; ``reject_rate`` is the FPR under the null, Power otherwise.

    ``prop_opt`` is None when the arms are equal (no optimal arm exists).
    """

    n_sims: int
    n: int
    effect_size: float
    reject_rate: float
    reject_rate_se: float
    type_s: float
    type_s_se: float
    reward: float
    reward_se: float
    prop_opt: float | None
    prop_opt_se: float | None
    prop_sup: float
    prop_sup_se: float

    @property
    def is_null(self) -> bool:
        return self.effect_size == 0

    @property
    def fpr(self) -> float | None:
        return self.reject_rate if self.is_null else None

    @property
    def fpr_se(self) -> float | None:
        return self.reject_rate_se if self.is_null else None

    @property
    def power(self) -> float | None:
        return None if self.is_null else self.reject_rate

    @property
    def power_se(self) -> float | None:
        return None if self.is_null else self.reject_rate_se


def _prop_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def superior_share(pulls: Sequence[int], successes: Sequence[int]) -> float:
    """Share of allocations given to the arm with the higher final sample mean.

    Ties earn 0.5; an unpulled arm has no mean, so the pulled arm counts.
    """
    n1, n2 = pulls
    total = n1 + n2
    if n1 == 0 or n2 == 0:
        return 1.0
    m1 = successes[0] / n1
    m2 = successes[1] / n2
    if m1 > m2:
        return n1 / total
    if m2 > m1:
        return n2 / total
    return 0.5


def aggregate_metrics(results: Sequence, env: Environment, alpha_level: float = 0.05) -> MetricsSummary:
    """Summarize simulation results that share one environment and horizon.

    Each result needs ``pulls`` and ``successes`` (per arm); the test is
    recomputed at ``alpha_level``. Type-S counts, over all simulations,
    rejections whose estimated better arm is the truly worse one.
    """
    if len(results) == 0:
        raise ContractError("aggregate_metrics needs at least one result")
    horizons = {int(sum(r.pulls)) for r in results}
    if len(horizons) != 1:
        raise ContractError(f"results mix horizons {sorted(horizons)}")
    (n,) = horizons
    n_sims = len(results)
    truth = env.superior_arm

    rejects = wrong_sign = 0
    rewards = []
    opt_shares = []
    sup_shares = []
    for r in results:
        test = wald_test(r.pulls[0], r.successes[0], r.pulls[1], r.successes[1], alpha_level)
        rejects += test.reject
        if truth is not None and test.reject and test.estimated_superior_arm not in (truth, None):
            wrong_sign += 1
        rewards.append((r.successes[0] + r.successes[1]) / n)
        if truth is not None:
            opt_shares.append(r.pulls[truth - 1] / n)
        sup_shares.append(superior_share(r.pulls, r.successes))

    reject_rate = rejects / n_sims
    type_s = wrong_sign / n_sims
    reward = math.fsum(rewards) / n_sims
    if n_sims > 1:
        var = math.fsum((x - reward) ** 2 for x in rewards) / (n_sims - 1)
        reward_se = math.sqrt(var / n_sims)
    else:
        reward_se = 0.0
    if opt_shares:
        prop_opt = math.fsum(opt_shares) / n_sims
        prop_opt_se = _prop_se(prop_opt, n_sims)
    else:
        prop_opt = prop_opt_se = None
    prop_sup = math.fsum(sup_shares) / n_sims

    return MetricsSummary(
        n_sims=n_sims,
        n=n,
        effect_size=env.effect_size,
        reject_rate=reject_rate,
        reject_rate_se=_prop_se(reject_rate, n_sims),
        type_s=type_s,
        type_s_se=_prop_se(type_s, n_sims),
        reward=reward,
        reward_se=reward_se,
        prop_opt=prop_opt,
        prop_opt_se=prop_opt_se,
        prop_sup=prop_sup,
        prop_sup_se=_prop_se(prop_sup, n_sims),
    )
