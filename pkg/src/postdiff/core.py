"""Environment, Beta posteriors and the deterministic random stream."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K

_U64 = (1 << 64) - 1


class ContractError(ValueError):
    """An operation was called outside its documented domain."""


@dataclass(frozen=True)
class Environment:
    """True Bernoulli success rates of the two arms."""

    p_star: tuple[float, float]

    def __post_init__(self):
        p = tuple(float(x) for x in self.p_star)
        if len(p) != 2 or not all(0.0 <= x <= 1.0 for x in p):
            raise ContractError(f"p_star must be two rates in [0, 1], got {self.p_star}")
        object.__setattr__(self, "p_star", p)

    @classmethod
    def from_effect_size(cls, w: float) -> Environment:
        """Arm means 0.5 + w/2 and 0.5 - w/2, so arm 1 is the better arm."""
        if not 0.0 <= w <= 1.0:
            raise ContractError(f"effect size must be in [0, 1], got {w}")
        return cls((0.5 + w / 2, 0.5 - w / 2))

    @property
    def effect_size(self) -> float:
        return abs(self.p_star[0] - self.p_star[1])

    @property
    def superior_arm(self) -> int | None:
        """1 or 2, or None when both arms share the same rate."""
        if self.p_star[0] > self.p_star[1]:
            return 1
        if self.p_star[1] > self.p_star[0]:
            return 2
        return None


@dataclass(frozen=True)
class ArmPosterior:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ContractError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def n_obs(self) -> int:
        """Pulls absorbed on top of the Beta(1, 1) prior."""
        return int(round(self.alpha + self.beta - 2))

    @property
    def is_integral(self) -> bool:
        return float(self.alpha).is_integer() and float(self.beta).is_integer()


class RngStream:
    """Counter-based stream keyed by ``(base_seed, stream_index)``.

    The key is a hash of both integers and draw ``i`` is a hash of
    ``(key, i)``, so streams can be built in any order, on any worker, and
    reproduce bit for bit. Seeds are taken modulo 2**64.
    """

    def __init__(self, base_seed: int, stream_index: int = 0):
        self.base_seed = int(base_seed) & _U64
        self.stream_index = int(stream_index) & _U64
        self._state = K.new_stream(np.uint64(self.base_seed), np.uint64(self.stream_index))

    @property
    def draws(self) -> int:
        """Uniform variates consumed so far."""
        return int(self._state[1])

    def uniform(self) -> float:
        return K.next_uniform(self._state)

    def copy(self) -> RngStream:
        other = RngStream.__new__(RngStream)
        other.base_seed = self.base_seed
        other.stream_index = self.stream_index
        other._state = self._state.copy()
        return other

    def __repr__(self):
        return f"RngStream(base_seed={self.base_seed}, stream_index={self.stream_index}, draws={self.draws})"


def _check_arm(arm) -> int:
    if arm not in (1, 2):
        raise ContractError(f"arm must be 1 or 2, got {arm!r}")
    return arm - 1


def draw_reward(env: Environment, arm: int, rng: RngStream, size: int | None = None):
    """Bernoulli(p_star[arm]) reward; one uniform per reward.

    With ``size`` returns an int8 array of that many consecutive rewards.
    """
    p = env.p_star[_check_arm(arm)]
    if size is None:
        return K.bernoulli(rng._state, p)
    return K.bernoulli_many(rng._state, p, int(size))


def sample_beta(alpha: float, beta: float, rng: RngStream, size: int | None = None):
    """Beta(alpha, beta) draw as a ratio of Marsaglia-Tsang gamma variates."""
    if not (alpha > 0 and beta > 0):
        raise ContractError(f"Beta parameters must be positive, got ({alpha}, {beta})")
    if size is None:
        return K.next_beta(rng._state, float(alpha), float(beta))
    return K.beta_many(rng._state, float(alpha), float(beta), int(size))


def posterior_update(post: ArmPosterior, reward: int) -> ArmPosterior:
    if reward == 1:
        return ArmPosterior(post.alpha + 1, post.beta)
    if reward == 0:
        return ArmPosterior(post.alpha, post.beta + 1)
    raise ContractError(f"reward must be 0 or 1, got {reward!r}")
