"""Two-arm allocation rules behind a single ``select`` entry point.

Every ``select_*`` function is pure with respect to :class:`PolicyState`: it
only consumes draws from the stream it is given. Posterior updates are the
caller's job.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .core import ArmPosterior, ContractError, RngStream, posterior_update


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


class PolicyKind(str, enum.Enum):
    UNIFORM = "ur"
    THOMPSON = "ts"
    GREEDY = "greedy"
    EPSILON_GREEDY = "eps-greedy"
    EPSILON_TS = "eps-ts"
    DECLINING_EPSILON_GREEDY = "dec-eps-greedy"
    DECLINING_EPSILON_TS = "dec-eps-ts"
    TOP_TWO_TS = "top2-ts"
    TS_POSTDIFF = "ts-postdiff"
    TS_PROBCLIP = "ts-probclip"

    @classmethod
    def parse(cls, name: str) -> PolicyKind:
        key = name.strip().lower().replace("_", "-")
        for kind in cls:
            if kind.value == key or kind.name.lower().replace("_", "-") == key:
                return kind
        raise ConfigError(f"policy: unknown kind {name!r}; expected one of {[k.value for k in cls]}")


_KIND_CODE = {
    PolicyKind.UNIFORM: K.UR,
    PolicyKind.THOMPSON: K.TS,
    PolicyKind.GREEDY: K.GREEDY,
    PolicyKind.EPSILON_GREEDY: K.EPS_GREEDY,
    PolicyKind.EPSILON_TS: K.EPS_TS,
    PolicyKind.DECLINING_EPSILON_GREEDY: K.DEC_EPS_GREEDY,
    PolicyKind.DECLINING_EPSILON_TS: K.DEC_EPS_TS,
    PolicyKind.TOP_TWO_TS: K.TOP2_TS,
    PolicyKind.TS_POSTDIFF: K.TS_POSTDIFF,
    PolicyKind.TS_PROBCLIP: K.TS_PROBCLIP,
}

_DISPLAY = {
    PolicyKind.UNIFORM: "Uniform",
    PolicyKind.THOMPSON: "TS",
    PolicyKind.GREEDY: "Greedy",
    PolicyKind.EPSILON_GREEDY: "eps-Greedy",
    PolicyKind.EPSILON_TS: "eps-TS",
    PolicyKind.DECLINING_EPSILON_GREEDY: "Declining eps(t)-Greedy",
    PolicyKind.DECLINING_EPSILON_TS: "Declining eps(t)-TS",
    PolicyKind.TOP_TWO_TS: "Top-Two TS",
    PolicyKind.TS_POSTDIFF: "TS PostDiff",
    PolicyKind.TS_PROBCLIP: "TS ProbClip",
}

# parameters each kind accepts; anything else set on the config is rejected
_RELEVANT = {
    PolicyKind.UNIFORM: (),
    PolicyKind.THOMPSON: (),
    PolicyKind.GREEDY: (),
    PolicyKind.EPSILON_GREEDY: ("epsilon",),
    PolicyKind.EPSILON_TS: ("epsilon",),
    PolicyKind.DECLINING_EPSILON_GREEDY: ("epsilon_schedule",),
    PolicyKind.DECLINING_EPSILON_TS: ("epsilon_schedule",),
    PolicyKind.TOP_TWO_TS: ("beta_top2",),
    PolicyKind.TS_POSTDIFF: ("c", "mc_samples_phi"),
    PolicyKind.TS_PROBCLIP: ("p_max", "mc_samples_phi"),
}
_REQUIRED = {
    PolicyKind.EPSILON_GREEDY: ("epsilon",),
    PolicyKind.EPSILON_TS: ("epsilon",),
    PolicyKind.TOP_TWO_TS: ("beta_top2",),
    PolicyKind.TS_POSTDIFF: ("c",),
    PolicyKind.TS_PROBCLIP: ("p_max",),
}
_OPTIONAL_FIELDS = ("c", "beta_top2", "epsilon", "epsilon_schedule", "p_max", "mc_samples_phi")

DEFAULT_MC_SAMPLES = 100


class Branch(enum.IntEnum):
    """Which rule produced an allocation."""

    UR = K.B_UR
    TS = K.B_TS
    EXPLOIT = K.B_EXPLOIT
    SECOND_BEST = K.B_SECOND_BEST
    CLIPPED = K.B_CLIPPED


@dataclass(frozen=True)
class EpsilonSchedule:
    """Exploration rate as a function of the step ``t`` (1-based), capped at 1.

    ``inverse_sqrt``: scale / sqrt(t); ``inverse``: scale / t;
    ``exponential``: scale * exp(-rate * (t - 1)).
    """

    name: str = "inverse_sqrt"
    scale: float = 1.0
    rate: float = 0.0

    _CODES = {
        "inverse_sqrt": K.SCHED_INVERSE_SQRT,
        "inverse": K.SCHED_INVERSE,
        "exponential": K.SCHED_EXPONENTIAL,
    }

    def __post_init__(self):
        if self.name not in self._CODES:
            raise ConfigError(
                f"epsilon_schedule.name: unknown schedule {self.name!r}; expected one of {sorted(self._CODES)}"
            )
        if not self.scale >= 0:
            raise ConfigError(f"epsilon_schedule.scale must be >= 0, got {self.scale}")
        if not self.rate >= 0:
            raise ConfigError(f"epsilon_schedule.rate must be >= 0, got {self.rate}")

    @property
    def code(self) -> int:
        return self._CODES[self.name]

    def __call__(self, t: int) -> float:
        return K.schedule_epsilon(self.code, float(self.scale), float(self.rate), float(t))

    def describe(self) -> str:
        if self.name == "exponential":
            return f"{self.name}(scale={self.scale:g},rate={self.rate:g})"
        return f"{self.name}(scale={self.scale:g})"


@dataclass(frozen=True)
class PolicyConfig:
    kind: PolicyKind
    c: float | None = None
    beta_top2: float | None = None
    epsilon: float | None = None
    epsilon_schedule: EpsilonSchedule | None = None
    p_max: float | None = None
    mc_samples_phi: int | None = None

    def __post_init__(self):
        if not isinstance(self.kind, PolicyKind):
            object.__setattr__(self, "kind", PolicyKind.parse(str(self.kind)))
        self.validate()

    @classmethod
    def top_two_from_epsilon(cls, epsilon: float) -> PolicyConfig:
        """Top-Two TS matching an epsilon-TS mixture: beta = 1 - epsilon / 2."""
        _unit("epsilon", epsilon)
        return cls(PolicyKind.TOP_TWO_TS, beta_top2=1.0 - epsilon / 2.0)

    def validate(self):
        relevant = _RELEVANT[self.kind]
        for name in _OPTIONAL_FIELDS:
            if getattr(self, name) is not None and name not in relevant:
                raise ConfigError(f"{name} is not a parameter of policy {self.kind.value!r}")
        for name in _REQUIRED.get(self.kind, ()):
            if getattr(self, name) is None:
                raise ConfigError(f"{name} is required for policy {self.kind.value!r}")
        for name in ("c", "beta_top2", "epsilon"):
            if getattr(self, name) is not None:
                _unit(name, getattr(self, name))
        if self.p_max is not None and not 0.5 <= self.p_max <= 1.0:
            raise ConfigError(f"p_max must be in [0.5, 1], got {self.p_max}")
        if self.mc_samples_phi is not None and (
            int(self.mc_samples_phi) != self.mc_samples_phi or self.mc_samples_phi < 1
        ):
            raise ConfigError(f"mc_samples_phi must be a positive integer, got {self.mc_samples_phi}")
        if self.epsilon_schedule is not None and not isinstance(self.epsilon_schedule, EpsilonSchedule):
            raise ConfigError("epsilon_schedule must be an EpsilonSchedule")

    @property
    def schedule(self) -> EpsilonSchedule:
        return self.epsilon_schedule or EpsilonSchedule()

    @property
    def phi_samples(self) -> int:
        return int(self.mc_samples_phi or DEFAULT_MC_SAMPLES)

    @property
    def label(self) -> str:
        return _DISPLAY[self.kind]

    def params(self) -> dict:
        """Only the parameters that matter for this kind, explicit defaults included."""
        out = {}
        for name in _RELEVANT[self.kind]:
            value = getattr(self, name)
            if name == "epsilon_schedule":
                value = self.schedule
            if value is not None:
                out[name] = value
        return out

    def describe_params(self) -> str:
        parts = []
        for name, value in self.params().items():
            if isinstance(value, EpsilonSchedule):
                parts.append(f"schedule={value.describe()}")
            else:
                parts.append(f"{'beta' if name == 'beta_top2' else name}={value:g}")
        return ";".join(parts)

    def kernel_params(self) -> np.ndarray:
        p = np.zeros(K.N_PARAMS)
        p[K.P_C] = self.c if self.c is not None else 0.0
        p[K.P_BETA] = self.beta_top2 if self.beta_top2 is not None else 1.0
        p[K.P_EPS] = self.epsilon if self.epsilon is not None else 0.0
        p[K.P_PMAX] = self.p_max if self.p_max is not None else 1.0
        sched = self.schedule
        p[K.P_SCHED] = sched.code
        p[K.P_SCHED_SCALE] = sched.scale
        p[K.P_SCHED_RATE] = sched.rate
        return p

    @property
    def kernel_code(self) -> int:
        return _KIND_CODE[self.kind]

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        for name in _OPTIONAL_FIELDS:
            value = getattr(self, name)
            if value is None:
                continue
            if isinstance(value, EpsilonSchedule):
                value = {"name": value.name, "scale": value.scale, "rate": value.rate}
            out[name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> PolicyConfig:
        data = dict(data)
        if "kind" not in data:
            raise ConfigError("policy.kind is required")
        unknown = set(data) - {"kind", *_OPTIONAL_FIELDS}
        if unknown:
            raise ConfigError(f"policy: unknown field(s) {sorted(unknown)}")
        sched = data.get("epsilon_schedule")
        if isinstance(sched, dict):
            data["epsilon_schedule"] = EpsilonSchedule(**sched)
        return cls(PolicyKind.parse(str(data.pop("kind"))), **data)


def _unit(name, value):
    if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
        raise ConfigError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class PolicyState:
    """Posteriors of both arms plus the index of the next step (from 1)."""

    posteriors: tuple[ArmPosterior, ArmPosterior] = field(
        default_factory=lambda: (ArmPosterior(), ArmPosterior())
    )
    t: int = 1

    @classmethod
    def from_counts(cls, pulls, successes) -> PolicyState:
        posts = tuple(
            ArmPosterior(1.0 + s, 1.0 + n - s) for n, s in zip(pulls, successes)
        )
        return cls(posts, t=int(sum(pulls)) + 1)

    @property
    def pulls(self) -> tuple[int, int]:
        return tuple(p.n_obs for p in self.posteriors)

    @property
    def successes(self) -> tuple[int, int]:
        return tuple(int(round(p.alpha - 1)) for p in self.posteriors)

    def updated(self, arm: int, reward: int) -> PolicyState:
        posts = list(self.posteriors)
        posts[arm - 1] = posterior_update(posts[arm - 1], reward)
        return PolicyState(tuple(posts), self.t + 1)

    def _params(self):
        p1, p2 = self.posteriors
        return float(p1.alpha), float(p1.beta), float(p2.alpha), float(p2.beta)


class ArmChoice(NamedTuple):
    arm: int
    branch: Branch


def _choice(result) -> ArmChoice:
    arm, branch = result
    return ArmChoice(arm + 1, Branch(branch))


def select_uniform(state: PolicyState, rng: RngStream) -> ArmChoice:
    return _choice(K.select_uniform(rng._state))


def select_ts(state: PolicyState, rng: RngStream) -> ArmChoice:
    return _choice(K.select_ts(rng._state, *state._params()))


def select_greedy(state: PolicyState, rng: RngStream) -> ArmChoice:
    """Arm with the higher posterior mean; exact ties split uniformly."""
    return _choice(K.select_greedy(rng._state, *state._params()))


def select_epsilon_mix(base: PolicyKind | str, epsilon_t: float, state: PolicyState, rng: RngStream) -> ArmChoice:
    base = PolicyKind.parse(base) if isinstance(base, str) else base
    if base not in (PolicyKind.THOMPSON, PolicyKind.GREEDY):
        raise ContractError(f"epsilon mixtures wrap 'ts' or 'greedy', not {base.value!r}")
    if not 0.0 <= epsilon_t <= 1.0:
        raise ContractError(f"epsilon_t must be in [0, 1], got {epsilon_t}")
    code = K.GREEDY if base is PolicyKind.GREEDY else K.TS
    return _choice(K.select_epsilon_mix(rng._state, code, float(epsilon_t), *state._params()))


def select_top2_ts(state: PolicyState, beta_top2: float, rng: RngStream) -> ArmChoice:
    if not 0.0 <= beta_top2 <= 1.0:
        raise ContractError(f"beta_top2 must be in [0, 1], got {beta_top2}")
    return _choice(K.select_top2(rng._state, float(beta_top2), *state._params()))


def select_ts_postdiff(state: PolicyState, c: float, rng: RngStream) -> ArmChoice:
    """UR when a posterior pair lands within ``c``, else TS on a fresh pair.

    ``c = 0`` and ``c = 1`` skip the test pair, since its outcome is certain.
    """
    if not 0.0 <= c <= 1.0:
        raise ContractError(f"c must be in [0, 1], got {c}")
    return _choice(K.select_postdiff(rng._state, float(c), *state._params()))


class WinProbability(NamedTuple):
    value: float
    exact: bool


def prob_first_arm_beats_second(
    post1: ArmPosterior,
    post2: ArmPosterior,
    rng: RngStream | None = None,
    mc_samples: int = DEFAULT_MC_SAMPLES,
) -> WinProbability:
    """P(theta_1 > theta_2) under independent Beta posteriors.

    Closed-form finite sum when all four parameters are integers, otherwise
    a Monte-Carlo estimate from ``mc_samples`` posterior pairs (``exact`` is
    then False).
    """
    if post1.is_integral and post2.is_integral:
        return WinProbability(K.prob_first_beats(*PolicyState((post1, post2))._params()), True)
    rng = rng if rng is not None else RngStream(0, 0)
    wins = 0
    for _ in range(int(mc_samples)):
        p1 = K.next_beta(rng._state, float(post1.alpha), float(post1.beta))
        p2 = K.next_beta(rng._state, float(post2.alpha), float(post2.beta))
        wins += p1 > p2
    return WinProbability(wins / mc_samples, False)


def select_ts_probclip(state: PolicyState, p_max: float, rng: RngStream) -> ArmChoice:
    """Arm 1 with probability P(theta_1 > theta_2) clipped to [1 - p_max, p_max]."""
    if not 0.5 <= p_max <= 1.0:
        raise ContractError(f"p_max must be in [0.5, 1], got {p_max}")
    p1, p2 = state.posteriors
    if p1.is_integral and p2.is_integral:
        return _choice(K.select_probclip(rng._state, float(p_max), *state._params()))
    pi1 = prob_first_arm_beats_second(p1, p2, rng).value
    clipped = min(max(pi1, 1.0 - p_max), p_max)
    arm = 1 if K.coin(rng._state, clipped) else 2
    return ArmChoice(arm, Branch.CLIPPED if clipped != pi1 else Branch.TS)


def estimate_phi(state: PolicyState, c: float, m: int, rng: RngStream) -> float:
    """Fraction of ``m`` posterior pairs with |p1 - p2| < c."""
    if not 0.0 <= c <= 1.0:
        raise ContractError(f"c must be in [0, 1], got {c}")
    if int(m) != m or m < 1:
        raise ContractError(f"m must be a positive integer, got {m}")
    return K.estimate_phi(rng._state, float(c), int(m), *state._params())


def select(config: PolicyConfig, state: PolicyState, rng: RngStream) -> ArmChoice:
    """Dispatch on ``config.kind``; declining mixtures read ``state.t``."""
    p1, p2 = state.posteriors
    if config.kind is PolicyKind.TS_PROBCLIP and not (p1.is_integral and p2.is_integral):
        return select_ts_probclip(state, config.p_max, rng)
    return _choice(
        K.select(config.kernel_code, config.kernel_params(), float(state.t), rng._state, *state._params())
    )


__all__ = [
    "ArmChoice",
    "Branch",
    "ConfigError",
    "EpsilonSchedule",
    "PolicyConfig",
    "PolicyKind",
    "PolicyState",
    "WinProbability",
    "estimate_phi",
    "prob_first_arm_beats_second",
    "select",
    "select_epsilon_mix",
    "select_greedy",
    "select_top2_ts",
    "select_ts",
    "select_ts_postdiff",
    "select_ts_probclip",
    "select_uniform",
]

