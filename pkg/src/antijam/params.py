"""Environment and jammer parameter sets.

Defaults reproduce the evaluation setting: D = E = 10, K = 3,
lambda = 0.7, p_e = 0.5, four jammer power levels {0, 4, 10, 15} W, an
attack vector derived from the average power budget, harvest amounts
{0, 2, 3, 4}, backscatter amounts {0, 1, 2, 3} and rate-adaptation
amounts {2, 1, 0}.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError

DEFAULT_POWER_LEVELS = (0.0, 4.0, 10.0, 15.0)
DEFAULT_LEVEL_RATIOS = (0.5, 0.3, 0.2)


def _exact(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def attack_strategy(P_avg, P_dagger, ratios: Sequence = DEFAULT_LEVEL_RATIOS) -> tuple[Fraction, ...]:
    """Attack probability vector ``x`` as exact fractions.

    ``x_0 = 1 - P_avg/P_dagger`` and ``x_n = ratios[n-1] * P_avg/P_dagger``.
    Floats are converted through their shortest decimal representation,
    so ``attack_strategy(8, 10)`` is exactly ``(1/5, 2/5, 6/25, 4/25)``.
    """
    budget = _exact(P_avg)
    cap = _exact(P_dagger)
    if cap <= 0:
        raise ConfigError("P_dagger", f"must be positive, got {P_dagger}")
    if budget < 0 or budget > cap:
        raise ConfigError("P_avg", f"must lie in [0, P_dagger={P_dagger}], got {P_avg}")
    rs = [_exact(r) for r in ratios]
    if sum(rs) != 1:
        raise ConfigError("ratios", f"must sum to 1, got {[float(r) for r in rs]}")
    attack = budget / cap
    return (1 - attack, *(r * attack for r in rs))


@dataclass(frozen=True)
class JammerConfig:
    P_J: tuple[float, ...] = DEFAULT_POWER_LEVELS
    x: tuple[float, ...] = (0.2, 0.4, 0.24, 0.16)
    P_avg: float = 8.0
    P_dagger: float = 10.0
    P_max: float = 15.0
    phi: float = 1.0
    rho_sq: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "P_J", tuple(float(v) for v in self.P_J))
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        self.validate()

    @classmethod
    def from_budget(
        cls,
        P_avg: float = 8.0,
        P_dagger: float = 10.0,
        P_J: Sequence[float] = DEFAULT_POWER_LEVELS,
        ratios: Sequence[float] = DEFAULT_LEVEL_RATIOS,
        **kw,
    ) -> "JammerConfig":
        if len(ratios) != len(P_J) - 1:
            raise ConfigError("ratios", "need one ratio per nonzero power level")
        x = tuple(float(v) for v in attack_strategy(P_avg, P_dagger, ratios))
        return cls(P_J=tuple(P_J), x=x, P_avg=P_avg, P_dagger=P_dagger, **kw)

    def validate(self) -> None:
        if len(self.P_J) < 2:
            raise ConfigError("P_J", "need at least level 0 and one attack level")
        if self.P_J[0] != 0.0:
            raise ConfigError("P_J", "level 0 must be 0 W")
        if len(self.x) != len(self.P_J):
            raise ConfigError("x", "one probability per power level")
        if any(not 0.0 <= v <= 1.0 for v in self.x):
            raise ConfigError("x", f"probabilities must lie in [0, 1], got {self.x}")
        if not math.isclose(sum(self.x), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ConfigError("x", f"must sum to 1, got {sum(self.x)!r}")
        if self.P_avg > self.P_max:
            raise ConfigError("P_avg", f"exceeds peak power P_max={self.P_max}")
        if any(p > self.P_max or p < 0 for p in self.P_J):
            raise ConfigError("P_J", f"levels must lie in [0, P_max={self.P_max}]")
        if self.mean_power() > self.P_avg + 1e-9:
            raise ConfigError("x", f"x.P_J = {self.mean_power():.6g} W exceeds P_avg = {self.P_avg} W")
        if not 0.0 <= self.phi <= 1.0:
            raise ConfigError("phi", "attenuation factor must lie in [0, 1]")
        if self.rho_sq < 0:
            raise ConfigError("rho_sq", "noise variance must be nonnegative")

    @property
    def n_levels(self) -> int:
        return len(self.P_J)

    def mean_power(self) -> float:
        return float(np.dot(self.x, self.P_J))

    def attack_probability(self) -> float:
        return float(sum(self.x[1:]))


@dataclass(frozen=True)
class EnvParams:
    D: int = 10
    E: int = 10
    K: int = 3
    lam: float = 0.7
    e_v: int = 1
    p_e: float = 0.5
    e_f: int = 1
    e_r: int = 1
    d_hat_a: int = 4
    d_hat_de: int = 3
    p_miss: float = 0.01
    d_max: int = 3
    e_harvest: tuple[int, ...] = (0, 2, 3, 4)
    d_backscatter: tuple[int, ...] = (0, 1, 2, 3)
    d_rate: tuple[int, ...] = (2, 1, 0)

    def __post_init__(self):
        for name in ("e_harvest", "d_backscatter", "d_rate"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        ints = ("D", "E", "K", "e_v", "e_f", "e_r", "d_hat_a", "d_hat_de", "d_max")
        for name in ints:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ConfigError(name, f"must be an integer, got {v!r}")
        if self.D < 1:
            raise ConfigError("D", f"queue capacity must be >= 1, got {self.D}")
        if self.E < 1:
            raise ConfigError("E", f"energy capacity must be >= 1, got {self.E}")
        if self.K < 0:
            raise ConfigError("K", "arrival batch must be nonnegative")
        if self.e_v < 0:
            raise ConfigError("e_v", "ambient harvest must be nonnegative")
        if not 0 < self.e_f <= self.E:
            raise ConfigError("e_f", f"deception cost must lie in (0, E={self.E}]")
        if not 0 < self.e_r <= self.E:
            raise ConfigError("e_r", f"per-packet energy must lie in (0, E={self.E}]")
        if self.d_hat_de < 0 or self.d_hat_de >= self.d_hat_a:
            raise ConfigError("d_hat_de", "need 0 <= d_hat_de < d_hat_a")
        if self.d_max < 0:
            raise ConfigError("d_max", "must be nonnegative")
        for name in ("lam", "p_e", "p_miss"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(name, f"probability must lie in [0, 1], got {v}")
        if len(self.e_harvest) != len(self.d_backscatter):
            raise ConfigError("d_backscatter", "needs one entry per jammer power level, like e_harvest")
        if len(self.e_harvest) < 2:
            raise ConfigError("e_harvest", "needs at least two power levels")
        if self.e_harvest[0] != 0:
            raise ConfigError("e_harvest", "level 0 (no jamming) must harvest 0")
        if self.d_backscatter[0] != 0:
            raise ConfigError("d_backscatter", "level 0 (no jamming) must backscatter 0")
        if any(v < 0 for v in self.e_harvest):
            raise ConfigError("e_harvest", "must be nonnegative")
        if any(v < 0 or v > self.d_max for v in self.d_backscatter):
            raise ConfigError("d_backscatter", f"entries must lie in [0, d_max={self.d_max}]")
        if len(self.d_rate) != len(self.e_harvest) - 1:
            raise ConfigError("d_rate", "needs one entry per nonzero jammer power level")
        if any(v < 0 for v in self.d_rate):
            raise ConfigError("d_rate", "must be nonnegative")

    @property
    def n_levels(self) -> int:
        return len(self.e_harvest)

    @property
    def n_rates(self) -> int:
        return len(self.d_rate)

    @property
    def n_actions(self) -> int:
        return 5 + self.n_rates

    @property
    def n_states(self) -> int:
        return 2 * 2 * (self.D + 1) * (self.E + 1)

    def max_reward(self) -> int:
        return max(self.d_hat_a, self.d_hat_de, self.d_max, max(self.d_rate, default=0))

    def replace(self, **changes) -> "EnvParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


class KernelParams(NamedTuple):
    """Flat, numba-friendly view of ``EnvParams`` plus the jammer CDF."""

    D: int
    E: int
    K: int
    lam: float
    e_v: int
    p_e: float
    e_f: int
    e_r: int
    d_hat_a: int
    d_hat_de: int
    p_miss: float
    d_max: int
    e_harvest: np.ndarray
    d_backscatter: np.ndarray
    d_rate: np.ndarray
    x_cum: np.ndarray


def kernel_params(env: EnvParams, jammer: JammerConfig) -> KernelParams:
    if jammer.n_levels != env.n_levels:
        raise ConfigError("P_J", f"jammer has {jammer.n_levels} levels but env tables have {env.n_levels}")
    x = np.asarray(jammer.x, dtype=np.float64)
    x_cum = np.cumsum(x)
    # cumulative rounding must never leave u in [x_cum[-1], 1) unmapped
    x_cum[np.flatnonzero(x > 0)[-1]:] = np.inf
    return KernelParams(
        int(env.D), int(env.E), int(env.K), float(env.lam), int(env.e_v), float(env.p_e),
        int(env.e_f), int(env.e_r), int(env.d_hat_a), int(env.d_hat_de), float(env.p_miss),
        int(env.d_max),
        np.asarray(env.e_harvest, dtype=np.int64),
        np.asarray(env.d_backscatter, dtype=np.int64),
        np.asarray(env.d_rate, dtype=np.int64),
        x_cum,
    )


@dataclass(frozen=True)
class Scenario:
    """An (environment, jammer) pair, the unit every simulator consumes."""

    env: EnvParams = field(default_factory=EnvParams)
    jammer: JammerConfig = field(default_factory=JammerConfig.from_budget)

    def kernel(self) -> KernelParams:
        return kernel_params(self.env, self.jammer)
