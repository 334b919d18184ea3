"""Two-epoch anti-jamming environment.

A slot starts at epoch 1 in a state ``(0, 0, d, e)``.  Idle or an actual
transmission end the slot; a deception moves the system to the epoch-2
state ``(1, j, d, e - e_f)`` where ``j`` reports whether the reactive
jammer took the bait.  The jammer's power level is kept for the rest of
the slot and shapes what harvesting, backscattering or rate adaptation
yield.  End-of-slot dynamics (arrivals, then ambient harvest) run after
the last epoch of each slot.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation
from .kernels import envk
from .params import EnvParams, JammerConfig, Scenario


class Action(IntEnum):
    IDLE = 0
    DECEIVE = 1
    TRANSMIT = 2
    HARVEST = 3
    BACKSCATTER = 4

    @staticmethod
    def rate_adapt(m: int) -> int:
        """Encoding of rate-adaptation action ``m`` (1-based)."""
        if m < 1:
            raise ValueError("rate index is 1-based")
        return envk.RATE_BASE + m


def action_name(a: int) -> str:
    if a > envk.RATE_BASE:
        return f"RATE_ADAPT({a - envk.RATE_BASE})"
    return Action(a).name


class SystemState(NamedTuple):
    f: int
    j: int
    d: int
    e: int

    @property
    def epoch(self) -> int:
        return 2 if self.f else 1


class Transition(NamedTuple):
    """One learning sample; ``next_feasible`` is the action mask at ``s_next``."""

    s: SystemState
    a: int
    r: float
    s_next: SystemState
    next_feasible: np.ndarray


@dataclass(frozen=True)
class Diagnostics:
    delivered: int = 0
    arrived: int = 0
    dropped_overflow: int = 0
    dropped_jammed: int = 0
    dropped_miss: int = 0
    dropped_backscatter: int = 0
    energy_spent: int = 0
    energy_harvest_jammer: int = 0
    energy_harvest_ambient: int = 0
    energy_clamped: int = 0
    jammer_level: int = -1
    attacked: bool = False
    jammer_utility_scaled: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_overflow + self.dropped_jammed + self.dropped_miss + self.dropped_backscatter

    @classmethod
    def from_counters(cls, acc: np.ndarray, level: int) -> "Diagnostics":
        return cls(
            delivered=int(acc[envk.C_DELIVERED]),
            arrived=int(acc[envk.C_ARRIVED]),
            dropped_overflow=int(acc[envk.C_DROP_OVERFLOW]),
            dropped_jammed=int(acc[envk.C_DROP_JAMMED]),
            dropped_miss=int(acc[envk.C_DROP_MISS]),
            dropped_backscatter=int(acc[envk.C_DROP_BACKSCATTER]),
            energy_spent=int(acc[envk.C_E_SPENT]),
            energy_harvest_jammer=int(acc[envk.C_E_HARVEST_JAMMER]),
            energy_harvest_ambient=int(acc[envk.C_E_HARVEST_AMBIENT]),
            energy_clamped=int(acc[envk.C_E_CLAMPED]),
            jammer_level=int(level),
            attacked=bool(acc[envk.C_ATTACKS]),
            jammer_utility_scaled=int(acc[envk.C_JAMMER_UTILITY]),
        )


@dataclass(frozen=True)
class StepOutcome:
    reward: int
    next_state: SystemState
    slot_complete: bool
    diagnostics: Diagnostics = field(default_factory=Diagnostics)


def _check_state(params: EnvParams, s: SystemState, epoch: int) -> None:
    f, j, d, e = s
    if f not in (0, 1) or j not in (0, 1):
        raise ContractViolation(f"flags must be binary, got f={f}, j={j}")
    if not 0 <= d <= params.D or not 0 <= e <= params.E:
        raise ContractViolation(f"state {tuple(s)} outside [0, D] x [0, E]")
    if epoch not in (1, 2):
        raise ContractViolation(f"epoch must be 1 or 2, got {epoch}")
    if epoch == 1 and (f, j) != (0, 0):
        raise ContractViolation(f"epoch-1 observations have f = j = 0, got {tuple(s)}")
    if epoch == 2 and f != 1:
        raise ContractViolation(f"epoch 2 only follows a deception (f = 1), got {tuple(s)}")


def feasible_mask(params: EnvParams, kp, s: SystemState, epoch: int) -> np.ndarray:
    _check_state(params, s, epoch)
    out = np.zeros(params.n_actions, dtype=np.bool_)
    envk.feasible_mask(kp, *map(int, s), out)
    return out


def sinr(P_R: float, n: int, cfg: JammerConfig) -> float:
    """Received SINR under jammer power level ``n``."""
    if P_R < 0:
        raise ContractViolation("received power must be nonnegative")
    denom = cfg.phi * cfg.P_J[n] + cfg.rho_sq
    if denom == 0:
        raise ZeroDivisionError("phi * P_J[n] + rho^2 is zero")
    return P_R / denom


class DeceptionEnv:
    """Stateful wrapper around the step kernel.

    The public operations take the state explicitly; the environment only
    remembers the jammer level drawn at the last deception, which the
    epoch-2 action consumes.
    """

    def __init__(self, scenario: Scenario | None = None, *, env: EnvParams | None = None,
                 jammer: JammerConfig | None = None):
        if scenario is None:
            scenario = Scenario(env or EnvParams(), jammer or JammerConfig.from_budget())
        self.scenario = scenario
        self.params = scenario.env
        self.jammer = scenario.jammer
        self.kp = scenario.kernel()
        self.stored_level = 0
        self._acc = np.zeros(envk.N_COUNTERS, dtype=np.int64)
        self._u = np.zeros(envk.N_UNIFORMS, dtype=np.float64)

    @property
    def n_actions(self) -> int:
        return self.params.n_actions

    def feasible_actions(self, s: SystemState, epoch: int) -> set[int]:
        return {int(a) for a in np.flatnonzero(feasible_mask(self.params, self.kp, s, epoch))}

    def sample_jammer(self, detected_activity: bool, rng: np.random.Generator, size=None):
        """Jammer power level(s): 0 for an idle channel, else drawn from ``x``."""
        if size is None:
            if not detected_activity:
                return 0
            return int(envk.draw_level(self.kp.x_cum, rng.random()))
        if not detected_activity:
            return np.zeros(size, dtype=np.int64)
        return np.searchsorted(self.kp.x_cum, rng.random(size), side="right").astype(np.int64)

    def sinr(self, P_R: float, n: int) -> float:
        return sinr(P_R, n, self.jammer)

    def draw_uniforms(self, rng: np.random.Generator) -> np.ndarray:
        return rng.random(envk.N_UNIFORMS)

    def step(self, s: SystemState, a: int, epoch: int, rng: np.random.Generator | None = None,
             *, uniforms: np.ndarray | None = None, level: int | None = None) -> StepOutcome:
        """Apply action ``a`` in state ``s`` at the given epoch.

        Randomness comes from ``rng`` unless explicit ``uniforms`` (one row of
        ``envk.N_UNIFORMS`` values) are passed.  ``level`` overrides the
        stored jammer level for epoch-2 calls.
        """
        mask = feasible_mask(self.params, self.kp, s, epoch)
        a = int(a)
        if not 0 <= a < mask.shape[0] or not mask[a]:
            raise ContractViolation(f"action {a} infeasible in state {tuple(s)} at epoch {epoch}")
        if uniforms is None:
            if rng is None:
                raise ContractViolation("step needs either rng or uniforms")
            uniforms = self.draw_uniforms(rng)
        u = np.ascontiguousarray(uniforms, dtype=np.float64)
        n = self.stored_level if level is None else int(level)
        if epoch == 2 and s.j == 1 and not 1 <= n < self.params.n_levels:
            raise ContractViolation(f"epoch-2 jammed state needs a stored level in 1..N, got {n}")
        self._acc[:] = 0
        f2, j2, d2, e2, n2, done, drawn = envk.step_kernel(
            self.kp, int(s.f), int(s.j), int(s.d), int(s.e), n, a, u, self._acc)
        self.stored_level = int(n2)
        diag = Diagnostics.from_counters(self._acc, drawn if drawn >= 0 else (n if epoch == 2 else -1))
        return StepOutcome(int(self._acc[envk.C_DELIVERED]), SystemState(int(f2), int(j2), int(d2), int(e2)),
                           bool(done), diag)
