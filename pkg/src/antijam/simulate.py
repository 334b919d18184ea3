"""Slot-level rollouts under a fixed tabular policy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import envk
from .params import Scenario


@dataclass
class Rollout:
    counters: np.ndarray       # (N_COUNTERS,) totals over the run
    trace: np.ndarray          # (slots, N_TRACE) per-slot records, or (0, N_TRACE)
    final_state: np.ndarray    # (f, j, d, e, n)

    @property
    def slots(self) -> int:
        return int(self.counters[envk.C_SLOTS])


def uniform_policy(n_states: int) -> np.ndarray:
    """Policy table that picks uniformly among permitted actions everywhere."""
    return np.full(n_states, -1, dtype=np.int64)


def all_actions(n_actions: int) -> np.ndarray:
    return np.ones(n_actions, dtype=np.bool_)


def rollout(scenario: Scenario, policy: np.ndarray, slots: int, seed=None, *,
            allowed: np.ndarray | None = None, uniforms: np.ndarray | None = None,
            start=(0, 0, 0, 0), record: bool = False, kp=None) -> Rollout:
    """Run ``slots`` time slots from ``start`` under ``policy``.

    ``policy[s]`` is the action for state index ``s`` (``-1`` = uniform
    random).  Randomness comes from ``uniforms`` when given, otherwise from
    ``np.random.default_rng(seed)``.
    """
    kp = scenario.kernel() if kp is None else kp
    n_actions = scenario.env.n_actions
    if allowed is None:
        allowed = all_actions(n_actions)
    if uniforms is None:
        uniforms = np.random.default_rng(seed).random((slots, envk.N_UNIFORMS))
    uniforms = np.ascontiguousarray(uniforms[:slots], dtype=np.float64)
    acc = np.zeros(envk.N_COUNTERS, dtype=np.int64)
    trace = np.zeros((slots if record else 0, envk.N_TRACE), dtype=np.int64)
    state = np.array([*start, 0], dtype=np.int64)
    envk.rollout_kernel(kp, np.ascontiguousarray(policy, dtype=np.int64),
                        np.ascontiguousarray(allowed, dtype=np.bool_), state, uniforms, acc, trace)
    return Rollout(acc, trace, state)
