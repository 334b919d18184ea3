"""Comparison schemes as action-set restrictions, plus the fixed WD rule.

HTT (harvest then transmit), BM (backscatter) and RA (rate adaptation
only) reuse the full learning pipeline with a narrower action set.  WD
(without deception) is a fixed rule: transmit whenever there are packets
and more than ``e_r`` energy units, otherwise stay idle.
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from .env import Action, SystemState
from .kernels import envk
from .params import EnvParams


class PolicyKind(str, Enum):
    PROPOSED = "proposed"
    HTT = "htt"
    BM = "bm"
    RA = "ra"
    WD = "wd"

    @property
    def learns(self) -> bool:
        return self is not PolicyKind.WD

    def allowed(self, n_actions: int) -> np.ndarray:
        """Boolean mask of action encodings this scheme may ever use."""
        mask = np.zeros(n_actions, dtype=np.bool_)
        base = [Action.IDLE, Action.DECEIVE, Action.TRANSMIT]
        if self is PolicyKind.PROPOSED:
            mask[:] = True
            return mask
        if self is PolicyKind.WD:
            mask[[Action.IDLE, Action.TRANSMIT]] = True
            return mask
        extra = {PolicyKind.HTT: [Action.HARVEST], PolicyKind.BM: [Action.BACKSCATTER], PolicyKind.RA: []}[self]
        mask[base + extra] = True
        mask[envk.RATE_BASE + 1:] = True
        return mask


def restrict(mask: np.ndarray, kind: PolicyKind | str) -> np.ndarray:
    """Feasible mask intersected with the scheme's action set (Idle always kept)."""
    kind = PolicyKind(kind)
    out = np.asarray(mask, dtype=np.bool_) & kind.allowed(len(mask))
    out[Action.IDLE] = True
    return out


def wd_policy(s: SystemState, params: EnvParams) -> int:
    f, j, d, e = s
    if f != 0:
        raise ValueError("the WD rule only acts at epoch 1")
    if d > 0 and e > params.e_r:
        return int(Action.TRANSMIT)
    return int(Action.IDLE)


def wd_table(params: EnvParams) -> np.ndarray:
    """WD rule as a policy table over state indices (-1 outside epoch 1)."""
    table = np.full(params.n_states, -1, dtype=np.int64)
    for d in range(params.D + 1):
        for e in range(params.E + 1):
            idx = d * (params.E + 1) + e  # f = j = 0
            table[idx] = wd_policy(SystemState(0, 0, d, e), params)
    return table
