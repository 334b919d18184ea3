"""Jammer utility per slot and long-run averages.

Utilities are measured in packet equivalents: energy amounts are divided
by the per-packet energy ``e_r``.  Each slot falls into one of three
cases, which fills exactly one field of ``SlotUtility``:

* ``u1``: actual transmission in epoch 1 (+packets if jammed, -packets if not);
* ``u2``: deception that drew an attack (bait energy minus what the
  transmitter got out of the jamming signal);
* ``u3``: deception the jammer ignored (bait energy minus packets sent).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .kernels import envk
from .params import EnvParams


class SlotRecord(NamedTuple):
    """What one slot looked like from the outside."""

    first_action: int
    second_action: int = -1       # -1 if the slot had a single epoch
    level: int = 0                # jammer power level drawn at epoch 1
    delivered: int = 0
    dropped_jammed: int = 0
    energy_harvest_jammer: int = 0

    @classmethod
    def from_row(cls, row: np.ndarray) -> "SlotRecord":
        c = envk.T_COUNTERS
        return cls(int(row[envk.T_A1]), int(row[envk.T_A2]), int(row[envk.T_LEVEL]),
                   int(row[c + envk.C_DELIVERED]), int(row[c + envk.C_DROP_JAMMED]),
                   int(row[c + envk.C_E_HARVEST_JAMMER]))


@dataclass(frozen=True)
class SlotUtility:
    u1: float = 0.0
    u2: float = 0.0
    u3: float = 0.0

    @property
    def total(self) -> float:
        return self.u1 + self.u2 + self.u3


def _record(trace) -> SlotRecord:
    if isinstance(trace, SlotRecord):
        return trace
    return SlotRecord.from_row(np.asarray(trace))


def slot_utility(trace, params: EnvParams) -> SlotUtility:
    """Jammer utility of one slot, from a ``SlotRecord`` or a rollout trace row."""
    rec = _record(trace)
    a1, a2 = rec.first_action, rec.second_action
    if a1 == envk.TRANSMIT:
        if rec.level > 0:
            return SlotUtility(u1=float(rec.dropped_jammed))
        return SlotUtility(u1=-float(rec.delivered))
    if a1 != envk.DECEIVE:
        return SlotUtility()
    bait = params.e_f / params.e_r
    if rec.level > 0:
        if a2 == envk.HARVEST:
            gained = rec.energy_harvest_jammer / params.e_r
        elif a2 == envk.BACKSCATTER or a2 > envk.RATE_BASE:
            gained = float(rec.delivered)
        else:
            gained = 0.0
        return SlotUtility(u2=bait - gained)
    return SlotUtility(u3=bait - float(rec.delivered))


def average_utilities(run, params: EnvParams) -> tuple[float, float]:
    """(mean jammer utility, mean transmitter throughput) per slot.

    ``run`` is a per-slot trace array from a recorded rollout, or any
    iterable of ``SlotRecord``.
    """
    if isinstance(run, np.ndarray):
        records: Iterable = (SlotRecord.from_row(r) for r in run)
    else:
        records = run
    total_u = 0.0
    total_d = 0
    slots = 0
    for rec in records:
        rec = _record(rec)
        total_u += slot_utility(rec, params).total
        total_d += rec.delivered
        slots += 1
    if slots == 0:
        raise ValueError("need at least one slot")
    return total_u / slots, total_d / slots


def jammer_utility_from_counters(counters: np.ndarray, params: EnvParams) -> float:
    """Mean jammer utility per slot from aggregated rollout counters."""
    slots = int(counters[envk.C_SLOTS])
    if slots == 0:
        raise ValueError("need at least one slot")
    return counters[envk.C_JAMMER_UTILITY] / params.e_r / slots
