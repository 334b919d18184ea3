"""Exact transition model and the communicating-class check.

The model is enumerated directly from the outcome probabilities rather
than by driving the step kernel, so Monte Carlo runs of the kernel can be
checked against it.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .env import Action, SystemState
from .errors import CapacityError
from .params import EnvParams, JammerConfig

DEFAULT_STATE_BOUND = 20_000


@dataclass
class MdpModel:
    params: EnvParams
    jammer: JammerConfig
    P: np.ndarray          # (S, A, S) transition probabilities
    R: np.ndarray          # (S, A) expected immediate reward
    mask: np.ndarray       # (S, A) feasible actions
    valid: np.ndarray      # (S,) state belongs to the state space

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]

    def index(self, s: SystemState) -> int:
        f, j, d, e = s
        p = self.params
        return ((f * 2 + j) * (p.D + 1) + d) * (p.E + 1) + e

    def state(self, idx: int) -> SystemState:
        p = self.params
        e = idx % (p.E + 1)
        idx //= p.E + 1
        d = idx % (p.D + 1)
        idx //= p.D + 1
        return SystemState(idx // 2, idx % 2, d, e)


def _feasible(p: EnvParams, f: int, j: int, d: int, e: int) -> list[int]:
    if f == 0 and j == 1:
        return []
    acts = [Action.IDLE]
    can_send = d > 0 and e > p.e_r
    if f == 0:
        if e >= p.e_f:
            acts.append(Action.DECEIVE)
        if can_send:
            acts.append(Action.TRANSMIT)
    elif j == 0:
        if can_send:
            acts.append(Action.TRANSMIT)
    else:
        if e < p.E:
            acts.append(Action.HARVEST)
        if d > 0:
            acts.append(Action.BACKSCATTER)
        if can_send:
            acts.extend(Action.rate_adapt(m) for m in range(1, p.n_rates + 1))
    return [int(a) for a in acts]


def _slot_end(p: EnvParams, d: int, e: int):
    """(prob, d', e') after arrivals then ambient harvest."""
    for arrive, pa in ((True, p.lam), (False, 1.0 - p.lam)):
        if pa == 0.0:
            continue
        d2 = min(p.D, d + p.K) if arrive else d
        for amb, pb in ((True, p.p_e), (False, 1.0 - p.p_e)):
            if pb == 0.0:
                continue
            e2 = min(p.E, e + p.e_v) if amb else e
            yield pa * pb, d2, e2


def _outcomes(p: EnvParams, x: np.ndarray, f: int, j: int, d: int, e: int, a: int):
    """Yield (prob, reward, next_state) triples for a feasible (state, action)."""
    attack = float(x[1:].sum())
    if f == 0:
        if a == Action.IDLE:
            for pr, d2, e2 in _slot_end(p, d, e):
                yield pr, 0.0, (0, 0, d2, e2)
        elif a == Action.TRANSMIT:
            k = min(d, p.d_hat_a, e // p.e_r)
            for jammed, pj in ((False, 1.0 - attack), (True, attack)):
                if pj == 0.0:
                    continue
                for pr, d2, e2 in _slot_end(p, d - k, e - k * p.e_r):
                    yield pj * pr, 0.0 if jammed else float(k), (0, 0, d2, e2)
        elif a == Action.DECEIVE:
            if attack > 0:
                yield attack, 0.0, (1, 1, d, e - p.e_f)
            if attack < 1:
                yield 1.0 - attack, 0.0, (1, 0, d, e - p.e_f)
        return
    if j == 0:
        k = min(d, p.d_hat_de, e // p.e_r) if a == Action.TRANSMIT else 0
        for pr, d2, e2 in _slot_end(p, d - k, e - k * p.e_r):
            yield pr, float(k), (0, 0, d2, e2)
        return
    levels = np.arange(1, len(x))
    if attack > 0:
        post = x[1:] / attack
    else:  # unreachable row; any normalized posterior will do
        post = np.full(len(levels), 1.0 / len(levels))
    for n, pn in zip(levels, post):
        if pn == 0.0:
            continue
        if a == Action.IDLE:
            d1, e1, r = d, e, 0.0
        elif a == Action.HARVEST:
            d1, e1, r = d, min(p.E, e + p.e_harvest[n]), 0.0
        elif a == Action.BACKSCATTER:
            d1, e1, r = d - min(d, p.d_max), e, float(min(d, p.d_backscatter[n]))
        else:
            m = a - 4
            k = min(d, p.d_rate[m - 1], e // p.e_r)
            d1, e1 = d - k, e - k * p.e_r
            r = k * (1.0 - p.p_miss)
        for pr, d2, e2 in _slot_end(p, d1, e1):
            yield pn * pr, r, (0, 0, d2, e2)


def enumerate_model(params: EnvParams, jammer: JammerConfig,
                    max_states: int = DEFAULT_STATE_BOUND) -> MdpModel:
    """Explicit transition and expected-reward tables for every (state, action)."""
    S = params.n_states
    if S > max_states:
        raise CapacityError(f"state space of {S} exceeds the bound {max_states}")
    A = params.n_actions
    x = np.asarray(jammer.x, dtype=np.float64)
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    mask = np.zeros((S, A), dtype=bool)
    valid = np.zeros(S, dtype=bool)
    model = MdpModel(params, jammer, P, R, mask, valid)
    for idx in range(S):
        f, j, d, e = model.state(idx)
        acts = _feasible(params, f, j, d, e)
        if not acts:
            continue
        valid[idx] = True
        for a in acts:
            mask[idx, a] = True
            row = defaultdict(float)
            for pr, r, nxt in _outcomes(params, x, f, j, d, e, a):
                row[model.index(SystemState(*nxt))] += pr
                R[idx, a] += pr * r
            for k, v in row.items():
                P[idx, a, k] = v
    return model


@dataclass
class IrreducibilityReport:
    irreducible: bool
    classes: list[list[SystemState]]
    reachable: list[SystemState]
    closed: list[bool]          # per class: no edge leaves it

    @property
    def recurrent(self) -> list[SystemState]:
        """States of the closed classes; every other reachable state is transient."""
        return sorted(s for c, shut in zip(self.classes, self.closed) if shut for s in c)

    def __bool__(self) -> bool:
        return self.irreducible

    @property
    def n_classes(self) -> int:
        return len(self.classes)


def check_irreducible(model: MdpModel, initial: SystemState = SystemState(0, 0, 0, 0)) -> IrreducibilityReport:
    """Communicating classes of the states reachable from ``initial``.

    An edge s -> s' exists when some feasible action moves s to s' with
    positive probability.  The chain is irreducible on its reachable set
    when that set forms a single strongly connected component.
    """
    support = (model.P > 0) & model.mask[:, :, None]
    adj = csr_matrix(support.any(axis=1))
    start = model.index(initial)
    reach = np.sort(breadth_first_order(adj, start, directed=True, return_predecessors=False))
    sub = adj[reach][:, reach]
    n_comp, labels = connected_components(sub, directed=True, connection="strong")
    classes = []
    sub = sub.tocoo()
    leaves = np.zeros(n_comp, dtype=bool)
    np.logical_or.at(leaves, labels[sub.row], labels[sub.row] != labels[sub.col])
    for c in range(n_comp):
        members = reach[labels == c]
        classes.append(([model.state(int(i)) for i in members], not leaves[c]))
    classes.sort(key=lambda item: model.index(item[0][0]))
    return IrreducibilityReport(n_comp == 1, [c for c, _ in classes], [model.state(int(i)) for i in reach],
                                [shut for _, shut in classes])
