"""Scalar environment kernels.

All randomness enters through pre-drawn uniforms so a kernel is a pure
function of (state, action, uniforms).  One uniform row per decision
epoch (or per slot in rollouts) with columns:

    U_JAM      jammer power level draw (epoch-1 Transmit / Deceive)
    U_MISS     miss-detection draw (rate adaptation)
    U_ARR      data arrival draw (end of slot)
    U_AMB      ambient harvest draw (end of slot)
    U_EXPLORE  epsilon test
    U_PICK     random-action index (epoch 1 in rollouts, or the only pick)
    U_PICK2    random-action index for epoch 2 in slot-level rollouts

Counters are accumulated into an int64 array indexed by the ``C_*``
constants; jammer utility is accumulated in units of ``1/e_r`` so it
stays integral.
"""
from __future__ import annotations

import numpy as np

from .._jit import jit

IDLE = 0
DECEIVE = 1
TRANSMIT = 2
HARVEST = 3
BACKSCATTER = 4
RATE_BASE = 4

U_JAM = 0
U_MISS = 1
U_ARR = 2
U_AMB = 3
U_EXPLORE = 4
U_PICK = 5
U_PICK2 = 6
N_UNIFORMS = 7

C_DELIVERED = 0
C_ARRIVED = 1
C_DROP_OVERFLOW = 2
C_DROP_JAMMED = 3
C_DROP_MISS = 4
C_DROP_BACKSCATTER = 5
C_E_SPENT = 6
C_E_HARVEST_JAMMER = 7
C_E_HARVEST_AMBIENT = 8
C_E_CLAMPED = 9
C_SLOTS = 10
C_EPOCHS = 11
C_DECEPTIONS = 12
C_ATTACKS = 13
C_JAMMER_UTILITY = 14  # scaled by e_r
N_COUNTERS = 15

# per-slot trace columns written by rollout_kernel
T_D0 = 0
T_E0 = 1
T_D1 = 2
T_E1 = 3
T_A1 = 4
T_A2 = 5
T_LEVEL = 6
T_COUNTERS = 7
N_TRACE = T_COUNTERS + N_COUNTERS


@jit
def state_index(p, f, j, d, e):
    return ((f * 2 + j) * (p.D + 1) + d) * (p.E + 1) + e


@jit
def decode_index(p, s):
    e = s % (p.E + 1)
    s //= p.E + 1
    d = s % (p.D + 1)
    s //= p.D + 1
    j = s % 2
    f = s // 2
    return f, j, d, e


@jit
def draw_level(x_cum, u):
    for n in range(x_cum.shape[0]):
        if u < x_cum[n]:
            return n
    return x_cum.shape[0] - 1


@jit
def feasible_mask(p, f, j, d, e, out):
    """Write the feasible-action mask of state (f, j, d, e); False everywhere if invalid."""
    for a in range(out.shape[0]):
        out[a] = False
    if f == 0 and j == 1:
        return False
    out[IDLE] = True
    can_send = d > 0 and e > p.e_r
    if f == 0:
        if e >= p.e_f:
            out[DECEIVE] = True
        if can_send:
            out[TRANSMIT] = True
    elif j == 0:
        if can_send:
            out[TRANSMIT] = True
    else:
        if e < p.E:
            out[HARVEST] = True
        if d > 0:
            out[BACKSCATTER] = True
        if can_send:
            for m in range(1, p.d_rate.shape[0] + 1):
                out[RATE_BASE + m] = True
    return True


@jit
def _end_of_slot(p, d, e, u, acc):
    if u[U_ARR] < p.lam:
        acc[C_ARRIVED] += p.K
        stored = min(p.K, p.D - d)
        acc[C_DROP_OVERFLOW] += p.K - stored
        d += stored
    if u[U_AMB] < p.p_e:
        acc[C_E_HARVEST_AMBIENT] += p.e_v
        stored = min(p.e_v, p.E - e)
        acc[C_E_CLAMPED] += p.e_v - stored
        e += stored
    acc[C_SLOTS] += 1
    return d, e


@jit
def step_kernel(p, f, j, d, e, n, a, u, acc):
    """Advance one decision epoch.

    ``n`` is the jammer power level stored at deception time (ignored at
    epoch 1).  Returns ``(f, j, d, e, n, slot_complete, drawn)`` where
    ``drawn`` is the jammer level sampled this epoch (-1 if none).  The
    action must be feasible.
    """
    acc[C_EPOCHS] += 1
    drawn = -1
    if f == 0:
        if a == TRANSMIT:
            k = min(d, p.d_hat_a, e // p.e_r)
            level = draw_level(p.x_cum, u[U_JAM])
            drawn = level
            e -= k * p.e_r
            d -= k
            acc[C_E_SPENT] += k * p.e_r
            if level > 0:
                acc[C_ATTACKS] += 1
                acc[C_DROP_JAMMED] += k
                acc[C_JAMMER_UTILITY] += k * p.e_r
            else:
                acc[C_DELIVERED] += k
                acc[C_JAMMER_UTILITY] -= k * p.e_r
        elif a == DECEIVE:
            level = draw_level(p.x_cum, u[U_JAM])
            e -= p.e_f
            acc[C_E_SPENT] += p.e_f
            acc[C_DECEPTIONS] += 1
            acc[C_JAMMER_UTILITY] += p.e_f
            if level > 0:
                acc[C_ATTACKS] += 1
                return 1, 1, d, e, level, False, level
            return 1, 0, d, e, 0, False, level
    elif j == 0:
        if a == TRANSMIT:
            k = min(d, p.d_hat_de, e // p.e_r)
            e -= k * p.e_r
            d -= k
            acc[C_E_SPENT] += k * p.e_r
            acc[C_DELIVERED] += k
            acc[C_JAMMER_UTILITY] -= k * p.e_r
    else:
        if a == HARVEST:
            gain = p.e_harvest[n]
            stored = min(gain, p.E - e)
            acc[C_E_HARVEST_JAMMER] += gain
            acc[C_E_CLAMPED] += gain - stored
            acc[C_JAMMER_UTILITY] -= gain
            e += stored
        elif a == BACKSCATTER:
            sent = min(d, p.d_backscatter[n])
            shortfall = min(d, p.d_max) - sent
            d -= sent + shortfall
            acc[C_DELIVERED] += sent
            acc[C_DROP_BACKSCATTER] += shortfall
            acc[C_JAMMER_UTILITY] -= sent * p.e_r
        elif a > RATE_BASE:
            m = a - RATE_BASE
            k = min(d, p.d_rate[m - 1], e // p.e_r)
            e -= k * p.e_r
            d -= k
            acc[C_E_SPENT] += k * p.e_r
            if u[U_MISS] < p.p_miss:
                acc[C_DROP_MISS] += k
            else:
                acc[C_DELIVERED] += k
                acc[C_JAMMER_UTILITY] -= k * p.e_r
    d, e = _end_of_slot(p, d, e, u, acc)
    return 0, 0, d, e, 0, True, drawn


@jit
def pick_uniform(mask, u):
    """The ``floor(u * k)``-th feasible action, k = number of feasible actions."""
    k = 0
    for a in range(mask.shape[0]):
        if mask[a]:
            k += 1
    target = min(int(u * k), k - 1)
    for a in range(mask.shape[0]):
        if mask[a]:
            if target == 0:
                return a
            target -= 1
    return -1


@jit
def argmax_masked(values, mask):
    """Feasible argmax, ties resolved to the lowest action encoding."""
    best = -1
    best_v = 0.0
    for a in range(mask.shape[0]):
        if mask[a] and (best < 0 or values[a] > best_v):
            best = a
            best_v = values[a]
    return best


@jit
def max_masked(values, mask):
    best = -np.inf
    for a in range(mask.shape[0]):
        if mask[a] and values[a] > best:
            best = values[a]
    return best


@jit
def restricted_mask(p, f, j, d, e, allowed, out):
    ok = feasible_mask(p, f, j, d, e, out)
    for a in range(out.shape[0]):
        out[a] = out[a] and allowed[a]
    return ok


@jit
def rollout_kernel(p, policy, allowed, state, uniforms, acc, trace):
    """Run ``uniforms.shape[0]`` slots under a tabular policy.

    ``policy[s]`` is the action for state index ``s``; ``-1`` means
    "uniform over the feasible actions permitted by ``allowed``".
    ``state`` holds (f, j, d, e, n) and is updated in place; it must be an
    epoch-1 state.  When ``trace`` has rows, per-slot records are written.
    """
    n_actions = allowed.shape[0]
    mask = np.zeros(n_actions, dtype=np.bool_)
    before = np.zeros(acc.shape[0], dtype=np.int64)
    record = trace.shape[0] > 0
    f = state[0]
    j = state[1]
    d = state[2]
    e = state[3]
    n = state[4]
    for t in range(uniforms.shape[0]):
        u = uniforms[t]
        if record:
            before[:] = acc
            trace[t, T_D0] = d
            trace[t, T_E0] = e
            trace[t, T_A2] = -1
        restricted_mask(p, f, j, d, e, allowed, mask)
        a = policy[state_index(p, f, j, d, e)]
        if a < 0:
            a = pick_uniform(mask, u[U_PICK])
        f, j, d, e, n, done, drawn = step_kernel(p, f, j, d, e, n, a, u, acc)
        if record:
            trace[t, T_A1] = a
            trace[t, T_LEVEL] = drawn
        if not done:
            restricted_mask(p, f, j, d, e, allowed, mask)
            a = policy[state_index(p, f, j, d, e)]
            if a < 0:
                a = pick_uniform(mask, u[U_PICK2])
            f, j, d, e, n, done, drawn = step_kernel(p, f, j, d, e, n, a, u, acc)
            if record:
                trace[t, T_A2] = a
        if record:
            trace[t, T_D1] = d
            trace[t, T_E1] = e
            for c in range(acc.shape[0]):
                trace[t, T_COUNTERS + c] = acc[c] - before[c]
    state[0] = f
    state[1] = j
    state[2] = d
    state[3] = e
    state[4] = n
