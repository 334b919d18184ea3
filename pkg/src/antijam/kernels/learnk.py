"""Training-loop kernels: tabular Q-learning and deep Q-learning."""
from __future__ import annotations

import numpy as np

from .._jit import jit
from . import envk, nnk


@jit
def linear_epsilon(t, start, end, decay_steps):
    if decay_steps <= 0 or t >= decay_steps:
        return end
    return start + (end - start) * (t / decay_steps)


@jit
def epsilon_greedy_kernel(values, mask, eps, u_explore, u_pick):
    if u_explore < eps:
        return envk.pick_uniform(mask, u_pick)
    return envk.argmax_masked(values, mask)


@jit
def q_update_kernel(q, s, a, r, s2, mask2, tau, gamma):
    target = r + gamma * envk.max_masked(q[s2], mask2)
    td = target - q[s, a]
    q[s, a] += tau * td
    return td


@jit
def q_learning_kernel(p, q, visits, allowed, state, t0, uniforms, eps_start, eps_end, eps_decay,
                      tau0, omega, gamma, acc, reward_trace):
    """Epsilon-greedy Q-learning, one row of ``uniforms`` per decision epoch.

    The learning rate of pair (s, a) at its k-th visit is ``tau0 * k**-omega``.
    ``reward_trace[i]`` receives the reward of epoch ``i``; returns the sum
    of squared TD errors.
    """
    n_actions = allowed.shape[0]
    mask = np.zeros(n_actions, dtype=np.bool_)
    mask2 = np.zeros(n_actions, dtype=np.bool_)
    f = state[0]
    j = state[1]
    d = state[2]
    e = state[3]
    n = state[4]
    td_sq = 0.0
    for i in range(uniforms.shape[0]):
        u = uniforms[i]
        eps = linear_epsilon(t0 + i, eps_start, eps_end, eps_decay)
        s = envk.state_index(p, f, j, d, e)
        envk.restricted_mask(p, f, j, d, e, allowed, mask)
        a = epsilon_greedy_kernel(q[s], mask, eps, u[envk.U_EXPLORE], u[envk.U_PICK])
        before = acc[envk.C_DELIVERED]
        f, j, d, e, n, done, drawn = envk.step_kernel(p, f, j, d, e, n, a, u, acc)
        r = acc[envk.C_DELIVERED] - before
        reward_trace[i] = r
        s2 = envk.state_index(p, f, j, d, e)
        envk.restricted_mask(p, f, j, d, e, allowed, mask2)
        visits[s, a] += 1
        tau = tau0 * visits[s, a] ** (-omega)
        td = q_update_kernel(q, s, a, float(r), s2, mask2, tau, gamma)
        td_sq += td * td
    state[0] = f
    state[1] = j
    state[2] = d
    state[3] = e
    state[4] = n
    return td_sq


@jit
def features_into(p, f, j, d, e, out):
    out[0] = f
    out[1] = j
    out[2] = d / p.D
    out[3] = e / p.E


@jit
def state_features(p, states, out):
    for i in range(states.shape[0]):
        features_into(p, states[i, 0], states[i, 1], states[i, 2], states[i, 3], out[i])


@jit
def deep_training_kernel(p, net, target, grads, allowed, state, t0,
                         eps_start, eps_end, eps_decay, gamma, lr, sync_every,
                         mem_s, mem_a, mem_r, mem_s2, mem_mask2, mem_info,
                         batch, uniforms, batch_uniforms, acc, reward_trace, loss_trace,
                         action_trace):
    """Deep Q-learning with replay and a periodically synced target network.

    One iteration = one decision epoch: act epsilon-greedily over the
    masked action set, store the transition, then (once memory holds at
    least ``batch`` items) take one SGD step on a uniformly sampled
    minibatch.  Replay memory stores raw (f, j, d, e) states; ``mem_info``
    holds [write position, size, gradient steps].
    Returns 0 on success or the iteration index + 1 of a non-finite loss.
    """
    n_actions = allowed.shape[0]
    capacity = mem_a.shape[0]
    mask = np.zeros(n_actions, dtype=np.bool_)
    mask2 = np.zeros(n_actions, dtype=np.bool_)
    x = np.zeros((1, 4))
    xb = np.zeros((batch, 4))
    xb2 = np.zeros((batch, 4))
    ab = np.zeros(batch, dtype=np.int64)
    rb = np.zeros(batch)
    mb = np.zeros((batch, n_actions), dtype=np.bool_)
    f = state[0]
    j = state[1]
    d = state[2]
    e = state[3]
    n = state[4]
    for i in range(uniforms.shape[0]):
        u = uniforms[i]
        t = t0 + i
        eps = linear_epsilon(t, eps_start, eps_end, eps_decay)
        envk.restricted_mask(p, f, j, d, e, allowed, mask)
        features_into(p, f, j, d, e, x[0])
        if u[envk.U_EXPLORE] < eps:
            a = envk.pick_uniform(mask, u[envk.U_PICK])
        else:
            qv = nnk.forward(net, x)
            a = envk.argmax_masked(qv[0], mask)
        action_trace[i] = a
        pos = mem_info[0]
        mem_s[pos, 0] = f
        mem_s[pos, 1] = j
        mem_s[pos, 2] = d
        mem_s[pos, 3] = e
        before = acc[envk.C_DELIVERED]
        f, j, d, e, n, done, drawn = envk.step_kernel(p, f, j, d, e, n, a, u, acc)
        r = acc[envk.C_DELIVERED] - before
        reward_trace[i] = r
        envk.restricted_mask(p, f, j, d, e, allowed, mask2)
        mem_s2[pos, 0] = f
        mem_s2[pos, 1] = j
        mem_s2[pos, 2] = d
        mem_s2[pos, 3] = e
        mem_a[pos] = a
        mem_r[pos] = r
        mem_mask2[pos, :] = mask2
        mem_info[0] = (pos + 1) % capacity
        if mem_info[1] < capacity:
            mem_info[1] += 1
        size = mem_info[1]
        if size >= batch:
            for b in range(batch):
                k = min(int(batch_uniforms[i, b] * size), size - 1)
                features_into(p, mem_s[k, 0], mem_s[k, 1], mem_s[k, 2], mem_s[k, 3], xb[b])
                features_into(p, mem_s2[k, 0], mem_s2[k, 1], mem_s2[k, 2], mem_s2[k, 3], xb2[b])
                ab[b] = mem_a[k]
                rb[b] = mem_r[k]
                mb[b, :] = mem_mask2[k]
            loss = nnk.train_batch(net, target, grads, xb, ab, rb, xb2, mb, gamma, lr)
            loss_trace[i] = loss
            if not np.isfinite(loss):
                state[0] = f
                state[1] = j
                state[2] = d
                state[3] = e
                state[4] = n
                return i + 1
            mem_info[2] += 1
            if mem_info[2] % sync_every == 0:
                nnk.copy_params(net, target)
        else:
            loss_trace[i] = np.nan
    state[0] = f
    state[1] = j
    state[2] = d
    state[3] = e
    state[4] = n
    return 0
