from __future__ import annotations

import numpy as np
import pytest

from antijam.baselines import PolicyKind
from antijam.deep import DeepAgent, DeepTrainer, ReplayBuffer, run_training, td_target
from antijam.env import Action, DeceptionEnv, SystemState, Transition
from antijam.errors import ContractViolation, InsufficientData, TrainingFault
from antijam.kernels import envk
from antijam.nn import Mlp
from antijam.params import EnvParams

from .oracles import flat


def _tr(k, mask=None):
    m = np.ones(8, dtype=bool) if mask is None else mask
    return Transition(SystemState(0, 0, k % 11, 3), Action.IDLE, float(k), SystemState(0, 0, 1, 1), m)


def _feasible(env, s):
    m = np.zeros(env.n_actions, dtype=bool)
    m[sorted(env.feasible_actions(s, 2 if s.f else 1))] = True
    return m


def test_ring_evicts_oldest():
    buf = ReplayBuffer(2)
    for k in range(3):
        buf.push(_tr(k))
    assert len(buf) == 2
    assert [t.r for t in buf.items()] == [1.0, 2.0]


def test_push_grows_and_preserves_order():
    buf = ReplayBuffer(5)
    buf.push(_tr(7))
    assert buf.size == 1
    for k in range(8, 11):
        buf.push(_tr(k))
    assert [t.r for t in buf.items()] == [7.0, 8.0, 9.0, 10.0]


def test_sample_single_item():
    buf = ReplayBuffer(4)
    buf.push(_tr(3))
    (t,) = buf.sample(1, np.random.default_rng(0))
    assert t.r == 3.0 and t.s == SystemState(0, 0, 3, 3)


def test_sample_uniformity():
    buf = ReplayBuffer(10)
    for k in range(10):
        buf.push(_tr(k))
    n = 100_000
    rng = np.random.default_rng(1)
    idx = np.concatenate([buf.sample_indices(10, rng) for _ in range(n // 10)])
    freq = np.bincount(idx, minlength=10) / n
    assert np.all(np.abs(freq - 0.1) < 3 * np.sqrt(0.1 * 0.9 / n))


def test_sample_needs_enough_items():
    buf = ReplayBuffer(100)
    for k in range(10):
        buf.push(_tr(k))
    with pytest.raises(InsufficientData):
        buf.sample(64, np.random.default_rng(0))


def test_sampled_indices_depend_only_on_seed():
    buf = ReplayBuffer(50)
    for k in range(50):
        buf.push(_tr(k))
    a = buf.sample_indices(32, np.random.default_rng(5))
    b = buf.sample_indices(32, np.random.default_rng(5))
    assert np.array_equal(a, b)


def _const_net(values):
    net = Mlp.create(4, 4, 8, mode="plain", depth=1)
    net.params.ba[:] = values
    return net


def test_td_target_worked_example():
    mask = np.zeros(8, dtype=bool)
    mask[[0, 2]] = True
    net = _const_net([1.0, 50.0, 2.0, 0, 0, 0, 0, 0])
    tr = Transition(SystemState(0, 0, 1, 1), 0, 1.0, SystemState(0, 0, 2, 2), mask)
    assert td_target(tr, net, 0.95, EnvParams()) == pytest.approx(2.9, abs=1e-12)
    assert td_target(tr, net, 0.0, EnvParams()) == 1.0
    assert td_target(tr, Mlp.create(4, 64, 8), 0.95, EnvParams()) == 1.0


def _agent(mode="dueling", seed=0, **kw):
    return DeepAgent(DeceptionEnv(), mode=mode, seed=seed, **kw)


def test_zero_loss_batch_leaves_parameters():
    ag = _agent("plain")
    ag.net = _const_net(np.zeros(8))
    ag.target = ag.net.copy()
    ag.grads = ag.net.zeros_like()
    none = np.zeros(8, dtype=bool)
    none[0] = True
    batch = [Transition(SystemState(0, 0, 2, 2), 2, 0.0, SystemState(0, 0, 1, 1), none)] * 4
    before = flat(ag.net.arrays()).copy()
    assert ag.train_step(batch) == 0.0
    assert np.array_equal(flat(ag.net.arrays()), before)


@pytest.mark.parametrize("mode", ["plain", "dueling"])
def test_single_transition_loss_gradient(mode):
    ag = _agent(mode, seed=4)
    env = ag.env
    s, s2 = SystemState(0, 0, 3, 4), SystemState(1, 1, 3, 3)
    tr = Transition(s, Action.DECEIVE, 0.0, s2, _feasible(env, s2))
    y = td_target(tr, ag.target, ag.gamma, env.params)
    X = ag.features([s])
    q = ag.net.forward(X)[0, tr.a]
    dQ = np.zeros((1, 8))
    dQ[0, tr.a] = 2 * (q - y)
    g = flat(ag.net.backward(X, dQ)[:8])
    theta = flat(ag.net.arrays()).copy()
    v = np.random.default_rng(0).normal(size=theta.size)

    def loss(step):
        probe = ag.net.copy()
        for a, src in zip(probe.arrays(), np.split(theta + step * v, np.cumsum([a.size for a in probe.arrays()])[:-1])):
            a[...] = src.reshape(a.shape)
        return (probe.forward(X)[0, tr.a] - y) ** 2

    h = 1e-5
    fd = (loss(h) - loss(-h)) / (2 * h)
    assert abs(fd - g @ v) / max(abs(fd), 1e-8) < 1e-5
    ag.train_step([tr])
    assert np.allclose(flat(ag.net.arrays()), theta - ag.lr * g, atol=1e-15)


@pytest.mark.parametrize("mode", ["plain", "dueling"])
def test_frozen_batch_overfits(mode):
    ag = _agent(mode, seed=1, lr=0.1)
    rng = np.random.default_rng(2)
    batch, seen = [], set()
    while len(batch) < 16:
        s = SystemState(0, 0, int(rng.integers(0, 11)), int(rng.integers(0, 11)))
        a = int(rng.choice(np.flatnonzero(_feasible(ag.env, s))))
        if (s, a) in seen:
            continue
        seen.add((s, a))
        batch.append(Transition(s, a, float(rng.integers(0, 4)), SystemState(0, 0, 0, 0), _feasible(ag.env, SystemState(0, 0, 0, 0))))
    ag.gamma = 0.0  # fixed regression targets
    losses = [ag.train_step(batch) for _ in range(20_000)]
    assert losses[-1] < 1e-6
    assert losses[-1] < losses[0]


def test_act_epsilon_one_uniform():
    ag = _agent()
    rng = np.random.default_rng(3)
    s = SystemState(1, 1, 5, 5)
    feas = _feasible(ag.env, s)
    n = 40_000
    counts = np.bincount([ag.act(s, 2, 1.0, rng) for _ in range(n)], minlength=8)
    k = feas.sum()
    assert counts[~feas].sum() == 0
    assert np.all(np.abs(counts[feas] / n - 1 / k) < 4 * np.sqrt((1 / k) * (1 - 1 / k) / n))


def test_act_greedy_tie_breaks_low():
    ag = _agent("plain")
    ag.net = _const_net([0.0, 5.0, 5.0, 0, 0, 0, 0, 0])
    assert ag.act(SystemState(0, 0, 3, 3), 1, 0.0, np.random.default_rng(0)) == Action.DECEIVE
    ag.net = _const_net([0.0, 0.0, 0.0, 9, 9, 9, 9, 9])
    assert ag.act(SystemState(0, 0, 3, 3), 1, 0.0, np.random.default_rng(0)) == Action.IDLE


def test_act_respects_feasibility_at_empty_queue_full_battery():
    ag = _agent("plain")
    ag.net = _const_net([-1.0, -1, -1, 9, 9, 9, 9, 9])
    rng = np.random.default_rng(4)
    s = SystemState(1, 1, 0, ag.params.E)
    picks = {ag.act(s, 2, eps, rng) for eps in (0.0, 0.5, 1.0) for _ in range(200)}
    assert picks == {Action.IDLE}


def test_act_rejects_wrong_epoch():
    with pytest.raises(ContractViolation):
        _agent().act(SystemState(1, 1, 2, 2), 1, 0.0, np.random.default_rng(0))


def test_same_seed_same_series():
    a = run_training(_agent(seed=3), iterations=3000, seed=9, window=500)
    b = run_training(_agent(seed=3), iterations=3000, seed=9, window=500)
    assert np.array_equal(a.throughput, b.throughput)
    assert np.array_equal(a.loss, b.loss, equal_nan=True)


def test_sync_every_step_keeps_target_equal():
    ag = _agent(seed=2)
    tr = DeepTrainer(ag, 500, sync_every=1, seed=0)
    for _ in range(5):
        tr.advance(40)
        assert np.array_equal(flat(ag.net.arrays()), flat(ag.target.arrays()))


def test_target_changes_only_at_sync():
    ag = _agent(seed=2)
    tr = DeepTrainer(ag, 2000, sync_every=100, seed=1)
    snap = flat(ag.target.arrays()).copy()
    changes = []
    for _ in range(600):
        tr.advance(1)
        now = flat(ag.target.arrays())
        if not np.array_equal(now, snap):
            changes.append(tr.gradient_steps)
            snap = now.copy()
    assert changes and all(g % 100 == 0 for g in changes)
    # warm-up: first gradient step once the memory holds a full batch
    assert tr.gradient_steps == 600 - ag.batch + 1


@pytest.mark.parametrize("kind", [PolicyKind.PROPOSED, PolicyKind.HTT, PolicyKind.BM, PolicyKind.RA])
def test_replay_holds_only_feasible_permitted_actions(kind):
    env = DeceptionEnv()
    ag = DeepAgent(env, allowed=kind.allowed(env.n_actions), seed=0)
    tr = DeepTrainer(ag, 3000, seed=0)
    _, actions = tr.advance(3000)
    allowed = kind.allowed(env.n_actions)
    assert allowed[actions].all()
    for t in tr.memory.items():
        assert _feasible(env, t.s)[t.a]
        assert np.array_equal(t.next_feasible, _feasible(env, t.s_next) & allowed)


def test_exploding_learning_rate_faults_with_snapshot():
    ag = _agent(seed=0, lr=1e30)
    tr = DeepTrainer(ag, 5000, seed=0)
    with pytest.raises(TrainingFault) as info:
        tr.advance(5000)
    snap = info.value.snapshot
    assert {"iteration", "state", "gradient_steps"} <= set(snap)


def test_run_training_rejects_zero_iterations():
    with pytest.raises(ContractViolation):
        run_training(_agent(), iterations=0)


def test_epsilon_schedule_is_linear_then_flat():
    tr = DeepTrainer(_agent(), 1000)
    assert tr.epsilon == 1.0
    tr.advance(400)
    assert tr.epsilon == pytest.approx(0.55)
    tr.advance(500)
    assert tr.epsilon == pytest.approx(0.1)
