from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from antijam.errors import ContractViolation, TrainingFault
from antijam.nn import Mlp, clone_into, sgd_step

from .oracles import directional_check, flat, reference_q

MODES = ["plain", "dueling", "dueling-max"]


def _net(mode, seed=0, hidden=64, n_actions=8, **kw):
    return Mlp.create(4, hidden, n_actions, mode=mode, rng=np.random.default_rng(seed), **kw)


def _forced_heads(mode):
    net = Mlp.create(4, 5, 3, mode=mode)
    net.params.bv[:] = 3.0
    net.params.ba[:] = [2.0, 4.0, 6.0]
    return net


def test_mean_combiner_worked_example():
    assert np.allclose(_forced_heads("dueling").forward(np.ones(4)), [1, 3, 5])


def test_max_combiner_worked_example():
    assert np.allclose(_forced_heads("dueling-max").forward(np.ones(4)), [-1, 1, 3])


@pytest.mark.parametrize("mode", MODES)
def test_zero_net_outputs_zero(mode):
    net = Mlp.create(4, 64, 8, mode=mode)
    assert not net.forward(np.random.default_rng(0).normal(size=(5, 4))).any()


@pytest.mark.parametrize("mode", MODES)
def test_forward_matches_reference(mode):
    net = _net(mode, seed=3)
    X = np.random.default_rng(4).normal(size=(50, 4)) * 2
    assert np.allclose(net.forward(X), reference_q(net.arrays(), net.depth, net.mode, X), atol=1e-13)


def test_bad_feature_width():
    with pytest.raises(ContractViolation):
        _net("dueling").forward(np.zeros(3))


def test_parameter_counts():
    duel = _net("dueling")
    assert duel.n_params() == 4 * 64 + 64 + 64 * 1 + 1 + 64 * 8 + 8 == 905
    assert duel.connection_count() == 4 * 64 + 64 + 64 * 8
    assert _net("plain").n_params() == 4 * 64 + 64 + 64 * 64 + 64 + 64 * 8 + 8


def test_single_unit_chain_rule():
    net = Mlp.create(1, 1, 1, mode="plain", depth=1)
    a, b, c, d, x = 0.7, -0.2, 1.5, 0.3, 0.9
    net.params.W1[:] = a
    net.params.b1[:] = b
    net.params.Wa[:] = c
    net.params.ba[:] = d
    t = np.tanh(a * x + b)
    assert net.forward([x])[0] == pytest.approx(c * t + d, abs=1e-15)
    g = net.backward([x], [1.0])
    assert g.Wa[0, 0] == pytest.approx(t, abs=1e-15)
    assert g.ba[0] == 1.0
    assert g.W1[0, 0] == pytest.approx(c * (1 - t * t) * x, abs=1e-15)
    assert g.b1[0] == pytest.approx(c * (1 - t * t), abs=1e-15)


@pytest.mark.parametrize("mode", MODES)
def test_zero_output_gradient_gives_zero_gradients(mode):
    net = _net(mode)
    g = net.backward(np.ones((3, 4)), np.zeros((3, 8)))
    assert not flat(g[:8]).any()


@pytest.mark.parametrize("mode", ["plain", "dueling"])
def test_directional_finite_differences(mode):
    rng = np.random.default_rng(11)
    worst = 0.0
    for k in range(40):
        net = _net(mode, seed=k, hidden=16)
        X = rng.normal(size=(4, 4))
        dQ = rng.normal(size=(4, 8))
        v = rng.normal(size=net.n_params())
        worst = max(worst, directional_check(net, X, dQ, v / np.linalg.norm(v)))
    assert worst < 1e-4


@pytest.mark.parametrize("mode", ["plain", "dueling"])
def test_full_coordinate_gradient_small_net(mode):
    net = _net(mode, seed=5, hidden=3, n_actions=3)
    rng = np.random.default_rng(6)
    X, dQ = rng.normal(size=(2, 4)), rng.normal(size=(2, 3))
    theta = flat(net.arrays())
    g = flat(net.backward(X, dQ)[:8])
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = 1.0
        assert directional_check(net, X, dQ, e) < 1e-4 or abs(g[i]) < 1e-10


@given(arrays(np.float64, (6, 4), elements=st.floats(-5, 5)))
def test_mean_mode_identifiability(X):
    net = _net("dueling", seed=2)
    Q, V, _ = net.streams(X)
    assert np.all(np.abs((Q - V[:, None]).mean(axis=1)) < 1e-12)


@given(c=st.floats(-100, 100), seed=st.integers(0, 1000))
def test_advantage_shift_absorbed_by_mean_combiner(c, seed):
    net = _net("dueling", seed=seed)
    X = np.random.default_rng(seed).normal(size=(8, 4))
    before = net.forward(X)
    net.params.ba[:] += c
    assert np.allclose(net.forward(X), before, atol=1e-12)
    # a compensating value shift is not absorbed: Q moves by exactly -c
    net.params.bv[:] -= c
    assert np.allclose(net.forward(X), before - c, atol=1e-12)


@given(seed=st.integers(0, 1000))
def test_mean_mode_argmax_follows_advantage(seed):
    net = _net("dueling", seed=seed)
    Q, _, G = net.streams(np.random.default_rng(seed).normal(size=(16, 4)))
    assert np.array_equal(Q.argmax(axis=1), G.argmax(axis=1))


def test_zero_learning_rate_keeps_parameters():
    net = _net("dueling")
    before = flat(net.arrays()).copy()
    sgd_step(net, net.backward(np.ones(4), np.ones(8)), 0.0)
    assert np.array_equal(flat(net.arrays()), before)


def test_scalar_sgd_example():
    net = Mlp.create(1, 1, 1, mode="plain", depth=1)
    net.params.W1[:] = 1.0
    g = net.zeros_like()
    g.W1[:] = 2.0
    net.sgd_step(g, 0.1)
    assert net.params.W1[0, 0] == pytest.approx(0.8, abs=1e-15)


def test_two_steps_differ_from_one_summed_step_on_quadratic():
    # loss 0.5 * |theta|^2 has gradient theta: two steps scale by (1-lr)^2, one doubled step by 1-2lr
    lr = 0.1
    net = _net("dueling", seed=9)
    theta0 = flat(net.arrays()).copy()
    for _ in range(2):
        net.sgd_step(net.copy().params, lr)
    lumped = _net("dueling", seed=9)
    g = lumped.copy().params
    for a in g[:8]:
        a *= 2
    lumped.sgd_step(g, lr)
    assert np.allclose(flat(net.arrays()), (1 - lr) ** 2 * theta0, atol=1e-14)
    assert np.allclose(flat(lumped.arrays()), (1 - 2 * lr) * theta0, atol=1e-14)
    assert not np.allclose(flat(net.arrays()), flat(lumped.arrays()))


def test_non_finite_gradient_faults():
    net = _net("plain")
    g = net.zeros_like()
    g.b1[0] = np.nan
    with pytest.raises(TrainingFault):
        net.sgd_step(g, 0.1)


@pytest.mark.parametrize("mode", MODES)
def test_clone_semantics(mode):
    src, dst = _net(mode, seed=1), _net(mode, seed=2)
    clone_into(src, dst)
    X = np.random.default_rng(0).normal(size=(10, 4))
    assert np.array_equal(src.forward(X), dst.forward(X))
    snap = dst.forward(X)
    src.params.W1[:] += 1.0
    assert np.array_equal(dst.forward(X), snap)
    zero = Mlp.create(4, 64, 8, mode=mode)
    zero.clone_into(dst)
    assert not flat(dst.arrays()).any()


def test_clone_architecture_mismatch():
    with pytest.raises(ContractViolation):
        clone_into(_net("plain"), _net("dueling"))


@pytest.mark.parametrize("mode", MODES)
def test_snapshot_roundtrip(mode, tmp_path):
    net = _net(mode, seed=8)
    path = tmp_path / "net.bin"
    net.save(path)
    back = Mlp.load(path)
    assert back.mode == mode and back.depth == net.depth
    assert np.array_equal(flat(back.arrays()), flat(net.arrays()))
    blob = path.read_bytes()
    header = np.frombuffer(blob[:40], dtype="<i8")
    assert header.tolist() == [4, 64, net.params.mode, 8, net.depth]
    assert np.array_equal(np.frombuffer(blob[40:40 + 8 * 256], dtype="<f8"), net.params.W1.ravel())


def test_snapshot_length_checked():
    blob = _net("dueling").to_bytes()
    with pytest.raises(ContractViolation):
        Mlp.from_bytes(blob[:-8])
