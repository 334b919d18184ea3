"""Small fully-connected Q-networks with hand-written backpropagation.

Two architectures are used by the agents:

* plain: ``in -> tanh(64) -> tanh(64) -> |A|`` linear Q outputs;
* dueling: ``in -> tanh(64)`` shared, feeding a scalar value head and an
  ``|A|``-wide advantage head, recombined as
  ``Q = V + (G - mean(G))`` (or ``- max(G)`` in ``dueling-max`` mode).

Snapshot format (little-endian): five int64 header fields
``input_dim, hidden, mode, n_actions, depth`` followed by float64
parameters in the order W1 (row-major), b1, [W2, b2], then the heads:
[Wv, bv] (dueling only) and Wa, ba.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ContractViolation, TrainingFault
from .kernels import nnk
from .kernels.nnk import NetParams

MODES = {"plain": nnk.PLAIN, "dueling": nnk.DUELING_MEAN, "dueling-max": nnk.DUELING_MAX}
MODE_NAMES = {v: k for k, v in MODES.items()}

_HEADER = np.dtype("<i8")
_BODY = np.dtype("<f8")

Gradients = NetParams


def _empty_like_layout(input_dim: int, hidden: int, n_actions: int, depth: int, mode: int) -> NetParams:
    two = depth == 2
    duel = mode != nnk.PLAIN
    return NetParams(
        np.zeros((input_dim, hidden)), np.zeros(hidden),
        np.zeros((hidden, hidden) if two else (0, 0)), np.zeros(hidden if two else 0),
        np.zeros((hidden, n_actions)), np.zeros(n_actions),
        np.zeros((hidden, 1) if duel else (0, 0)), np.zeros(1 if duel else 0),
        int(depth), int(mode),
    )


def _arrays(p: NetParams) -> tuple[np.ndarray, ...]:
    return p[:8]


class Mlp:
    """Feedforward Q-network; parameters live in a ``NetParams`` tuple."""

    def __init__(self, params: NetParams):
        self.params = params

    @classmethod
    def create(cls, input_dim: int = 4, hidden: int = 64, n_actions: int = 8, mode: str = "dueling",
               depth: int | None = None, rng: np.random.Generator | None = None) -> "Mlp":
        if mode not in MODES:
            raise ContractViolation(f"unknown head mode {mode!r}; pick one of {sorted(MODES)}")
        code = MODES[mode]
        if depth is None:
            depth = 2 if code == nnk.PLAIN else 1
        if depth not in (1, 2):
            raise ContractViolation("depth must be 1 or 2")
        net = cls(_empty_like_layout(input_dim, hidden, n_actions, depth, code))
        if rng is not None:
            net.reinitialize(rng)
        return net

    def reinitialize(self, rng: np.random.Generator) -> None:
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases."""
        p = self.params
        layers = [(p.W1, p.b1), (p.W2, p.b2), (p.Wv, p.bv), (p.Wa, p.ba)]
        for W, b in layers:
            if W.size == 0:
                continue
            bound = 1.0 / np.sqrt(W.shape[0])
            W[...] = rng.uniform(-bound, bound, size=W.shape)
            b[...] = rng.uniform(-bound, bound, size=b.shape)

    @property
    def input_dim(self) -> int:
        return self.params.W1.shape[0]

    @property
    def hidden(self) -> int:
        return self.params.W1.shape[1]

    @property
    def n_actions(self) -> int:
        return self.params.Wa.shape[1]

    @property
    def depth(self) -> int:
        return self.params.depth

    @property
    def mode(self) -> str:
        return MODE_NAMES[self.params.mode]

    @property
    def dueling(self) -> bool:
        return self.params.mode != nnk.PLAIN

    def arrays(self) -> tuple[np.ndarray, ...]:
        return _arrays(self.params)

    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())

    def connection_count(self) -> int:
        """Weights only: |L0||L1| (+ |L1||L1|) + |L1||L_value| + |L1||L_advantage|."""
        p = self.params
        return p.W1.size + p.W2.size + p.Wv.size + p.Wa.size

    def _batch(self, features) -> tuple[np.ndarray, bool]:
        X = np.asarray(features, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ContractViolation(f"expected features of width {self.input_dim}, got shape {np.shape(features)}")
        return np.ascontiguousarray(X), single

    def forward(self, features) -> np.ndarray:
        X, single = self._batch(features)
        Q = nnk.forward(self.params, X)
        return Q[0] if single else Q

    def streams(self, features) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(Q, V, G): the combined output plus the raw value and advantage heads."""
        X, single = self._batch(features)
        Q, V, A, _, _ = nnk.forward_cache(self.params, X)
        if single:
            return Q[0], V[0, 0], A[0]
        return Q, V[:, 0], A

    def backward(self, features, dQ) -> Gradients:
        X, single = self._batch(features)
        dQ = np.asarray(dQ, dtype=np.float64)
        if single:
            dQ = dQ[None, :]
        if dQ.shape != (X.shape[0], self.n_actions):
            raise ContractViolation(f"output gradient shape {dQ.shape} != {(X.shape[0], self.n_actions)}")
        _, _, A, h1, h2 = nnk.forward_cache(self.params, X)
        grads = self.zeros_like()
        nnk.backward(self.params, X, np.ascontiguousarray(dQ), A, h1, h2, grads)
        return grads

    def zeros_like(self) -> Gradients:
        return _empty_like_layout(self.input_dim, self.hidden, self.n_actions, self.depth, self.params.mode)

    def sgd_step(self, grads: Gradients, lr: float) -> None:
        if lr < 0:
            raise ContractViolation("learning rate must be nonnegative")
        if not nnk.all_finite(grads):
            raise TrainingFault("non-finite gradient", {"lr": lr})
        nnk.sgd(self.params, grads, float(lr))

    def same_architecture(self, other: "Mlp") -> bool:
        return all(a.shape == b.shape for a, b in zip(self.arrays(), other.arrays())) and \
            self.params.depth == other.params.depth and self.params.mode == other.params.mode

    def clone_into(self, dst: "Mlp") -> None:
        if not self.same_architecture(dst):
            raise ContractViolation("clone target has a different architecture")
        nnk.copy_params(self.params, dst.params)

    def copy(self) -> "Mlp":
        dst = Mlp(self.zeros_like())
        self.clone_into(dst)
        return dst

    # -- serialization -------------------------------------------------
    def _ordered(self) -> list[np.ndarray]:
        p = self.params
        order = [p.W1, p.b1, p.W2, p.b2, p.Wv, p.bv, p.Wa, p.ba]
        return [a for a in order if a.size]

    def to_bytes(self) -> bytes:
        header = np.array([self.input_dim, self.hidden, self.params.mode, self.n_actions, self.depth], dtype=_HEADER)
        body = np.concatenate([a.ravel() for a in self._ordered()]).astype(_BODY)
        return header.tobytes() + body.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Mlp":
        header = np.frombuffer(blob[: 5 * 8], dtype=_HEADER)
        if header.size != 5:
            raise ContractViolation("truncated network snapshot header")
        input_dim, hidden, mode, n_actions, depth = (int(v) for v in header)
        if mode not in MODE_NAMES or depth not in (1, 2):
            raise ContractViolation(f"bad snapshot header {header.tolist()}")
        net = cls(_empty_like_layout(input_dim, hidden, n_actions, depth, mode))
        body = np.frombuffer(blob[5 * 8:], dtype=_BODY)
        need = net.n_params()
        if body.size != need:
            raise ContractViolation(f"snapshot holds {body.size} parameters, architecture needs {need}")
        pos = 0
        for a in net._ordered():
            a[...] = body[pos: pos + a.size].reshape(a.shape)
            pos += a.size
        return net

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Mlp":
        return cls.from_bytes(Path(path).read_bytes())

    def __repr__(self) -> str:
        return (f"Mlp(input_dim={self.input_dim}, hidden={self.hidden}, depth={self.depth}, "
                f"mode={self.mode!r}, n_actions={self.n_actions})")


def forward(net: Mlp, features) -> np.ndarray:
    return net.forward(features)


def backward(net: Mlp, features, dQ) -> Gradients:
    return net.backward(features, dQ)


def sgd_step(net: Mlp, grads: Gradients, lr: float) -> Mlp:
    net.sgd_step(grads, lr)
    return net


def clone_into(src: Mlp, dst: Mlp) -> None:
    src.clone_into(dst)
