"""Reference implementations that share no code with the package kernels."""
from __future__ import annotations

import numpy as np


def reference_q(arrays, depth: int, mode: str, X: np.ndarray) -> np.ndarray:
    """Straight-line numpy forward pass from the raw parameter arrays."""
    W1, b1, W2, b2, Wa, ba, Wv, bv = arrays
    h = np.tanh(X @ W1 + b1)
    if depth == 2:
        h = np.tanh(h @ W2 + b2)
    G = h @ Wa + ba
    if mode == "plain":
        return G
    V = h @ Wv + bv
    ref = G.mean(axis=1, keepdims=True) if mode == "dueling" else G.max(axis=1, keepdims=True)
    return V + G - ref


def flat(arrays) -> np.ndarray:
    return np.concatenate([a.ravel() for a in arrays])


def unflat(vec: np.ndarray, like) -> list[np.ndarray]:
    out, pos = [], 0
    for a in like:
        out.append(vec[pos: pos + a.size].reshape(a.shape))
        pos += a.size
    return out


def directional_check(net, X: np.ndarray, dQ: np.ndarray, v: np.ndarray, h: float = 1e-5) -> float:
    """Relative gap between the analytic and central-difference slope of sum(dQ * Q) along ``v``."""
    arrays = net.arrays()
    theta = flat(arrays)

    def loss(t):
        return float(np.sum(dQ * reference_q(unflat(t, arrays), net.depth, net.mode, X)))

    fd = (loss(theta + h * v) - loss(theta - h * v)) / (2 * h)
    analytic = float(flat(net.backward(X, dQ)[:8]) @ v)
    return abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-6)
