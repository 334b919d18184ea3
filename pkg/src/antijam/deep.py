"""Deep Q-learning agents (plain or dueling heads) with replay and a target net.

The interaction/training loop runs inside one compiled kernel.  The
replay memory is a ring of flat arrays that the kernel writes directly,
so ``ReplayBuffer`` is both the Python-facing container and the kernel's
storage.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import DeceptionEnv, SystemState, Transition
from .errors import ContractViolation, InsufficientData, TrainingFault
from .kernels import envk, learnk, nnk
from .nn import Mlp

DEFAULT_CAPACITY = 10_000
DEFAULT_BATCH = 64
DEFAULT_SYNC = 1_000
EXPLORE_FRACTION = 0.8


class ReplayBuffer:
    """Fixed-capacity ring of transitions; the oldest item is evicted when full."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY, n_actions: int = 8):
        if capacity < 1:
            raise ContractViolation("capacity must be positive")
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, 4), dtype=np.int64)
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity, dtype=np.float64)
        self.s2 = np.zeros((capacity, 4), dtype=np.int64)
        self.mask2 = np.zeros((capacity, n_actions), dtype=np.bool_)
        self.info = np.zeros(3, dtype=np.int64)  # write position, size, gradient steps

    def __len__(self) -> int:
        return int(self.info[1])

    @property
    def size(self) -> int:
        return len(self)

    def push(self, tr: Transition) -> None:
        pos = int(self.info[0])
        self.s[pos] = tr.s
        self.a[pos] = tr.a
        self.r[pos] = tr.r
        self.s2[pos] = tr.s_next
        self.mask2[pos] = tr.next_feasible
        self.info[0] = (pos + 1) % self.capacity
        self.info[1] = min(self.info[1] + 1, self.capacity)

    def _get(self, k: int) -> Transition:
        return Transition(SystemState(*map(int, self.s[k])), int(self.a[k]), float(self.r[k]),
                          SystemState(*map(int, self.s2[k])), self.mask2[k].copy())

    def items(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        n = len(self)
        start = (int(self.info[0]) - n) % self.capacity
        return [self._get((start + i) % self.capacity) for i in range(n)]

    def sample_indices(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        n = len(self)
        if n < batch:
            raise InsufficientData(f"replay holds {n} transitions, batch needs {batch}")
        # same index law as the training kernel: floor(u * size)
        return np.minimum((rng.random(batch) * n).astype(np.int64), n - 1)

    def sample(self, batch: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform sample with replacement; raises ``InsufficientData`` if too small."""
        return [self._get(int(k)) for k in self.sample_indices(batch, rng)]


def _features(env_params, states) -> np.ndarray:
    S = np.asarray(states, dtype=np.float64).reshape(-1, 4)
    out = S.copy()
    out[:, 2] /= env_params.D
    out[:, 3] /= env_params.E
    return out


def td_target(tr: Transition, target_net: Mlp, gamma: float, env_params) -> float:
    """``r + gamma * max`` of the target net over the actions feasible at ``s_next``."""
    q = target_net.forward(_features(env_params, [tr.s_next]))[0]
    mask = np.asarray(tr.next_feasible, dtype=np.bool_)
    return float(tr.r + gamma * envk.max_masked(q, mask))


class DeepAgent:
    """Online and target networks plus the learning hyperparameters.

    ``mode`` is ``"dueling"`` (one shared hidden layer, mean-combined
    value/advantage heads), ``"dueling-max"`` or ``"plain"`` (two hidden
    layers, direct Q head).
    """

    def __init__(self, env: DeceptionEnv, mode: str = "dueling", allowed: np.ndarray | None = None,
                 hidden: int = 64, gamma: float = 0.95, lr: float = 1e-3, batch: int = DEFAULT_BATCH,
                 seed: int = 0):
        if not 0.0 <= gamma < 1.0:
            raise ContractViolation("gamma must lie in [0, 1)")
        if lr <= 0:
            raise ContractViolation("learning rate must be positive")
        self.env = env
        self.params = env.params
        self.kp = env.kp
        self.mode = mode
        self.gamma = float(gamma)
        self.lr = float(lr)
        self.batch = int(batch)
        n = env.n_actions
        self.allowed = np.ones(n, dtype=np.bool_) if allowed is None else np.asarray(allowed, dtype=np.bool_)
        self.net = Mlp.create(4, hidden, n, mode=mode, rng=np.random.default_rng(seed))
        self.target = self.net.copy()
        self.grads = self.net.zeros_like()

    def features(self, states) -> np.ndarray:
        return _features(self.params, states)

    def mask(self, s: SystemState) -> np.ndarray:
        out = np.zeros(self.env.n_actions, dtype=np.bool_)
        if not envk.restricted_mask(self.kp, *map(int, s), self.allowed, out):
            raise ContractViolation(f"{tuple(s)} is not a state")
        return out

    def act(self, s: SystemState, epoch: int, epsilon: float, rng: np.random.Generator) -> int:
        """Epsilon-greedy over the feasible (and permitted) actions of ``s``."""
        if (epoch == 1) != (s[0] == 0):
            raise ContractViolation(f"state {tuple(s)} does not belong to epoch {epoch}")
        mask = self.mask(s)
        u = rng.random(2)
        if u[0] < epsilon:
            return int(envk.pick_uniform(mask, u[1]))
        q = self.net.forward(self.features([s]))[0]
        return int(envk.argmax_masked(q, mask))

    def train_step(self, batch: list[Transition]) -> float:
        """One SGD step on the mean squared TD error of ``batch``; returns the loss."""
        if not batch:
            raise ContractViolation("empty batch")
        X = self.features([t.s for t in batch])
        X2 = self.features([t.s_next for t in batch])
        a = np.array([t.a for t in batch], dtype=np.int64)
        r = np.array([t.r for t in batch], dtype=np.float64)
        m = np.array([t.next_feasible for t in batch], dtype=np.bool_)
        loss = nnk.train_batch(self.net.params, self.target.params, self.grads, X, a, r, X2, m,
                               self.gamma, self.lr)
        if not np.isfinite(loss):
            raise TrainingFault("non-finite loss or gradient", {"batch": len(batch), "lr": self.lr})
        return float(loss)

    def sync_target(self) -> None:
        self.net.clone_into(self.target)

    def greedy_policy(self) -> np.ndarray:
        """Greedy action for every state index; -1 outside the state space."""
        p = self.params
        S = p.n_states
        states = np.array([envk.decode_index(self.kp, s) for s in range(S)], dtype=np.int64)
        Q = self.net.forward(self.features(states))
        policy = np.full(S, -1, dtype=np.int64)
        mask = np.zeros(self.env.n_actions, dtype=np.bool_)
        for s in range(S):
            if envk.restricted_mask(self.kp, *states[s], self.allowed, mask):
                policy[s] = envk.argmax_masked(Q[s], mask)
        return policy


class DeepTrainer:
    """Resumable training loop: one environment epoch and one SGD step per iteration."""

    def __init__(self, agent: DeepAgent, iterations: int, sync_every: int = DEFAULT_SYNC, seed: int = 0,
                 capacity: int = DEFAULT_CAPACITY, epsilon_start: float = 1.0, epsilon_end: float = 0.1):
        if sync_every < 1:
            raise ContractViolation("sync_every must be >= 1")
        self.agent = agent
        self.iterations = int(iterations)
        self.sync_every = int(sync_every)
        self.memory = ReplayBuffer(capacity, agent.env.n_actions)
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        env_seq, batch_seq = root.spawn(2)
        self.env_rng = np.random.default_rng(env_seq)
        self.batch_rng = np.random.default_rng(batch_seq)
        self.eps_start = float(epsilon_start)
        self.eps_end = float(epsilon_end)
        self.eps_decay = int(EXPLORE_FRACTION * self.iterations)
        self.state = np.zeros(5, dtype=np.int64)
        self.acc = np.zeros(envk.N_COUNTERS, dtype=np.int64)
        self.t = 0

    @property
    def epsilon(self) -> float:
        return float(learnk.linear_epsilon(self.t, self.eps_start, self.eps_end, self.eps_decay))

    @property
    def gradient_steps(self) -> int:
        return int(self.memory.info[2])

    def advance(self, n: int) -> tuple[float, np.ndarray]:
        """Run ``n`` iterations; returns (mean loss over trained iterations, actions taken)."""
        ag = self.agent
        u = self.env_rng.random((n, envk.N_UNIFORMS))
        bu = self.batch_rng.random((n, ag.batch))
        rewards = np.zeros(n, dtype=np.int64)
        losses = np.zeros(n)
        actions = np.zeros(n, dtype=np.int64)
        m = self.memory
        fault = learnk.deep_training_kernel(
            ag.kp, ag.net.params, ag.target.params, ag.grads, ag.allowed, self.state, self.t,
            self.eps_start, self.eps_end, self.eps_decay, ag.gamma, ag.lr, self.sync_every,
            m.s, m.a, m.r, m.s2, m.mask2, m.info, ag.batch, u, bu, self.acc, rewards, losses, actions)
        if fault:
            i = int(fault) - 1
            self.t += i + 1
            raise TrainingFault("non-finite loss during training", {
                "iteration": self.t, "state": self.state[:4].tolist(),
                "gradient_steps": self.gradient_steps, "loss": float(losses[i])})
        self.t += n
        trained = losses[np.isfinite(losses)]
        return (float(trained.mean()) if trained.size else float("nan")), actions


@dataclass
class DeepTrainingResult:
    throughput: np.ndarray   # delivered packets per slot, per window
    loss: np.ndarray         # mean training loss per window (nan before warm-up)
    epsilon: np.ndarray      # exploration rate at the end of each window
    window: int


def run_training(agent: DeepAgent, env: DeceptionEnv | None = None, iterations: int = 1,
                 sync_every: int = DEFAULT_SYNC, seed: int = 0, window: int = 1000) -> DeepTrainingResult:
    """Train ``agent`` for ``iterations`` epochs and record windowed metrics."""
    if iterations < 1:
        raise ContractViolation("iterations must be >= 1")
    if env is not None and env is not agent.env:
        raise ContractViolation("agent was built for a different environment")
    trainer = DeepTrainer(agent, iterations, sync_every, seed)
    tput, loss, eps = [], [], []
    while trainer.t < iterations:
        n = min(window, iterations - trainer.t)
        before = trainer.acc.copy()
        mean_loss, _ = trainer.advance(n)
        diff = trainer.acc - before
        tput.append(diff[envk.C_DELIVERED] / max(diff[envk.C_SLOTS], 1))
        loss.append(mean_loss)
        eps.append(trainer.epsilon)
    return DeepTrainingResult(np.array(tput), np.array(loss), np.array(eps), window)
