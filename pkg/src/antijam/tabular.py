"""Tabular Q-learning and an exact value-iteration oracle.

The table is indexed by the flattened (f, j, d, e) state; the decision
epoch is implied by ``f``.  Entries of infeasible pairs stay at zero and
are never consulted: action choice and the bootstrap max both go through
the feasibility mask.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .env import DeceptionEnv, Transition
from .errors import ContractViolation, ConvergenceError
from .kernels import envk, learnk
from .params import EnvParams

EXPLORE_FRACTION = 0.8


@dataclass(frozen=True)
class LearningSchedule:
    """Learning-rate and exploration schedule.

    The learning rate of a pair at its k-th update is ``tau0 * k**-omega``;
    ``omega`` in (0.5, 1] keeps the rates summable in square but not in
    value.  ``epsilon_decay_steps=None`` decays over the first 80 % of the
    run.
    """

    tau0: float = 0.9
    omega: float = 0.65
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    epsilon_decay_steps: int | None = None
    gamma: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.tau0 < 1.0:
            raise ContractViolation("tau0 must lie in (0, 1)")
        if not 0.5 < self.omega <= 1.0:
            raise ContractViolation("omega must lie in (0.5, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ContractViolation("gamma must lie in [0, 1)")
        for name in ("epsilon_start", "epsilon_end"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ContractViolation(f"{name} must lie in [0, 1]")

    def tau(self, k) -> float:
        return self.tau0 * np.power(k, -self.omega)

    def decay_steps(self, iterations: int) -> int:
        if self.epsilon_decay_steps is not None:
            return int(self.epsilon_decay_steps)
        return int(EXPLORE_FRACTION * iterations)

    def epsilon(self, t: int, iterations: int) -> float:
        return float(learnk.linear_epsilon(t, self.epsilon_start, self.epsilon_end, self.decay_steps(iterations)))


@dataclass
class QTable:
    params: EnvParams
    q: np.ndarray
    visits: np.ndarray

    @classmethod
    def zeros(cls, params: EnvParams) -> "QTable":
        shape = (params.n_states, params.n_actions)
        return cls(params, np.zeros(shape), np.zeros(shape, dtype=np.int64))

    def index(self, s) -> int:
        f, j, d, e = s
        p = self.params
        return ((f * 2 + j) * (p.D + 1) + d) * (p.E + 1) + e

    def values(self, s) -> np.ndarray:
        return self.q[self.index(s)]

    def copy(self) -> "QTable":
        return QTable(self.params, self.q.copy(), self.visits.copy())


def q_update(table: QTable, tr: Transition, tau: float, gamma: float) -> QTable:
    """One temporal-difference step on ``table`` (in place); returns the table."""
    if not 0.0 <= tau < 1.0:
        raise ContractViolation(f"learning rate must lie in [0, 1), got {tau}")
    mask = np.asarray(tr.next_feasible, dtype=np.bool_)
    learnk.q_update_kernel(table.q, table.index(tr.s), int(tr.a), float(tr.r), table.index(tr.s_next),
                           mask, float(tau), float(gamma))
    return table


def epsilon_greedy(values, epsilon: float, rng: np.random.Generator, mask=None) -> int:
    """Epsilon-greedy choice among feasible actions.

    ``values`` is either a mapping ``{action: value}`` over the feasible
    set or a full value vector together with a boolean ``mask``.  Greedy
    ties go to the lowest action encoding.
    """
    if isinstance(values, Mapping):
        acts = sorted(int(a) for a in values)
        n = (acts[-1] + 1) if acts else 0
        vec = np.zeros(n)
        m = np.zeros(n, dtype=np.bool_)
        for a in acts:
            vec[a] = values[a]
            m[a] = True
    else:
        vec = np.asarray(values, dtype=np.float64)
        m = np.ones(vec.shape[0], dtype=np.bool_) if mask is None else np.asarray(mask, dtype=np.bool_)
    if not m.any():
        raise ContractViolation("no feasible action to choose from")
    u = rng.random(2)
    return int(learnk.epsilon_greedy_kernel(vec, m, float(epsilon), u[0], u[1]))


@dataclass
class ValueIterationResult:
    V: np.ndarray
    Q: np.ndarray          # -inf on infeasible pairs
    policy: np.ndarray     # -1 on states outside the state space
    iterations: int


def value_iteration(model, gamma: float = 0.95, tol: float = 1e-10, max_iter: int = 100_000) -> ValueIterationResult:
    """Bellman optimality iteration on an explicit model.

    ``model`` needs ``P`` (S, A, S), ``R`` (S, A) and ``mask`` (S, A).
    Iterates until the sup-norm change of V drops below ``tol``.
    """
    if not 0.0 <= gamma < 1.0:
        raise ContractViolation("gamma must lie in [0, 1)")
    if tol <= 0:
        raise ContractViolation("tol must be positive")
    P = np.asarray(model.P, dtype=np.float64)
    R = np.asarray(model.R, dtype=np.float64)
    mask = np.asarray(model.mask, dtype=bool)
    has_action = mask.any(axis=1)
    S, A = R.shape
    flatP = P.reshape(S * A, S)
    V = np.zeros(S)
    for it in range(1, max_iter + 1):
        Q = R + gamma * (flatP @ V).reshape(S, A)
        Q = np.where(mask, Q, -np.inf)
        V_new = np.where(has_action, Q.max(axis=1, initial=-np.inf), 0.0)
        delta = np.max(np.abs(V_new - V)) if S else 0.0
        V = V_new
        if delta < tol:
            break
    else:
        raise ConvergenceError(f"value iteration did not reach tol={tol} in {max_iter} sweeps (last change {delta:.3e})")
    Q = np.where(mask, R + gamma * (flatP @ V).reshape(S, A), -np.inf)
    policy = np.where(has_action, np.argmax(Q, axis=1), -1)
    return ValueIterationResult(V, Q, policy, it)


def greedy_policy(q: np.ndarray, params: EnvParams, kp, allowed: np.ndarray | None = None) -> np.ndarray:
    """Greedy action for every state index (lowest encoding on ties); -1 where no state exists."""
    n_actions = q.shape[1]
    allowed = np.ones(n_actions, dtype=np.bool_) if allowed is None else allowed
    policy = np.full(q.shape[0], -1, dtype=np.int64)
    mask = np.zeros(n_actions, dtype=np.bool_)
    for s in range(q.shape[0]):
        f, j, d, e = envk.decode_index(kp, s)
        if envk.restricted_mask(kp, f, j, d, e, allowed, mask):
            policy[s] = envk.argmax_masked(q[s], mask)
    return policy


class QLearner:
    """Incremental epsilon-greedy Q-learning on one environment.

    Each iteration is one decision epoch, so a deception slot yields two
    updates.  ``advance(n)`` continues the run; results do not depend on
    how the run is split into chunks.
    """

    def __init__(self, env: DeceptionEnv, schedule: LearningSchedule = LearningSchedule(),
                 iterations: int = 1, seed: int = 0, allowed: np.ndarray | None = None):
        self.env = env
        self.schedule = schedule
        self.iterations = int(iterations)
        self.table = QTable.zeros(env.params)
        self.allowed = np.ones(env.n_actions, dtype=np.bool_) if allowed is None else np.asarray(allowed, dtype=np.bool_)
        self.rng = np.random.default_rng(seed)
        self.state = np.zeros(5, dtype=np.int64)
        self.acc = np.zeros(envk.N_COUNTERS, dtype=np.int64)
        self.t = 0

    @property
    def epsilon(self) -> float:
        return self.schedule.epsilon(self.t, self.iterations)

    def advance(self, n: int) -> float:
        """Run ``n`` more epochs; returns the mean squared TD error over them."""
        if n <= 0:
            return float("nan")
        s = self.schedule
        u = self.rng.random((n, envk.N_UNIFORMS))
        rewards = np.zeros(n, dtype=np.int64)
        td_sq = learnk.q_learning_kernel(
            self.env.kp, self.table.q, self.table.visits, self.allowed, self.state, self.t, u,
            s.epsilon_start, s.epsilon_end, s.decay_steps(self.iterations),
            s.tau0, s.omega, s.gamma, self.acc, rewards)
        self.t += n
        return td_sq / n

    def greedy_policy(self) -> np.ndarray:
        return greedy_policy(self.table.q, self.env.params, self.env.kp, self.allowed)


@dataclass
class QTrainingResult:
    table: QTable
    throughput: np.ndarray      # delivered packets per slot, one value per window
    td_error: np.ndarray        # mean squared TD error, one value per window
    window: int
    counters: np.ndarray = field(repr=False, default=None)


def train_q(env: DeceptionEnv, schedule: LearningSchedule = LearningSchedule(), iterations: int = 1,
            seed: int = 0, window: int = 1000, allowed: np.ndarray | None = None) -> QTrainingResult:
    """Train a Q-table for ``iterations`` epochs, recording windowed throughput."""
    if iterations < 0:
        raise ContractViolation("iterations must be nonnegative")
    learner = QLearner(env, schedule, iterations, seed, allowed)
    tput, tde = [], []
    done = 0
    while done < iterations:
        n = min(window, iterations - done)
        before = learner.acc.copy()
        tde.append(learner.advance(n))
        diff = learner.acc - before
        tput.append(diff[envk.C_DELIVERED] / max(diff[envk.C_SLOTS], 1))
        done += n
    return QTrainingResult(learner.table, np.array(tput), np.array(tde), window, learner.acc.copy())

