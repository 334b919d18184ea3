"""Run a fixed workload and print its results as JSON (used under both backends)."""
from __future__ import annotations

import json

import numpy as np

from antijam import backend
from antijam.deep import DeepAgent, DeepTrainer
from antijam.env import DeceptionEnv
from antijam.params import Scenario
from antijam.simulate import rollout, uniform_policy
from antijam.tabular import QLearner

sc = Scenario()
env = DeceptionEnv(sc)
run = rollout(sc, uniform_policy(sc.env.n_states), 20_000, seed=1, record=True)
q = QLearner(env, iterations=20_000, seed=2)
q.advance(20_000)
out = {"backend": backend(), "counters": run.counters.tolist(), "trace_sum": int(run.trace.sum()),
       "q": q.table.q.ravel().tolist(), "q_acc": q.acc.tolist()}
for mode in ("plain", "dueling"):
    ag = DeepAgent(env, mode=mode, seed=3)
    tr = DeepTrainer(ag, 600, seed=4)
    loss, actions = tr.advance(300)
    out[mode] = {"loss": loss, "actions": actions.tolist(),
                 "params": np.concatenate([a.ravel() for a in ag.net.arrays()]).tolist()}
print(json.dumps(out))
