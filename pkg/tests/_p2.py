import json, numpy as np
from antijam.env import DeceptionEnv
from antijam.tabular import QLearner
from antijam.kernels import envk
env=DeceptionEnv()
q=QLearner(env, iterations=20000, seed=2)
out=[]
for i in range(300):
    q.advance(1); out.append([float(q.table.q.sum())]+q.state.tolist())
print(json.dumps(out))
