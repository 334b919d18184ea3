"""Time the hot kernels with numba on and off.

Each backend runs in its own interpreter because the backend is fixed at
import time by ``ANTIJAM_DISABLE_NUMBA``.  Compilation is excluded: every
workload runs once to warm up before it is timed.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from antijam import backend
from antijam.deep import DeepAgent, DeepTrainer
from antijam.env import DeceptionEnv
from antijam.params import Scenario
from antijam.simulate import rollout, uniform_policy
from antijam.tabular import QLearner

repeat = int(sys.argv[1])
sc = Scenario()
env = DeceptionEnv(sc)
pol = uniform_policy(sc.env.n_states)

def sim(n):
    rollout(sc, pol, n, seed=0)

def qlearn(n):
    QLearner(env, iterations=n, seed=0).advance(n)

def deep(mode):
    def run(n):
        DeepTrainer(DeepAgent(env, mode=mode, seed=0), n, seed=0).advance(n)
    return run

work = {"rollout": (sim, 200_000), "q-learning": (qlearn, 200_000),
        "dqn": (deep("plain"), 2_000), "dueling": (deep("dueling"), 2_000)}
out = {"backend": backend()}
for name, (fn, n) in work.items():
    fn(min(n, 200))
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(n)
        best = min(best, time.perf_counter() - t0)
    out[name] = {"n": n, "seconds": best}
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, ANTIJAM_DISABLE_NUMBA="1" if disable else "0")
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True)
    if proc.returncode:
        raise SystemExit(proc.stderr)
    res = json.loads(proc.stdout)
    res["wall"] = time.perf_counter() - t0
    return res


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    print(f"{'workload':<12} {'size':>8} {fast['backend'] + ' s':>10} {'numpy s':>10} {'speedup':>8}")
    for name in ("rollout", "q-learning", "dqn", "dueling"):
        a, b = fast[name], slow[name]
        print(f"{name:<12} {a['n']:>8} {a['seconds']:>10.3f} {b['seconds']:>10.3f} {b['seconds'] / a['seconds']:>7.1f}x")
    print(f"process wall time incl. import/compile: {fast['wall']:.1f} s vs {slow['wall']:.1f} s")


if __name__ == "__main__":
    main()
