"""Experiment runner: JSON configs, seeded training runs, greedy evaluation, CSV output.

Config document (all keys optional)::

    {
      "env": {"D": 10, "lambda": 0.7, ...},
      "jammer": {"P_avg": 8, "P_dagger": 10, "P_J": [0, 4, 10, 15]},
      "algo": "dueling",            # q | dqn | dueling
      "policy": "proposed",         # proposed | htt | bm | ra | wd
      "iterations": 40000,
      "eval_window": 5000,
      "seeds": [0, 1, 2],
      "sweep": {"param": "P_avg", "values": [4, 8, 10]}
    }

Every run writes one CSV whose rows are greedy-policy evaluations taken
at evenly spaced points of training; the last row describes the final
policy.  Evaluations of one run share the same random numbers, so
differences between rows come from the policy alone.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import PolicyKind, wd_table
from .deep import DeepAgent, DeepTrainer
from .env import DeceptionEnv
from .errors import ConfigError, TrainingFault
from .kernels import envk
from .params import EnvParams, JammerConfig, Scenario
from .simulate import rollout
from .tabular import LearningSchedule, QLearner
from .utility import jammer_utility_from_counters

ALGOS = ("q", "dqn", "dueling")
SWEEPABLE = ("P_avg", "lambda", "p_e")
CSV_HEADER = "iteration,avg_throughput,packet_loss,pdr,loss,epsilon"
N_SAMPLES = 20

_TOP_KEYS = {"env", "jammer", "algo", "policy", "iterations", "eval_window", "seeds", "sweep"}
_ENV_ALIASES = {"lambda": "lam"}
_JAMMER_KEYS = {"P_avg", "P_dagger", "P_J", "P_max", "ratios", "x", "phi", "rho_sq"}


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvParams = field(default_factory=EnvParams)
    jammer: JammerConfig = field(default_factory=JammerConfig.from_budget)
    algo: str = "dueling"
    policy: PolicyKind = PolicyKind.PROPOSED
    iterations: int = 40_000
    eval_window: int = 5_000
    seeds: tuple[int, ...] = (0,)
    sweep: tuple[str, tuple[float, ...]] | None = None
    jammer_spec: dict = field(default_factory=dict, repr=False, compare=False)

    def cells(self) -> list[tuple[int, str | None, float | None, "ExperimentConfig"]]:
        """(seed, swept parameter, value, concrete config) for every run, sweep-major."""
        if self.sweep is None:
            return [(s, None, None, self) for s in self.seeds]
        name, values = self.sweep
        return [(s, name, v, with_parameter(self, name, v)) for v in values for s in self.seeds]


def _build_jammer(spec: dict) -> JammerConfig:
    unknown = set(spec) - _JAMMER_KEYS
    if unknown:
        raise ConfigError(f"jammer.{sorted(unknown)[0]}", "unknown key")
    kw = {k: spec[k] for k in ("P_max", "phi", "rho_sq") if k in spec}
    try:
        if "x" in spec:
            extra = {k: spec[k] for k in ("P_J", "P_avg", "P_dagger") if k in spec}
            return JammerConfig(x=tuple(spec["x"]), **extra, **kw)
        extra = {k: spec[k] for k in ("P_avg", "P_dagger", "P_J", "ratios") if k in spec}
        return JammerConfig.from_budget(**extra, **kw)
    except ConfigError as exc:
        raise ConfigError(f"jammer.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError("jammer", str(exc)) from None


def _build_env(spec: dict) -> EnvParams:
    names = {f.name for f in fields(EnvParams)}
    kw = {}
    for key, value in spec.items():
        name = _ENV_ALIASES.get(key, key)
        if name not in names:
            raise ConfigError(f"env.{key}", "unknown key")
        kw[name] = value
    try:
        return EnvParams(**kw)
    except ConfigError as exc:
        raise ConfigError(f"env.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError("env", str(exc)) from None


def with_parameter(cfg: ExperimentConfig, name: str, value) -> ExperimentConfig:
    """Copy of ``cfg`` with one sweepable parameter set."""
    if name == "P_avg":
        spec = dict(cfg.jammer_spec, P_avg=value)
        spec.pop("x", None)
        return replace(cfg, jammer=_build_jammer(spec), jammer_spec=spec, sweep=None)
    if name in ("lambda", "lam"):
        return replace(cfg, env=_rebuild(cfg.env, lam=value), sweep=None)
    if name == "p_e":
        return replace(cfg, env=_rebuild(cfg.env, p_e=value), sweep=None)
    raise ConfigError("sweep.param", f"cannot sweep {name!r}; choose from {SWEEPABLE}")


def _rebuild(env: EnvParams, **changes) -> EnvParams:
    try:
        return env.replace(**changes)
    except ConfigError as exc:
        raise ConfigError(f"sweep.{exc.field}", str(exc).split(": ", 1)[-1]) from None


def _int(doc: dict, key: str, default: int, minimum: int) -> int:
    v = doc.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(key, f"must be an integer >= {minimum}, got {v!r}")
    return v


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    env_spec = doc.get("env", {}) or {}
    jam_spec = doc.get("jammer", {}) or {}
    if not isinstance(env_spec, dict):
        raise ConfigError("env", "must be an object")
    if not isinstance(jam_spec, dict):
        raise ConfigError("jammer", "must be an object")
    env = _build_env(env_spec)
    jammer = _build_jammer(jam_spec)
    if jammer.n_levels != env.n_levels:
        raise ConfigError("jammer.P_J", f"{jammer.n_levels} power levels but env tables have {env.n_levels}")
    algo = doc.get("algo", "dueling")
    if algo not in ALGOS:
        raise ConfigError("algo", f"must be one of {ALGOS}, got {algo!r}")
    try:
        policy = PolicyKind(doc.get("policy", "proposed"))
    except ValueError:
        raise ConfigError("policy", f"must be one of {[k.value for k in PolicyKind]}") from None
    iterations = _int(doc, "iterations", 40_000, 0)
    eval_window = _int(doc, "eval_window", 5_000, 1)
    seeds = doc.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or any(isinstance(s, bool) or not isinstance(s, int) or s < 0
                                                       for s in seeds):
        raise ConfigError("seeds", "must be a nonempty list of nonnegative integers")
    cfg = ExperimentConfig(env, jammer, algo, policy, iterations, eval_window, tuple(seeds), None, dict(jam_spec))
    sweep = doc.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or set(sweep) != {"param", "values"}:
            raise ConfigError("sweep", 'must be {"param": <name>, "values": [...]}')
        name, values = sweep["param"], sweep["values"]
        if name not in SWEEPABLE:
            raise ConfigError("sweep.param", f"cannot sweep {name!r}; choose from {SWEEPABLE}")
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep.values", "must be a nonempty list")
        for v in values:
            with_parameter(cfg, name, v)  # validates each point
        cfg = replace(cfg, sweep=(name, tuple(values)))
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(doc)


@dataclass(frozen=True)
class MetricsRow:
    iteration: int
    avg_throughput: float
    packet_loss: float
    pdr: float
    loss: float
    epsilon: float

    def csv(self) -> str:
        vals = (self.avg_throughput, self.packet_loss, self.pdr, self.loss, self.epsilon)
        return ",".join([str(self.iteration), *(f"{v:.6f}" for v in vals)])


def compute_metrics(counters: np.ndarray, iteration: int = 0, loss: float = float("nan"),
                    epsilon: float = 0.0) -> MetricsRow:
    """Per-slot throughput, packet loss and delivery ratio from window counters."""
    slots = int(counters[envk.C_SLOTS])
    if slots <= 0:
        raise ValueError("metrics need a nonempty window")
    delivered = int(counters[envk.C_DELIVERED])
    arrived = int(counters[envk.C_ARRIVED])
    dropped = int(counters[envk.C_DROP_OVERFLOW] + counters[envk.C_DROP_JAMMED]
                  + counters[envk.C_DROP_MISS] + counters[envk.C_DROP_BACKSCATTER])
    pdr = delivered / arrived if arrived else 1.0
    return MetricsRow(int(iteration), delivered / slots, dropped / slots, pdr, float(loss), float(epsilon))


@dataclass
class RunResult:
    seed: int
    param: str | None
    value: float | None
    path: Path | None
    rows: list[MetricsRow]
    final_counters: np.ndarray | None
    jammer_utility: float | None
    fault: str | None = None

    @property
    def final(self) -> MetricsRow | None:
        return self.rows[-1] if self.rows else None


def _format_value(v) -> str:
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    return f"{v}"


def csv_name(policy: PolicyKind, algo: str, seed: int, param: str | None = None, value=None) -> str:
    if param is None:
        return f"{policy.value}_{algo}_seed{seed}.csv"
    return f"{policy.value}_{algo}_{param}={_format_value(value)}_seed{seed}.csv"


def sample_points(iterations: int, n: int = N_SAMPLES) -> list[int]:
    """0 plus ``n`` evenly spaced checkpoints ending at ``iterations``."""
    if iterations == 0:
        return [0]
    step = max(1, math.ceil(iterations / n))
    pts = list(range(0, iterations, step))
    return pts + [iterations]


class _Learner:
    """Uniform face over the tabular learner, the deep trainer and the fixed WD rule."""

    def __init__(self, cfg: ExperimentConfig, env: DeceptionEnv, seed: int):
        allowed = cfg.policy.allowed(env.n_actions)
        init_seq, run_seq = np.random.SeedSequence(seed).spawn(2)
        self.kind = "wd" if cfg.policy is PolicyKind.WD else cfg.algo
        if self.kind == "wd":
            self.table = wd_table(env.params)
        elif self.kind == "q":
            self.q = QLearner(env, LearningSchedule(), cfg.iterations, run_seq, allowed)
        else:
            mode = "plain" if cfg.algo == "dqn" else "dueling"
            agent = DeepAgent(env, mode, allowed, seed=init_seq)
            self.deep = DeepTrainer(agent, cfg.iterations, seed=run_seq)

    def advance(self, n: int) -> float:
        if n <= 0 or self.kind == "wd":
            return float("nan")
        if self.kind == "q":
            return self.q.advance(n)
        return self.deep.advance(n)[0]

    @property
    def epsilon(self) -> float:
        if self.kind == "wd":
            return 0.0
        return (self.q if self.kind == "q" else self.deep).epsilon

    def policy(self) -> np.ndarray:
        if self.kind == "wd":
            return self.table
        if self.kind == "q":
            return self.q.greedy_policy()
        return self.deep.agent.greedy_policy()


def run_cell(cfg: ExperimentConfig, seed: int) -> tuple[list[MetricsRow], np.ndarray | None, str | None]:
    """Train one (config, seed) cell and evaluate it at every sample point."""
    scenario = Scenario(cfg.env, cfg.jammer)
    env = DeceptionEnv(scenario)
    eval_seq = np.random.SeedSequence([seed, 0xE7A1])
    eval_u = np.random.default_rng(eval_seq).random((cfg.eval_window, envk.N_UNIFORMS))
    learner = _Learner(cfg, env, seed)
    rows: list[MetricsRow] = []
    final = None
    done = 0
    for point in sample_points(cfg.iterations):
        try:
            loss = learner.advance(point - done)
        except TrainingFault as exc:
            return rows, final, f"{exc} {exc.snapshot}"
        done = point
        if learner.kind == "wd":
            loss = 0.0
        ev = rollout(scenario, learner.policy(), cfg.eval_window, uniforms=eval_u, kp=env.kp)
        final = ev.counters
        rows.append(compute_metrics(ev.counters, point, loss, learner.epsilon))
    return rows, final, None


def write_csv(path: Path, rows: Sequence[MetricsRow]) -> None:
    lines = [CSV_HEADER, *(r.csv() for r in rows)]
    path.write_text("\n".join(lines) + "\n")


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> list[RunResult]:
    """Run every (sweep value, seed) cell; write one CSV per cell when ``out_dir`` is set.

    A training fault ends that cell (its CSV keeps the rows written so far)
    and is recorded in the result; the remaining cells still run.
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    results = []
    for seed, param, value, cell in cfg.cells():
        rows, counters, fault = run_cell(cell, seed)
        path = None
        if out is not None:
            path = out / csv_name(cfg.policy, cfg.algo, seed, param, value)
            write_csv(path, rows)
        ju = jammer_utility_from_counters(counters, cell.env) if counters is not None else None
        results.append(RunResult(seed, param, value, path, rows, counters, ju, fault))
    return results
