"""Anti-jamming defense with deception: environment, learners and experiment harness."""
from __future__ import annotations

from ._jit import NUMBA_ENABLED, backend
from .baselines import PolicyKind, restrict, wd_policy
from .env import Action, DeceptionEnv, StepOutcome, SystemState, Transition
from .errors import (CapacityError, ConfigError, ContractViolation, ConvergenceError, InsufficientData,
                     TrainingFault)
from .model import check_irreducible, enumerate_model
from .params import EnvParams, JammerConfig, Scenario, attack_strategy

__version__ = "0.1.0"

__all__ = [
    "Action", "CapacityError", "ConfigError", "ContractViolation", "ConvergenceError", "DeceptionEnv",
    "EnvParams", "InsufficientData", "JammerConfig", "NUMBA_ENABLED", "PolicyKind", "Scenario",
    "StepOutcome", "SystemState", "TrainingFault", "Transition", "attack_strategy", "backend",
    "check_irreducible", "enumerate_model", "restrict", "wd_policy",
]
