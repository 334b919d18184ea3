from __future__ import annotations


class ContractViolation(ValueError):
    """A caller broke an operation's precondition (infeasible action, bad epoch...)."""


class ConfigError(ValueError):
    """Invalid experiment or model configuration.

    ``field`` names the offending parameter so CLI users can fix it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class CapacityError(ValueError):
    """Requested enumeration exceeds the configured size bound."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance."""


class InsufficientData(LookupError):
    """Replay memory holds fewer transitions than the requested batch."""


class TrainingFault(RuntimeError):
    """Non-finite loss or gradient during training.

    ``snapshot`` carries whatever state the trainer had at the fault.
    """

    def __init__(self, message: str, snapshot: dict | None = None):
        super().__init__(message)
        self.snapshot = snapshot or {}
