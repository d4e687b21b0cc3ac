"""
Exception hierarchy shared by every InstaLab module.
"""

from typing import Optional


class InstaLabError(Exception):
    """Base class for all lab errors."""


class ConfigError(InstaLabError):
    """Invalid parameters or violated configuration invariants."""


class ShapeError(InstaLabError):
    """Tensor shapes that do not line up."""


class LabelError(InstaLabError):
    """Label vectors that are not valid one-hot or mixed labels."""


class DatasetParseError(InstaLabError):
    """Malformed IHED container; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InfeasibleFlowError(InstaLabError):
    """The min-cost flow network could not route the required supply."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RecoveryError(InstaLabError):
    """Image recovery failed (NaN objective, empty clique, ...)."""


class UnverifiedSecretsError(InstaLabError):
    """Exact reconstruction was asked to use secrets that failed verification."""


class TrainingBudgetError(InstaLabError):
    """A learner could not reach its target accuracy within the round budget."""


class SamplingBudgetError(InstaLabError):
    """Rejection sampling ran out of draws."""


class GameProtocolError(InstaLabError):
    """An adversary broke the rules of a distinguishing game."""


class PipelineStageError(InstaLabError):
    """Wraps a failure inside one attack pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
