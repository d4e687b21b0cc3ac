"""
InstaLab core: data types, MT19937, IHED container, image I/O and errors.
"""

from core.errors import (
    ConfigError,
    DatasetParseError,
    GameProtocolError,
    InfeasibleFlowError,
    InstaLabError,
    LabelError,
    PipelineStageError,
    RecoveryError,
    SamplingBudgetError,
    ShapeError,
    TrainingBudgetError,
    UnverifiedSecretsError,
)
from core.mt19937 import MtState, mt_next_f64, mt_next_u32, mt_sample, mt_seed, mt_shuffle
from core.types import DatasetParams, EncodedDataset, EncodedImage, MixRecord

__all__ = [
    "ConfigError",
    "DatasetParseError",
    "GameProtocolError",
    "InfeasibleFlowError",
    "InstaLabError",
    "LabelError",
    "PipelineStageError",
    "RecoveryError",
    "SamplingBudgetError",
    "ShapeError",
    "TrainingBudgetError",
    "UnverifiedSecretsError",
    "MtState",
    "mt_next_f64",
    "mt_next_u32",
    "mt_sample",
    "mt_seed",
    "mt_shuffle",
    "DatasetParams",
    "EncodedDataset",
    "EncodedImage",
    "MixRecord",
]
