"""
InstaHide encoder and synthetic data.
"""

from encoder.instahide import (
    EncoderConfig,
    PrivateDataset,
    PublicPool,
    encode_dataset,
    encoder_config_for,
    xmix,
    ymix,
)
from encoder.synthetic import generate_public_pool, generate_synthetic

__all__ = [
    "EncoderConfig",
    "PrivateDataset",
    "PublicPool",
    "encode_dataset",
    "encoder_config_for",
    "xmix",
    "ymix",
    "generate_public_pool",
    "generate_synthetic",
]
