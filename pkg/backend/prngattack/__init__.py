"""
MT19937 seed recovery and exact reconstruction.
"""

from prngattack.exact_reconstruct import exact_reconstruct, export_secrets
from prngattack.seed_search import (
    RecoveredSecrets,
    SeedSearchConfig,
    search_seed,
    verify_seed,
)

__all__ = [
    "RecoveredSecrets",
    "SeedSearchConfig",
    "exact_reconstruct",
    "export_secrets",
    "search_seed",
    "verify_seed",
]
