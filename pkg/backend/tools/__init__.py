"""
Tools for run manifests, image metrics and CSV reports.
"""

from .parsing_tools import (
    RunManifest,
    parse_manifest,
    parse_all_manifests,
)

__all__ = [
    "RunManifest",
    "parse_manifest",
    "parse_all_manifests",
]
