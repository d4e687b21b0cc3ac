"""
Configuration for the reconstruction pipeline.
"""

from typing import Literal, Optional, Tuple

from pydantic import Field

from core.config import LabConfig

BOXES = {"unit": (0.0, 1.0), "signed": (-1.0, 1.0)}


class GdConfig(LabConfig):
    step: float = Field(0.1, gt=0)
    halve_every: int = Field(200, ge=1)
    max_steps: int = Field(2000, ge=1)
    window: int = Field(50, ge=1)
    rel_tol: float = Field(1e-6, ge=0)
    l1: bool = False
    max_backtracks: int = Field(40, ge=0)


class AttackConfig(LabConfig):
    # clique size parameter M; None means floor(epochs / 4), at least 1
    clique_extra: Optional[int] = Field(None, ge=0)
    baseline_only: bool = False
    box: Literal["unit", "signed"] = "unit"
    blur: bool = True
    reps_per_set: int = Field(4, ge=1)
    set_scorer: Literal["template", "mean_weight"] = "template"
    max_kmeans_iter: int = Field(50, ge=1)
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)
    gd: GdConfig = Field(default_factory=GdConfig)

    @property
    def bounds(self) -> Tuple[float, float]:
        return BOXES[self.box]

    def clique_size(self, epochs: int) -> int:
        if self.clique_extra is not None:
            return self.clique_extra
        return max(1, epochs // 4)
