"""
1-local, decomposable instance encoders for the toy problems.

Each encoder maps instances row by row (E_X) and passes labels through
unchanged (E_Y). Since every encoding depends on one instance only,
E_X^1(x, x_2, ..., x_n) ignores the companions.
"""

from dataclasses import dataclass, field
from typing import Dict, Literal, Optional, Tuple

import numpy as np

from core.errors import ConfigError
from theorysim.problems import Concept, LearningProblem

EncoderKind = Literal["identity", "noise", "label", "null"]
KINDS = ("identity", "noise", "label", "null")


@dataclass(frozen=True)
class LocalEncoder:
    kind: EncoderKind
    scale: float = 0.0
    concept: Optional[Concept] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown encoder kind {self.kind!r}; choose from {KINDS}")
        if self.kind == "noise" and not self.scale >= 0:
            raise ConfigError(f"noise scale must be >= 0, got {self.scale}")
        if self.kind == "label" and self.concept is None:
            raise ConfigError("the label-revealing encoder needs the concept it reveals")

    @property
    def locality(self) -> int:
        return 1

    @property
    def decomposable(self) -> bool:
        return True

    def encode_x(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.kind == "identity":
            return x.copy()
        if self.kind == "noise":
            return x + self.scale * rng.standard_normal(x.shape)
        if self.kind == "label":
            return (2.0 * self.concept(x) - 1.0)[:, None]
        # constant output, same width as the input
        return np.zeros_like(x)

    def encode_y(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=np.int64).copy()

    def encode(self, x: np.ndarray, y: np.ndarray,
               rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        return self.encode_x(x, rng), self.encode_y(y)

    def encode_instance(self, x: np.ndarray, companions: Optional[np.ndarray],
                        rng: np.random.Generator) -> np.ndarray:
        """E_X^1(x, companions): the encoding that depends on x."""
        return self.encode_x(np.asarray(x)[None, :], rng)[0]

    def describe(self) -> Dict[str, object]:
        return {"encoder": self.kind, "scale": self.scale if self.kind == "noise" else 0.0}


def identity_encoder() -> LocalEncoder:
    return LocalEncoder("identity")


def noise_encoder(scale: float) -> LocalEncoder:
    return LocalEncoder("noise", scale=float(scale))


def label_encoder(concept: Concept) -> LocalEncoder:
    return LocalEncoder("label", concept=concept)


def null_encoder() -> LocalEncoder:
    return LocalEncoder("null")


def make_encoder(kind: str, problem: LearningProblem, scale: float = 0.0, concept: int = 0) -> LocalEncoder:
    if kind == "label":
        return label_encoder(problem.concept(concept))
    return LocalEncoder(kind, scale=float(scale))
