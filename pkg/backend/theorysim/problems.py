"""
Toy learning problems: isotropic Gaussian instances labeled by halfspaces
through the origin.
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import ConfigError, SamplingBudgetError

UNIT_TOL = 1e-9
ORTHO_TOL = 1e-9
MAX_DRAWS = 1_000_000


@dataclass(frozen=True)
class Concept:
    """Halfspace c(x) = [<w, x> > 0], optionally complemented."""

    normal: np.ndarray
    negated: bool = False

    def __call__(self, x: np.ndarray) -> np.ndarray:
        above = np.atleast_2d(x) @ self.normal > 0
        return (above ^ self.negated).astype(np.int64)

    def complement(self) -> "Concept":
        return Concept(self.normal, not self.negated)


@dataclass(frozen=True)
class LearningProblem:
    normals: np.ndarray

    def __post_init__(self):
        normals = np.atleast_2d(np.asarray(self.normals, dtype=np.float64))
        if normals.shape[0] < 1 or normals.shape[1] < 1:
            raise ConfigError("a learning problem needs at least one concept in dimension >= 1")
        norms = np.linalg.norm(normals, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise ConfigError(f"concept normals must be unit length, got norms {norms}")
        object.__setattr__(self, "normals", normals)

    @property
    def dimension(self) -> int:
        return self.normals.shape[1]

    @property
    def num_concepts(self) -> int:
        return self.normals.shape[0]

    @property
    def orthogonal(self) -> bool:
        gram = self.normals @ self.normals.T
        np.fill_diagonal(gram, 0.0)
        return bool(np.all(np.abs(gram) < ORTHO_TOL))

    def concept(self, index: int = 0) -> Concept:
        if not 0 <= index < self.num_concepts:
            raise ConfigError(f"concept index {index} out of range [0, {self.num_concepts})")
        return Concept(self.normals[index])

    def concepts(self, indices: Optional[Sequence[int]] = None) -> List[Concept]:
        indices = range(self.num_concepts) if indices is None else indices
        return [self.concept(i) for i in indices]

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.standard_normal((count, self.dimension))

    def sample_labeled(self, rng: np.random.Generator, count: int,
                       concept: Concept) -> Tuple[np.ndarray, np.ndarray]:
        """count draws from D_c."""
        x = self.sample(rng, count)
        return x, concept(x)

    def evaluate(self, x: np.ndarray, indices: Optional[Sequence[int]] = None) -> np.ndarray:
        """F(x): one column of labels per concept."""
        normals = self.normals if indices is None else self.normals[list(indices)]
        return (np.atleast_2d(x) @ normals.T > 0).astype(np.int64)

    def sample_where(self, rng: np.random.Generator, count: int,
                     accept: Callable[[np.ndarray], np.ndarray], budget: int = MAX_DRAWS) -> np.ndarray:
        """Rejection sampling from D conditioned on accept(x)."""
        if count == 0:
            return np.empty((0, self.dimension))
        kept: List[np.ndarray] = []
        have = drawn = 0
        batch = max(64, 4 * count)
        while have < count:
            if drawn >= budget:
                raise SamplingBudgetError(
                    f"rejection sampling kept {have}/{count} after {drawn} draws (budget {budget})")
            x = self.sample(rng, min(batch, budget - drawn))
            drawn += len(x)
            x = x[accept(x)]
            kept.append(x)
            have += len(x)
        return np.concatenate(kept)[:count]


def orthogonal_problem(dimension: int, num_concepts: Optional[int] = None) -> LearningProblem:
    """Standard-basis halfspaces: balanced and mutually independent under N(0, I)."""
    num_concepts = dimension if num_concepts is None else num_concepts
    if not 1 <= num_concepts <= dimension:
        raise ConfigError(f"need 1 <= num_concepts <= dimension, got {num_concepts} in dimension {dimension}")
    return LearningProblem(np.eye(dimension)[:num_concepts])


def same_label_pair(problem: LearningProblem, concept: Concept, rng: np.random.Generator,
                    budget: int = MAX_DRAWS) -> Tuple[np.ndarray, np.ndarray]:
    """(x0, x1) drawn from D x D conditioned on c(x0) = c(x1)."""
    x0 = problem.sample(rng, 1)[0]
    y0 = concept(x0)[0]
    x1 = problem.sample_where(rng, 1, lambda x: concept(x) == y0, budget)[0]
    return x0, x1
