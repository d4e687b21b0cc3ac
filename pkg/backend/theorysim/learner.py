"""
Averaged perceptron over encoded samples.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import Field

from core.config import LabConfig
from core.errors import ShapeError


class LearnerConfig(LabConfig):
    epochs: int = Field(10, ge=1)
    learning_rate: float = Field(1.0, gt=0)
    seed: int = Field(0, ge=0)


@dataclass(frozen=True)
class Hypothesis:
    weights: np.ndarray
    bias: float

    def scores(self, x: np.ndarray) -> np.ndarray:
        return np.atleast_2d(x) @ self.weights + self.bias

    def predict(self, x: np.ndarray) -> np.ndarray:
        return (self.scores(x) >= 0).astype(np.int64)


class AveragedPerceptron:
    """
    Perceptron with weight averaging, labels in {0, 1}.

    The running sum of updates weighted by their step count gives the average
    in one pass (w_avg = w - u / c). Visit order per epoch comes from the
    generator passed to fit, or from config.seed.
    """

    def __init__(self, config: Optional[LearnerConfig] = None):
        self.config = config or LearnerConfig()

    def fit(self, x: np.ndarray, y: np.ndarray, rng: Optional[np.random.Generator] = None) -> Hypothesis:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        s = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
        if len(x) != len(s):
            raise ShapeError(f"{len(x)} instances for {len(s)} labels")
        rng = rng if rng is not None else np.random.default_rng(self.config.seed)
        lr = self.config.learning_rate

        d = x.shape[1]
        w = np.zeros(d)
        u = np.zeros(d)
        b = ub = 0.0
        c = 1
        for _ in range(self.config.epochs):
            for i in rng.permutation(len(x)):
                if s[i] * (x[i] @ w + b) <= 0:
                    step = lr * s[i]
                    w += step * x[i]
                    b += step
                    u += c * step * x[i]
                    ub += c * step
                c += 1
        return Hypothesis(w - u / c, b - ub / c)
