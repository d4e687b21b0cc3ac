"""
Distinguishing games and Monte-Carlo estimates.

Every trial draws from its own generator seeded with (seed, trial), so an
estimate does not depend on the order trials run in.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Tuple

import numpy as np
from scipy.stats import norm

from core.errors import ConfigError, GameProtocolError
from theorysim.encoders import LocalEncoder
from theorysim.learner import AveragedPerceptron
from theorysim.problems import Concept, LearningProblem, same_label_pair
from utils import get_logger

log = get_logger(__name__)

CONFIDENCE = 0.95
DEFAULT_TRIALS = 2000


def wilson_interval(successes: int, trials: int, confidence: float = CONFIDENCE) -> Tuple[float, float]:
    if trials <= 0:
        raise ConfigError("a Wilson interval needs at least one trial")
    z = float(norm.ppf(0.5 + confidence / 2))
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def trial_rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng([seed, *path])


@dataclass
class GameTranscript:
    bits: List[int] = field(default_factory=list)
    guesses: List[int] = field(default_factory=list)

    def record(self, bit: int, guess: int) -> None:
        self.bits.append(int(bit))
        self.guesses.append(int(guess))


@dataclass
class AdvantageEstimate:
    """
    p = wins / trials; advantage = p - 1/2.

    gap is the distinguishing gap Pr[b'=1 | b=1] - Pr[b'=1 | b=0], which
    equals 2p - 1 for a uniform challenge bit. Theorem bounds are stated on
    the gap.
    """

    wins: int
    trials: int
    transcript: Optional[GameTranscript] = field(default=None, repr=False)

    def __post_init__(self):
        if self.trials <= 0:
            raise ConfigError("an advantage estimate needs trials > 0")
        if not 0 <= self.wins <= self.trials:
            raise ConfigError(f"wins {self.wins} outside [0, {self.trials}]")

    @property
    def p(self) -> float:
        return self.wins / self.trials

    @property
    def advantage(self) -> float:
        return self.p - 0.5

    @property
    def interval(self) -> Tuple[float, float]:
        lo, hi = wilson_interval(self.wins, self.trials)
        return lo - 0.5, hi - 0.5

    @property
    def gap(self) -> float:
        return 2 * self.p - 1

    @property
    def gap_interval(self) -> Tuple[float, float]:
        lo, hi = self.interval
        return 2 * lo, 2 * hi

    @property
    def half_width(self) -> float:
        lo, hi = self.interval
        return (hi - lo) / 2

    def contains(self, value: float) -> bool:
        lo, hi = self.interval
        return lo <= value <= hi

    def row(self, prefix: str = "") -> Dict[str, object]:
        lo, hi = self.interval
        return {
            f"{prefix}wins": self.wins,
            f"{prefix}trials": self.trials,
            f"{prefix}advantage": round(self.advantage, 6),
            f"{prefix}ci_low": round(lo, 6),
            f"{prefix}ci_high": round(hi, 6),
            f"{prefix}gap": round(self.gap, 6),
        }


@dataclass
class DistinguishingGap:
    """
    Pr[q = 1 | A] - Pr[q = 1 | B] from independent samples of each side,
    with a Newcombe hybrid-score interval built from the two Wilson intervals.
    """

    ones_a: int
    ones_b: int
    trials: int

    @property
    def p_a(self) -> float:
        return self.ones_a / self.trials

    @property
    def p_b(self) -> float:
        return self.ones_b / self.trials

    @property
    def value(self) -> float:
        return self.p_a - self.p_b

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    @property
    def interval(self) -> Tuple[float, float]:
        la, ua = wilson_interval(self.ones_a, self.trials)
        lb, ub = wilson_interval(self.ones_b, self.trials)
        d = self.value
        lo = d - math.sqrt((self.p_a - la) ** 2 + (ub - self.p_b) ** 2)
        hi = d + math.sqrt((ua - self.p_a) ** 2 + (self.p_b - lb) ** 2)
        return lo, hi

    @property
    def half_width(self) -> float:
        lo, hi = self.interval
        return (hi - lo) / 2

    def contains_zero(self) -> bool:
        lo, hi = self.interval
        return lo <= 0.0 <= hi

    def row(self, prefix: str = "") -> Dict[str, object]:
        lo, hi = self.interval
        return {
            f"{prefix}p_a": round(self.p_a, 6),
            f"{prefix}p_b": round(self.p_b, 6),
            f"{prefix}gap": round(self.value, 6),
            f"{prefix}ci_low": round(lo, 6),
            f"{prefix}ci_high": round(hi, 6),
        }


# --- encoded accuracy -------------------------------------------------------

@dataclass
class AccuracyEstimate:
    """
    Per-trial encoded error of the trained model.

    epsilon is the mean error over trials; delta is the fraction of trials
    whose error reached the tolerance. Balanced estimates take the worse of
    the two per-label errors in each trial.
    """

    errors: np.ndarray
    tolerance: float
    balanced: bool = False

    @property
    def epsilon(self) -> float:
        return float(np.mean(self.errors))

    @property
    def delta(self) -> float:
        return float(np.mean(self.errors >= self.tolerance))

    @property
    def stderr(self) -> float:
        if len(self.errors) < 2:
            return 0.0
        return float(np.std(self.errors, ddof=1) / math.sqrt(len(self.errors)))

    def row(self) -> Dict[str, object]:
        return {
            "epsilon": round(self.epsilon, 6),
            "epsilon_stderr": round(self.stderr, 6),
            "delta": round(self.delta, 6),
            "tolerance": self.tolerance,
            "balanced": self.balanced,
            "trials": len(self.errors),
        }


def encoded_error(problem: LearningProblem, encoder: LocalEncoder, hypothesis, concept: Concept,
                  rng: np.random.Generator, size: int = 1000, balanced: bool = False) -> float:
    """Pr[h(E_X^1(x, ...)) != c(x)] on fresh x, worst label when balanced."""
    x = problem.sample(rng, size)
    y = concept(x)
    wrong = hypothesis.predict(encoder.encode_x(x, rng)) != y
    if not balanced:
        return float(np.mean(wrong))
    per_label = [np.mean(wrong[y == label]) for label in (0, 1) if np.any(y == label)]
    return float(max(per_label))


def train_encoded(problem: LearningProblem, encoder: LocalEncoder, learner: AveragedPerceptron,
                  concept: Concept, n: int, rng: np.random.Generator):
    """h <- L(E(S)) for S drawn from D_c^n."""
    x, y = problem.sample_labeled(rng, n, concept)
    ex, ey = encoder.encode(x, y, rng)
    return learner.fit(ex, ey, rng)


def encoded_accuracy(problem: LearningProblem, encoder: LocalEncoder, learner: Optional[AveragedPerceptron] = None,
                     n: int = 100, trials: int = 200, balanced: bool = False, concept: int = 0,
                     tolerance: float = 0.1, test_size: int = 1000, seed: int = 0) -> AccuracyEstimate:
    if n < 1:
        raise ConfigError(f"training set size must be >= 1, got {n}")
    learner = learner or AveragedPerceptron()
    c = problem.concept(concept)
    errors = np.empty(trials)
    for t in range(trials):
        rng = trial_rng(seed, t)
        h = train_encoded(problem, encoder, learner, c, n, rng)
        errors[t] = encoded_error(problem, encoder, h, c, rng, test_size, balanced)
    est = AccuracyEstimate(errors, tolerance, balanced)
    log.info(f"Encoded accuracy ({encoder.kind}, n={n}): epsilon={est.epsilon:.4f}, delta={est.delta:.4f}")
    return est


# --- dataset game ------------------------------------------------------------

@dataclass
class DatasetChallenge:
    concept: Concept
    x0: np.ndarray
    x1: np.ndarray
    rest: np.ndarray


@dataclass
class EncodedSet:
    x: np.ndarray
    y: np.ndarray


class DatasetAdversary(Protocol):
    def choose(self, rng: np.random.Generator) -> DatasetChallenge: ...

    def guess(self, challenge: DatasetChallenge, encoded: EncodedSet, rng: np.random.Generator) -> int: ...


def dataset_challenger(challenge: DatasetChallenge, encoder: LocalEncoder,
                       rng: np.random.Generator) -> Tuple[int, EncodedSet]:
    """Shape S_0 / S_1, flip b, return b and E(S_b) in a random order."""
    c = challenge.concept
    y0, y1 = c(challenge.x0)[0], c(challenge.x1)[0]
    if y0 != y1:
        raise GameProtocolError(f"challenge instances carry different labels ({y0} vs {y1})")
    b = int(rng.integers(2))
    xb = challenge.x1 if b else challenge.x0
    x = np.vstack([xb[None, :], np.atleast_2d(challenge.rest).reshape(-1, len(xb))])
    order = rng.permutation(len(x))
    x = x[order]
    ex, ey = encoder.encode(x, c(x), rng)
    return b, EncodedSet(ex, ey)


def play_dataset_game(adversary: DatasetAdversary, encoder: LocalEncoder,
                      trials: int = DEFAULT_TRIALS, seed: int = 0) -> AdvantageEstimate:
    transcript = GameTranscript()
    wins = 0
    for t in range(trials):
        adv_rng, chal_rng = (np.random.default_rng(s) for s in np.random.SeedSequence([seed, t]).spawn(2))
        challenge = adversary.choose(adv_rng)
        b, encoded = dataset_challenger(challenge, encoder, chal_rng)
        guess = int(adversary.guess(challenge, encoded, adv_rng))
        transcript.record(b, guess)
        wins += guess == b
    return AdvantageEstimate(wins, trials, transcript)


# --- single-instance game ----------------------------------------------------

@dataclass
class InstanceChallenge:
    concept: Concept
    x0: np.ndarray
    x1: np.ndarray


class InstanceAdversary(Protocol):
    def choose(self, rng: np.random.Generator) -> InstanceChallenge: ...

    def guess(self, challenge: InstanceChallenge, encoding: np.ndarray, rng: np.random.Generator) -> int: ...


def instance_challenger(challenge: InstanceChallenge, problem: LearningProblem, encoder: LocalEncoder,
                        n: int, rng: np.random.Generator) -> Tuple[int, np.ndarray]:
    """Sample x_2..x_n from D, flip b, return b and E_X^1(x_b, x_2, ..., x_n)."""
    c = challenge.concept
    y0, y1 = c(challenge.x0)[0], c(challenge.x1)[0]
    if y0 != y1:
        raise GameProtocolError(f"challenge instances carry different labels ({y0} vs {y1})")
    companions = problem.sample(rng, n - 1)
    b = int(rng.integers(2))
    xb = challenge.x1 if b else challenge.x0
    return b, encoder.encode_instance(xb, companions, rng)


def play_instance_game(adversary: InstanceAdversary, problem: LearningProblem, encoder: LocalEncoder,
                       n: int = 100, trials: int = DEFAULT_TRIALS, seed: int = 0) -> AdvantageEstimate:
    if n < 1:
        raise ConfigError(f"dataset size must be >= 1, got {n}")
    transcript = GameTranscript()
    wins = 0
    for t in range(trials):
        adv_rng, chal_rng = (np.random.default_rng(s) for s in np.random.SeedSequence([seed, t]).spawn(2))
        challenge = adversary.choose(adv_rng)
        b, encoding = instance_challenger(challenge, problem, encoder, n, chal_rng)
        guess = int(adversary.guess(challenge, encoding, adv_rng))
        transcript.record(b, guess)
        wins += guess == b
    return AdvantageEstimate(wins, trials, transcript)


# --- stock adversaries ------------------------------------------------------

def _closer(d0: float, d1: float, rng: np.random.Generator) -> int:
    if np.isclose(d0, d1, rtol=0.0, atol=1e-12):
        return int(rng.integers(2))
    return int(d1 < d0)


class RandomGuessAdversary:
    """Valid challenge, coin-flip guess."""

    def __init__(self, problem: LearningProblem, n: int = 100, concept: int = 0):
        self.problem = problem
        self.n = n
        self.concept = problem.concept(concept)

    def choose(self, rng):
        x0, x1 = same_label_pair(self.problem, self.concept, rng)
        return DatasetChallenge(self.concept, x0, x1, self.problem.sample(rng, self.n - 1))

    def guess(self, challenge, encoded, rng) -> int:
        return int(rng.integers(2))


class NearestInstanceAdversary:
    """Guesses the challenge instance closer to the encoding."""

    def __init__(self, problem: LearningProblem, concept: int = 0):
        self.problem = problem
        self.concept = problem.concept(concept)

    def choose(self, rng):
        x0, x1 = same_label_pair(self.problem, self.concept, rng)
        return InstanceChallenge(self.concept, x0, x1)

    def guess(self, challenge, encoding, rng) -> int:
        if encoding.shape != challenge.x0.shape:
            return int(rng.integers(2))
        return _closer(float(np.linalg.norm(encoding - challenge.x0)),
                       float(np.linalg.norm(encoding - challenge.x1)), rng)


class MembershipAdversary(RandomGuessAdversary):
    """Looks for the differing element among the encoded set."""

    def guess(self, challenge, encoded, rng) -> int:
        if encoded.x.shape[1] != len(challenge.x0):
            return int(rng.integers(2))
        d0 = float(np.min(np.linalg.norm(encoded.x - challenge.x0, axis=1)))
        d1 = float(np.min(np.linalg.norm(encoded.x - challenge.x1, axis=1)))
        return _closer(d0, d1, rng)


class FixedInstanceAdversary:
    """Replays one challenge pair and decides with a rule over the encoding."""

    def __init__(self, challenge: InstanceChallenge, rule):
        self.challenge = challenge
        self.rule = rule

    def choose(self, rng):
        return self.challenge

    def guess(self, challenge, encoding, rng) -> int:
        return int(self.rule(encoding))


class RandomInstanceAdversary(NearestInstanceAdversary):
    def guess(self, challenge, encoding, rng) -> int:
        return int(rng.integers(2))
