"""
Distinguishing-game simulations for instance encodings on toy problems.
"""

from theorysim.adversaries import (
    RichnessReport,
    Theorem3Config,
    Theorem3Report,
    Theorem4Config,
    Theorem4Report,
    Theorem5Config,
    Theorem5Report,
    analytic_richness,
    richness_check,
    run_theorem3_adversary,
    run_theorem4_adversary,
    run_theorem5_dichotomy,
)
from theorysim.encoders import LocalEncoder, identity_encoder, label_encoder, make_encoder, noise_encoder, null_encoder
from theorysim.games import (
    AccuracyEstimate,
    AdvantageEstimate,
    DistinguishingGap,
    MembershipAdversary,
    NearestInstanceAdversary,
    RandomGuessAdversary,
    RandomInstanceAdversary,
    encoded_accuracy,
    play_dataset_game,
    play_instance_game,
)
from theorysim.learner import AveragedPerceptron, Hypothesis, LearnerConfig
from theorysim.problems import Concept, LearningProblem, orthogonal_problem

__all__ = [
    "AccuracyEstimate",
    "AdvantageEstimate",
    "AveragedPerceptron",
    "Concept",
    "DistinguishingGap",
    "Hypothesis",
    "LearnerConfig",
    "LearningProblem",
    "LocalEncoder",
    "MembershipAdversary",
    "NearestInstanceAdversary",
    "RandomGuessAdversary",
    "RandomInstanceAdversary",
    "RichnessReport",
    "Theorem3Config",
    "Theorem3Report",
    "Theorem4Config",
    "Theorem4Report",
    "Theorem5Config",
    "Theorem5Report",
    "analytic_richness",
    "encoded_accuracy",
    "identity_encoder",
    "label_encoder",
    "make_encoder",
    "noise_encoder",
    "null_encoder",
    "orthogonal_problem",
    "play_dataset_game",
    "play_instance_game",
    "richness_check",
    "run_theorem3_adversary",
    "run_theorem4_adversary",
    "run_theorem5_dichotomy",
]
