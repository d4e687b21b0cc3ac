import numpy as np
import pytest

from core.errors import ConfigError, GameProtocolError, TrainingBudgetError
from theorysim import (
    AdvantageEstimate,
    AveragedPerceptron,
    DistinguishingGap,
    Hypothesis,
    LearningProblem,
    LocalEncoder,
    MembershipAdversary,
    NearestInstanceAdversary,
    RandomGuessAdversary,
    Theorem3Config,
    Theorem3Report,
    Theorem4Config,
    Theorem5Config,
    analytic_richness,
    encoded_accuracy,
    identity_encoder,
    label_encoder,
    noise_encoder,
    null_encoder,
    orthogonal_problem,
    play_dataset_game,
    play_instance_game,
    richness_check,
    run_theorem3_adversary,
    run_theorem4_adversary,
    run_theorem5_dichotomy,
)
from theorysim.adversaries import booster_votes
from theorysim.games import FixedInstanceAdversary, InstanceChallenge, wilson_interval
from theorysim.problems import same_label_pair


@pytest.fixture
def problem():
    return orthogonal_problem(4)


# --- problems, encoders, learner --------------------------------------------------

def test_problem_validation():
    with pytest.raises(ConfigError):
        LearningProblem(np.array([[1.0, 1.0]]))
    with pytest.raises(ConfigError):
        orthogonal_problem(3, 5)
    assert orthogonal_problem(5, 2).orthogonal


def test_concept_and_complement(problem, rng):
    c = problem.concept(1)
    x = problem.sample(rng, 50)
    assert np.array_equal(c(x), (x[:, 1] > 0).astype(int))
    assert np.array_equal(c.complement()(x), 1 - c(x))
    assert np.array_equal(problem.evaluate(x)[:, 1], c(x))
    with pytest.raises(ConfigError):
        problem.concept(4)


def test_same_label_pair(problem, rng):
    c = problem.concept(0)
    for _ in range(10):
        x0, x1 = same_label_pair(problem, c, rng)
        assert c(x0)[0] == c(x1)[0]


def test_encoders(problem, rng):
    x = problem.sample(rng, 6)
    assert np.array_equal(identity_encoder().encode_x(x, rng), x)
    assert np.array_equal(null_encoder().encode_x(x, rng), np.zeros_like(x))
    revealed = label_encoder(problem.concept(0)).encode_x(x, rng)
    assert revealed.shape == (6, 1)
    assert np.array_equal(revealed[:, 0] > 0, x[:, 0] > 0)
    noisy = noise_encoder(0.5).encode_x(x, rng)
    assert noisy.shape == x.shape and not np.array_equal(noisy, x)
    assert noise_encoder(0.5).locality == 1 and noise_encoder(0.5).decomposable
    with pytest.raises(ConfigError):
        LocalEncoder("label")
    with pytest.raises(ConfigError):
        LocalEncoder("blur")


def test_perceptron_fits_a_halfspace(rng):
    x = rng.standard_normal((200, 2))
    y = (x[:, 0] > 0).astype(int)
    h = AveragedPerceptron().fit(x, y, rng)
    assert np.mean(h.predict(x) == y) >= 0.95


# --- estimates ---------------------------------------------------------------------

def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert lo == pytest.approx(1 - hi)
    assert wilson_interval(0, 10)[0] == 0.0
    with pytest.raises(ConfigError):
        wilson_interval(0, 0)


def test_estimates():
    est = AdvantageEstimate(75, 100)
    assert est.advantage == pytest.approx(0.25)
    assert est.gap == pytest.approx(0.5)
    assert est.contains(0.25)
    with pytest.raises(ConfigError):
        AdvantageEstimate(7, 5)
    gap = DistinguishingGap(10, 10, 20)
    assert gap.value == 0.0 and gap.contains_zero()
    assert not DistinguishingGap(20, 0, 20).contains_zero()


def test_encoded_accuracy(problem):
    good = encoded_accuracy(problem, identity_encoder(), n=100, trials=20, test_size=500)
    assert good.epsilon < 0.1
    blind = encoded_accuracy(problem, null_encoder(), n=100, trials=20, test_size=500, balanced=True)
    # a constant model misses every instance of one label
    assert blind.epsilon == 1.0
    assert blind.delta == 1.0


# --- games ---------------------------------------------------------------------------

def test_membership_adversary_wins_against_identity(problem):
    est = play_dataset_game(MembershipAdversary(problem, n=10), identity_encoder(), trials=50)
    assert est.wins == 50


def test_coin_flip_has_no_advantage(problem):
    est = play_dataset_game(RandomGuessAdversary(problem, n=10), identity_encoder(), trials=400, seed=3)
    assert abs(est.advantage) < 0.1
    assert len(est.transcript.bits) == 400


def test_nearest_instance_game(problem):
    won = play_instance_game(NearestInstanceAdversary(problem), problem, identity_encoder(), n=5, trials=50)
    assert won.wins == 50
    blind = play_instance_game(NearestInstanceAdversary(problem), problem, null_encoder(), n=5, trials=400, seed=1)
    assert abs(blind.advantage) < 0.1


def test_games_are_reproducible(problem):
    a = play_instance_game(NearestInstanceAdversary(problem), problem, noise_encoder(1.0), n=5, trials=100, seed=9)
    b = play_instance_game(NearestInstanceAdversary(problem), problem, noise_encoder(1.0), n=5, trials=100, seed=9)
    assert a.wins == b.wins and a.transcript.guesses == b.transcript.guesses


def test_challenge_with_mismatched_labels(problem):
    e = np.eye(4)[0]
    adversary = FixedInstanceAdversary(InstanceChallenge(problem.concept(0), e, -e), lambda u: 0)
    with pytest.raises(GameProtocolError):
        play_instance_game(adversary, problem, identity_encoder(), n=3, trials=1)


# --- hybrid distinguisher ------------------------------------------------------------

def test_hybrid_distinguisher(problem):
    cfg = Theorem3Config.create(n=20, trials=20, test_size=200)
    report = run_theorem3_adversary(problem, identity_encoder(), cfg=cfg)
    assert report.endpoint.magnitude >= 0.8
    assert report.triangle_holds and report.telescoping_holds
    assert report.direct is not None and report.summary()["direct_gap"] != ""
    assert len(report.hybrid) == cfg.n + 1
    assert len(report.hybrid_steps) == cfg.n
    assert report.hybrid[0] == report.probabilities["c1"].p
    assert report.hybrid[-1] == report.probabilities["a"].p
    assert report.rows()[0]["quantity"] == "endpoint"


def _chain_report(direct):
    counts = [100, 75, 50]
    steps = [DistinguishingGap(counts[i], counts[i + 1], 100) for i in range(2)]
    return Theorem3Report(
        n=2,
        probabilities={},
        endpoint=DistinguishingGap(100, 0, 100),
        decomposition={"c1_vs_a": DistinguishingGap(100, 50, 100)},
        hybrid=[c / 100 for c in counts],
        hybrid_steps=steps,
        delta=0.0,
        direct=direct,
    )


def test_telescoping_is_checked_against_a_direct_measurement():
    agreeing = _chain_report(DistinguishingGap(97, 50, 100))
    assert agreeing.telescoped == pytest.approx(0.5)
    assert agreeing.telescoping_holds
    # the chain still telescopes, but a fresh measurement sees no gap
    assert not _chain_report(DistinguishingGap(50, 50, 100)).telescoping_holds


def test_hybrid_distinguisher_needs_two_concepts(problem):
    with pytest.raises(ConfigError):
        run_theorem3_adversary(problem, identity_encoder(), cfg=Theorem3Config.create(concept_b=0))


# --- rich-class attack ---------------------------------------------------------------

def test_richness():
    assert analytic_richness(4, 0.5) == pytest.approx(11 / 16)
    report = richness_check(orthogonal_problem(32), 0.25, seed=1)
    assert report.passed
    assert report.analytic > 0.99
    assert not richness_check(orthogonal_problem(4), 0.5).passed


def test_rich_class_attack_on_identity():
    problem = orthogonal_problem(32)
    report = run_theorem4_adversary(problem, identity_encoder(),
                                    cfg=Theorem4Config.create(n=400, gamma=0.25, trials=200))
    assert report.richness.passed
    assert report.game.gap >= 0.8
    assert report.meets_bound


def test_rich_class_attack_on_null_encoder():
    problem = orthogonal_problem(8)
    report = run_theorem4_adversary(problem, null_encoder(), cfg=Theorem4Config.create(n=50, trials=400))
    assert abs(report.game.gap) < 0.2


def test_training_budget():
    with pytest.raises(TrainingBudgetError):
        run_theorem4_adversary(orthogonal_problem(4), null_encoder(),
                               cfg=Theorem4Config.create(n=20, trials=10, target_error=0.0, max_attempts=2))


# --- single-concept dichotomy ----------------------------------------------------------

def test_booster_votes():
    assert booster_votes(0.1) == 4606
    assert Theorem5Config.create(tau=0.1).votes == 4606


def test_label_revealing_encoder_is_boosted(problem):
    cfg = Theorem5Config.create(m=50, tau=0.1, candidate_budget=50, accuracy_size=100)
    report = run_theorem5_dichotomy(problem, label_encoder(problem.concept(0)), cfg=cfg)
    assert report.arm == "boosted-accuracy"
    assert report.boosted_accuracy >= 0.9
    assert report.holds
    assert report.row()["arm"] == "boosted-accuracy"


def test_planted_distinguishing_pair_beats_chance(problem):
    concept = problem.concept(0)
    h = Hypothesis(weights=np.eye(4)[0], bias=0.0)
    # x0 sits on the boundary, x1 far inside the positive side
    x0 = np.array([1e-3, 0.5, -0.2, 0.1])
    x1 = np.array([3.0, -0.4, 0.3, 0.0])
    adversary = FixedInstanceAdversary(InstanceChallenge(concept, x0, x1), lambda u: h.predict(u)[0] == 1)
    est = play_instance_game(adversary, problem, noise_encoder(1.0), n=10, trials=1000, seed=4)
    assert est.gap > 0.35
    assert est.gap_interval[0] > 0.0


def test_noisy_encoder_takes_the_attack_arm(problem):
    cfg = Theorem5Config.create(m=200, tau=0.1, trials=1000, accuracy_size=50, candidate_budget=400, seed=2)
    report = run_theorem5_dichotomy(problem, noise_encoder(1.0), cfg=cfg)
    assert report.arm == "attack"
    assert report.pair is not None
    assert report.attack.gap_interval[0] > 0.0
    assert report.holds
    assert report.row()["arm"] == "attack"
