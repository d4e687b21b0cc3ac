import itertools

import numpy as np
import pytest

from core.errors import ConfigError
from core.flow import quantize_costs
from stages.assignment_stage import AssignmentMap, assignment_accuracy, pair_lambdas, solve_assignment
from tools.reporting import read_rows


def _check_degrees(amap: AssignmentMap, num_sets: int, epochs: int):
    assert amap.pairs.shape[1] == 2
    assert np.all(amap.pairs[:, 0] != amap.pairs[:, 1])
    counts = np.bincount(amap.pairs.ravel(), minlength=num_sets)
    assert counts.tolist() == [2 * epochs] * num_sets


@pytest.mark.parametrize("trial", range(25))
def test_degree_constraints_on_random_instances(trial):
    rng = np.random.default_rng(trial)
    num_sets, epochs = int(rng.integers(3, 7)), int(rng.integers(1, 4))
    set_sim = rng.random((num_sets, num_sets * epochs))
    _check_degrees(solve_assignment(set_sim, epochs, num_sets, num_sets * epochs), num_sets, epochs)


@pytest.mark.slow
def test_degree_constraints_on_a_thousand_random_instances():
    for trial in range(1000):
        rng = np.random.default_rng([trial, 1000])
        num_sets, epochs = int(rng.integers(3, 9)), int(rng.integers(1, 5))
        set_sim = rng.random((num_sets, num_sets * epochs))
        _check_degrees(solve_assignment(set_sim, epochs, num_sets, num_sets * epochs), num_sets, epochs)


def _brute_force_cost(set_sim: np.ndarray, epochs: int) -> int:
    num_sets, num_encodings = set_sim.shape
    costs = quantize_costs(set_sim)
    choices = list(itertools.combinations(range(num_sets), 2))
    best = None
    for combo in itertools.product(choices, repeat=num_encodings):
        counts = np.bincount(np.ravel(combo), minlength=num_sets)
        if (counts != 2 * epochs).any():
            continue
        total = sum(costs[a, e] + costs[b, e] for e, (a, b) in enumerate(combo))
        best = total if best is None else min(best, total)
    return best


@pytest.mark.parametrize("num_sets,epochs", [(3, 1), (4, 1), (3, 2)])
@pytest.mark.parametrize("seed", range(4))
def test_flow_matches_brute_force(num_sets, epochs, seed):
    rng = np.random.default_rng([seed, num_sets, epochs])
    set_sim = rng.random((num_sets, num_sets * epochs))
    amap = solve_assignment(set_sim, epochs, num_sets, num_sets * epochs)
    costs = quantize_costs(set_sim)
    got = sum(costs[a, e] + costs[b, e] for e, (a, b) in enumerate(amap.pairs))
    assert got == _brute_force_cost(set_sim, epochs)


def test_planted_pairs_are_recovered(encoded):
    p = encoded.params
    truth = np.array([r.private_indices for r in encoded.ground_truth])
    set_sim = np.full((p.num_private, len(encoded)), 0.1)
    for e, (a, b) in enumerate(truth):
        set_sim[a, e] = set_sim[b, e] = 0.9
    amap = solve_assignment(set_sim, p.epochs, p.num_private, len(encoded))
    # equal scores: lower set index first
    assert np.array_equal(amap.pairs, np.sort(truth, axis=1))
    accuracy, mapping = assignment_accuracy(amap, encoded.ground_truth, p.num_private)
    assert accuracy == 1.0
    assert mapping.tolist() == list(range(p.num_private))


def test_pairs_ordered_by_set_score():
    set_sim = np.array([[0.2, 0.9, 0.9], [0.8, 0.1, 0.8], [0.9, 0.8, 0.1]])
    amap = solve_assignment(set_sim, 1, 3, 3)
    for e, (a, b) in enumerate(amap.pairs):
        assert set_sim[a, e] >= set_sim[b, e]


def test_assignment_shape_checks():
    with pytest.raises(ConfigError):
        solve_assignment(np.zeros((3, 4)), 1, 3, 3)
    with pytest.raises(ConfigError):
        solve_assignment(np.zeros((3, 4)), 1, 3, 4)


def test_pair_lambdas_picks_better_fit(rng):
    mean_a, mean_b = rng.random(16), rng.random(16)
    abs_e = 0.7 * mean_a + 0.3 * mean_b
    assert pair_lambdas(abs_e, (0.3, 0.7), (mean_a, mean_b), (0.5, 0.5)) == (0.7, 0.3)
    assert pair_lambdas(abs_e, (0.7, 0.3), (mean_a, mean_b), (0.5, 0.5)) == (0.7, 0.3)


def test_pair_lambdas_tie_follows_set_score(rng):
    mean = rng.random(16)
    abs_e = 0.5 * mean
    assert pair_lambdas(abs_e, (0.2, 0.3), (mean, mean), (0.4, 0.6)) == (0.2, 0.3)
    assert pair_lambdas(abs_e, (0.2, 0.3), (mean, mean), (0.6, 0.4)) == (0.3, 0.2)


def test_assignment_csv(tmp_path):
    amap = AssignmentMap(np.array([[0, 1], [1, 2]]), np.array([[0.25, 0.5], [0.125, 0.375]]))
    rows = read_rows(amap.write_csv(tmp_path / "assignment.csv"))
    assert rows[1] == {"encoding_index": "1", "set_a": "1", "set_b": "2", "lambda_a": "0.125", "lambda_b": "0.375"}
