import numpy as np
import pytest
import scipy.sparse as sp
import torch

from core.errors import ConfigError, LabelError, RecoveryError, ShapeError
from core.types import EncodedImage
from encoder import xmix, ymix
from stages.attack_config import GdConfig
from stages.recovery_stage import (
    MixSystem,
    abs_mean_baseline,
    abs_objective,
    abs_objective_grad,
    build_mix_system,
    mix_objective,
    recover_lambdas,
    single_encoding_attack,
    solve_abs_gd,
    solve_least_squares,
    truth_sign_oracle,
)


def _truth_system(ds, box=(0.0, 1.0)):
    pairs = np.array([r.private_indices for r in ds.ground_truth])
    lambdas = np.array([r.lambdas[:2] for r in ds.ground_truth])
    return build_mix_system(pairs, lambdas, ds.flat(), ds.params.num_private, box)


def test_lambdas_from_distinct_classes():
    rec = recover_lambdas([0.0, 0.123456789, 0.0, 0.2])
    assert rec.classes == (1, 3)
    assert rec.lambdas == pytest.approx((0.123456789, 0.2), abs=1e-9)


def test_lambdas_from_same_class():
    rec = recover_lambdas([0.0, 0.6, 0.0])
    assert rec.lambdas == (0.3, 0.3)
    assert rec.classes == (1, 1)


@pytest.mark.parametrize("label", [[0.0, 0.0, 0.0], [0.2, 0.2, 0.2]])
def test_lambdas_reject_bad_labels(label):
    with pytest.raises(LabelError):
        recover_lambdas(label)


def test_lambdas_match_encoder_truth(encoded):
    for z, rec in zip(encoded.labels, encoded.ground_truth):
        got = sorted(recover_lambdas(z).lambdas)
        if np.count_nonzero(z) == 2:
            assert got == pytest.approx(sorted(rec.lambdas[:2]), abs=1e-9)
        else:
            half = (rec.lambdas[0] + rec.lambdas[1]) / 2
            assert got == pytest.approx([half, half], abs=1e-9)


def test_mix_system_validation():
    B = np.zeros((2, 4))
    with pytest.raises(ConfigError):
        MixSystem(sp.csr_matrix(np.array([[0.5, 0.0, 0.0], [0.2, 0.3, 0.0]])), B)
    with pytest.raises(ConfigError):
        MixSystem(sp.csr_matrix(np.array([[0.8, 0.4, 0.0], [0.2, 0.3, 0.0]])), B)
    with pytest.raises(ShapeError):
        MixSystem(sp.csr_matrix(np.array([[0.5, 0.5, 0.0]])), B)


def test_no_flip_pair_mixes_are_solved_exactly(plain_pair_dataset, private_set):
    system = _truth_system(plain_pair_dataset)
    originals = private_set.images.reshape(len(private_set), -1)
    assert mix_objective(system, originals) < 1e-9

    result = solve_least_squares(system, shape=plain_pair_dataset.params.shape)
    assert result.images.shape == private_set.images.shape
    assert np.max(np.abs(result.images - private_set.images)) < 1e-3
    assert result.objective < 1e-6


def test_baseline_is_clique_mean_of_abs(encoded):
    cliques = [[0, 1], [2]]
    base = abs_mean_baseline(cliques, encoded)
    flat = np.abs(encoded.flat())
    assert base.shape == (2, *encoded.params.shape)
    assert np.allclose(base[0].ravel(), np.clip((flat[0] + flat[1]) / 2, 0, 1))
    with pytest.raises(RecoveryError):
        abs_mean_baseline([[0], []], encoded)


def test_gradient_matches_finite_differences(rng):
    rows, cols = 12, 5
    dense = np.zeros((rows, cols))
    for r in range(rows):
        a, b = rng.choice(cols, size=2, replace=False)
        dense[r, [a, b]] = rng.dirichlet([1.0, 1.0, 1.0])[:2]
    M = torch.as_tensor(dense, dtype=torch.float64)
    absB = torch.as_tensor(rng.random((rows, 3)), dtype=torch.float64)
    A = torch.as_tensor(rng.uniform(0.2, 0.8, size=(cols, 3)), dtype=torch.float64)

    for l1 in (False, True):
        grad = abs_objective_grad(M, absB, A, l1)
        eps = 1e-6
        for i, j in [(0, 0), (2, 1), (4, 2)]:
            bump = torch.zeros_like(A)
            bump[i, j] = eps
            numeric = (abs_objective(M, absB, A + bump, l1) - abs_objective(M, absB, A - bump, l1)) / (2 * eps)
            assert float(grad[i, j]) == pytest.approx(float(numeric), rel=1e-4, abs=1e-8)


def test_gradient_descent_never_increases_objective(encoded, private_set):
    system = _truth_system(encoded)
    init = abs_mean_baseline([[e for e, r in enumerate(encoded.ground_truth) if s in r.private_indices]
                              for s in range(encoded.params.num_private)], np.abs(encoded.flat()))
    result = solve_abs_gd(system, init, GdConfig.create(max_steps=200), shape=encoded.params.shape)
    trace = result.objective_trace
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    assert result.images.shape == private_set.images.shape
    assert result.images.min() >= 0.0 and result.images.max() <= 1.0
    assert result.method == "abs_gd"


def test_signed_box(encoded):
    system = _truth_system(encoded, box=(-1.0, 1.0))
    init = np.full((encoded.params.num_private, encoded.params.pixel_count), -0.5)
    result = solve_abs_gd(system, init, GdConfig.create(max_steps=20, l1=True))
    assert result.method == "abs_gd_l1"
    assert result.images.min() >= -1.0


def test_single_encoding_attack_peels_publics(encoded, public_pool):
    first = encoded.ground_truth[0]
    e = encoded.encoding(0)
    out = single_encoding_attack(e, public_pool.images, encoded.params.k, truth_sign_oracle(first.sigma))
    assert len(out.public_indices) == encoded.params.k - 2
    assert len(set(out.public_indices)) == len(out.public_indices)
    assert out.image.shape == encoded.params.shape
    assert out.image.min() >= 0.0 and out.image.max() <= 1.0


def test_single_encoding_attack_finds_both_planted_publics(private_set, public_pool, rng):
    lambdas = np.full(4, 0.25)
    both = 0
    for _ in range(50):
        a, b = rng.choice(len(private_set), size=2, replace=False)
        publics = rng.choice(len(public_pool), size=2, replace=False)
        sigma = rng.choice([-1, 1], size=private_set.images[0].size)
        pixels = xmix((private_set.images[a], private_set.images[b]), public_pool.images[publics], lambdas, sigma)
        label = ymix(private_set.labels[a], private_set.labels[b], lambdas[:2])
        out = single_encoding_attack(EncodedImage(pixels, label), public_pool.images, 4, truth_sign_oracle(sigma))
        both += set(out.public_indices) == set(publics.tolist())
    assert both > 25


def test_truth_oracle_demasks(encoded):
    first = encoded.ground_truth[0]
    demasked = truth_sign_oracle(first.sigma)(encoded.encoding(0))
    assert (demasked >= -1e-9).all()


def test_single_encoding_attack_validation(encoded, public_pool):
    e = EncodedImage(encoded.pixels[0], encoded.labels[0])
    with pytest.raises(ConfigError):
        single_encoding_attack(e, public_pool.images, 1)
    with pytest.raises(ConfigError):
        single_encoding_attack(e, public_pool.images[:1], 4)
