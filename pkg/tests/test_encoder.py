import numpy as np
import pytest

from core.errors import ConfigError, LabelError, ShapeError
from core.mt19937 import mt_sample, mt_seed, mt_shuffle
from encoder import EncoderConfig, encode_dataset, encoder_config_for, generate_synthetic, xmix, ymix
from encoder.instahide import draw_lambdas
from tools.metrics import ssim_matrix
from conftest import NUM_CLASSES, NUM_PRIVATE, PLANTED_SEED, POOL_SIZE, SHAPE


def test_encoding_is_deterministic(private_set, public_pool, encoder_config, encoded):
    again = encode_dataset(private_set, public_pool, encoder_config)
    assert again == encoded
    assert np.array_equal(again.pixels, encoded.pixels)


def test_seed_changes_everything(private_set, public_pool, encoder_config, encoded):
    other = encode_dataset(private_set, public_pool, encoder_config.replace(seed=PLANTED_SEED + 1))
    assert not np.array_equal(other.pixels, encoded.pixels)


def test_every_private_image_used_twice_per_epoch(encoded):
    p = encoded.params
    assert len(encoded) == p.epochs * p.num_private
    for epoch in range(p.epochs):
        block = encoded.ground_truth[epoch * p.num_private:(epoch + 1) * p.num_private]
        counts = np.bincount(np.ravel([r.private_indices for r in block]), minlength=p.num_private)
        assert counts.tolist() == [2] * p.num_private
        assert all(r.epoch == epoch for r in block)
        assert all(a != b for a, b in (r.private_indices for r in block))


def test_draw_order_of_first_record(encoded):
    k, d = encoded.params.k, encoded.params.pixel_count
    state = mt_seed(PLANTED_SEED)
    p1 = mt_shuffle(state, NUM_PRIVATE)
    p2 = mt_shuffle(state, NUM_PRIVATE)
    while any(a == b for a, b in zip(p1, p2)):
        p2 = mt_shuffle(state, NUM_PRIVATE)
    cuts = np.sort([state.next_f64() for _ in range(k - 1)])
    lambdas = np.diff(np.concatenate(([0.0], cuts, [1.0])))
    publics = tuple(mt_sample(state, POOL_SIZE, k - 2))
    sigma = np.where(state.next_u32_array(d) < 2 ** 31, 1, -1)

    first = encoded.ground_truth[0]
    assert first.private_indices == (p1[0], p2[0])
    assert np.array_equal(first.lambdas, lambdas)
    assert first.public_indices == publics
    assert np.array_equal(first.sigma, sigma)


def test_sign_flip_flag_does_not_shift_the_stream(private_set, public_pool, encoder_config, encoded):
    flat = encode_dataset(private_set, public_pool, encoder_config.replace(sign_flip=False))
    for a, b in zip(flat.ground_truth, encoded.ground_truth):
        assert a.private_indices == b.private_indices
        assert a.public_indices == b.public_indices
        assert np.array_equal(a.lambdas, b.lambdas)
        assert (a.sigma == 1).all()
    assert (flat.pixels >= 0).all()
    assert np.array_equal(np.abs(flat.pixels), np.abs(encoded.pixels))


def test_release_abs(private_set, public_pool, encoder_config, encoded):
    released = encode_dataset(private_set, public_pool, encoder_config.replace(release_abs=True))
    assert released.params.release_abs
    assert np.array_equal(released.pixels, np.abs(encoded.pixels))


def test_labels_carry_private_mass(encoded):
    for z, rec in zip(encoded.labels, encoded.ground_truth):
        assert z.sum() == pytest.approx(rec.lambdas[0] + rec.lambdas[1], abs=1e-12)


def test_labels_ignore_pixel_content(public_pool, encoder_config, encoded):
    # same class layout, different pictures
    other = generate_synthetic(NUM_PRIVATE, SHAPE, NUM_CLASSES, seed=99)
    swapped = encode_dataset(other, public_pool, encoder_config)
    assert np.array_equal(swapped.labels, encoded.labels)
    assert not np.array_equal(swapped.pixels, encoded.pixels)


def test_xmix_formula(rng):
    x1, x2, p1 = (rng.random((4, 4, 1)) for _ in range(3))
    sigma = rng.choice([-1, 1], size=16)
    lam = np.array([0.5, 0.3, 0.2])
    expected = (0.5 * x1 + 0.3 * x2 + 0.2 * p1) * sigma.reshape(4, 4, 1)
    assert np.allclose(xmix((x1, x2), [p1], lam, sigma), expected)


def test_xmix_validation(rng):
    x = rng.random((4, 4, 1))
    with pytest.raises(ConfigError):
        xmix((x, x), [], [0.6, 0.6], np.ones(16))
    with pytest.raises(ConfigError):
        xmix((x, x), [], [0.5, 0.5], np.zeros(16))
    with pytest.raises(ShapeError):
        xmix((x,), [], [1.0], np.ones(16))


def test_ymix():
    a, b = np.eye(3)[0], np.eye(3)[2]
    assert np.allclose(ymix(a, b, (0.2, 0.3)), [0.2, 0.0, 0.3])
    assert np.allclose(ymix(a, a, (0.2, 0.3)), [0.5, 0.0, 0.0])
    with pytest.raises(LabelError):
        ymix([0.5, 0.5, 0.0], b, (0.2, 0.3))


def test_pool_must_cover_mix():
    with pytest.raises(ConfigError):
        EncoderConfig.create(k=4, public_pool_size=1)


def test_missing_pool_is_rejected(private_set):
    with pytest.raises(ConfigError):
        encode_dataset(private_set, None, EncoderConfig.create(k=3, public_pool_size=5))


def test_config_from_header(encoded):
    cfg = encoder_config_for(encoded.params, seed=PLANTED_SEED)
    assert cfg.k == 4 and cfg.epochs == 4 and cfg.public_pool_size == POOL_SIZE


def test_synthetic_generator():
    priv = generate_synthetic(9, SHAPE, 3, seed=1)
    assert priv.images.shape == (9, *SHAPE)
    assert priv.images.min() >= 0.0 and priv.images.max() <= 1.0
    assert priv.classes.tolist() == [0, 1, 2] * 3
    assert np.array_equal(generate_synthetic(9, SHAPE, 3, seed=1).images, priv.images)
    with pytest.raises(ConfigError):
        generate_synthetic(2, SHAPE, 3, seed=1)


class _ScriptedStream:
    def __init__(self, values):
        self.values = list(values)

    def next_f64(self):
        return self.values.pop(0)


def test_degenerate_weight_cuts_are_redrawn():
    # zero cut, then a repeated cut, then a usable set
    stream = _ScriptedStream([0.0, 0.5, 0.25, 0.5, 0.5, 0.2, 0.7, 0.4, 0.1])
    lam = draw_lambdas(stream, 4)
    assert stream.values == []
    assert (lam > 0).all()
    assert np.allclose(lam, [0.1, 0.3, 0.3, 0.3])


def test_pair_weights_redraw_a_zero_cut():
    stream = _ScriptedStream([0.0, 0.0, 0.75])
    assert np.allclose(draw_lambdas(stream, 2), [0.75, 0.25])


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_synthetic_images_are_mutually_dissimilar(seed):
    images = generate_synthetic(40, (16, 16, 1), 10, seed=seed).images
    scores = ssim_matrix(images, images)
    off_diagonal = scores[~np.eye(len(images), dtype=bool)]
    assert off_diagonal.mean() < 0.3
    assert np.allclose(np.diag(scores), 1.0)
