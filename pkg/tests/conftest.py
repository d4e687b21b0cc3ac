import numpy as np
import pytest

from encoder import EncoderConfig, encode_dataset, generate_public_pool, generate_synthetic

SHAPE = (8, 8, 1)
NUM_PRIVATE = 6
NUM_CLASSES = 3
POOL_SIZE = 10
PLANTED_SEED = 3000


@pytest.fixture
def private_set():
    return generate_synthetic(NUM_PRIVATE, SHAPE, NUM_CLASSES, seed=7)


@pytest.fixture
def public_pool():
    return generate_public_pool(POOL_SIZE, SHAPE, seed=7)


@pytest.fixture
def encoder_config():
    return EncoderConfig.create(k=4, epochs=4, public_pool_size=POOL_SIZE, seed=PLANTED_SEED)


@pytest.fixture
def encoded(private_set, public_pool, encoder_config):
    """Sign-flipped k=4 dataset with its ground truth attached."""
    return encode_dataset(private_set, public_pool, encoder_config)


@pytest.fixture
def plain_pair_dataset(private_set):
    """k=2, no sign flip: every encoding is a two-image mix."""
    cfg = EncoderConfig.create(k=2, epochs=6, sign_flip=False, seed=11)
    return encode_dataset(private_set, None, cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
