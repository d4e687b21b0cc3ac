import struct

import numpy as np
import pytest

from core.dataset_io import (
    read_dataset,
    read_images,
    read_matrix,
    read_truth,
    truth_path_for,
    write_dataset,
    write_images,
    write_matrix,
    write_truth,
)
from core.errors import DatasetParseError


def test_dataset_round_trip_keeps_truth_in_sidecar(encoded, tmp_path):
    path = write_dataset(encoded, tmp_path / "data.ihed")
    sidecar = truth_path_for(path)
    assert sidecar.name == "data.truth"
    assert sidecar.exists()

    loaded = read_dataset(path)
    assert loaded.ground_truth is None
    assert loaded == encoded.blind()
    assert loaded.pixels.dtype == np.float32

    truth = read_truth(sidecar)
    assert truth.records == encoded.ground_truth
    assert truth.originals is None


def test_pair_mix_truth_round_trip(plain_pair_dataset, tmp_path):
    path = write_dataset(plain_pair_dataset, tmp_path / "pairs.ihed")
    truth = read_truth(truth_path_for(path))
    assert truth.records == plain_pair_dataset.ground_truth
    assert all(r.public_indices == () for r in truth.records)
    assert read_dataset(path) == plain_pair_dataset.blind()


def test_blind_dataset_writes_no_sidecar(encoded, tmp_path):
    path = write_dataset(encoded.blind(), tmp_path / "blind.ihed")
    assert not truth_path_for(path).exists()


def test_truth_carries_originals_and_seed(encoded, private_set, tmp_path):
    path = write_truth(tmp_path / "x.truth", encoded.ground_truth, encoded.params,
                       originals=private_set.images, private_labels=private_set.labels, seed=3000)
    truth = read_truth(path)
    assert truth.seed == 3000
    assert np.array_equal(truth.originals, private_set.images)
    assert np.array_equal(truth.private_labels, private_set.labels)


def test_images_and_matrices(tmp_path, private_set):
    path = write_images(tmp_path / "pool.ihed", private_set.images, kind="public")
    images, labels = read_images(path, kind="public")
    assert np.array_equal(images, private_set.images)
    assert labels is None

    weights = np.eye(3, dtype=np.float32)
    assert np.array_equal(read_matrix(write_matrix(tmp_path / "g.ihed", weights)), weights)


@pytest.fixture
def dataset_bytes(encoded, tmp_path):
    return write_dataset(encoded.blind(), tmp_path / "good.ihed").read_bytes()


def _parse_field(tmp_path, blob):
    bad = tmp_path / "bad.ihed"
    bad.write_bytes(blob)
    with pytest.raises(DatasetParseError) as info:
        read_dataset(bad)
    return info.value.field


def test_bad_magic(dataset_bytes, tmp_path):
    assert _parse_field(tmp_path, b"XXXX" + dataset_bytes[4:]) == "magic"


def test_too_short(tmp_path):
    assert _parse_field(tmp_path, b"IHED") == "magic"


def test_bad_version(dataset_bytes, tmp_path):
    blob = dataset_bytes[:4] + struct.pack("<I", 99) + dataset_bytes[8:]
    assert _parse_field(tmp_path, blob) == "version"


def test_header_past_end(dataset_bytes, tmp_path):
    blob = dataset_bytes[:8] + struct.pack("<I", 10 ** 6) + dataset_bytes[12:]
    assert _parse_field(tmp_path, blob) == "header"


def test_truncated_tensor(dataset_bytes, tmp_path):
    assert _parse_field(tmp_path, dataset_bytes[:-10]) == "tensor.labels"


def test_trailing_bytes(dataset_bytes, tmp_path):
    assert _parse_field(tmp_path, dataset_bytes + b"\x00") == "trailer"


def test_wrong_kind(tmp_path, private_set):
    path = write_images(tmp_path / "imgs.ihed", private_set.images)
    with pytest.raises(DatasetParseError) as info:
        read_dataset(path)
    assert info.value.field == "kind"
