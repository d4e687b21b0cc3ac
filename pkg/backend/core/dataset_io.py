"""
IHED binary container: encoded datasets, truth sidecars, image sets and matrices.

Layout (all integers little-endian):

    b"IHED" | uint32 version | uint32 header_len | header (UTF-8 JSON text)
    then, per tensor listed in the header: uint64 byte_len | raw bytes

The header names each tensor's dtype and shape, so a reader can check the
declared byte length against the shape before touching the data. Pixel
tensors of encodings are 32-bit little-endian floats.

Truth sidecars (``.truth``) hold the MixRecords and, for synthetic runs, the
original private images. Attacks only ever read the ``.ihed`` file.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.errors import DatasetParseError
from core.types import DatasetParams, EncodedDataset, MixRecord

MAGIC = b"IHED"
VERSION = 1
TRUTH_SUFFIX = ".truth"
ALLOWED_DTYPES = {"<f4", "<f8", "<i8", "|i1"}


def write_tensors(path, kind: str, meta: dict, tensors: Dict[str, Tuple[np.ndarray, str]]) -> Path:
    path = Path(path)
    specs = []
    payload = []
    for name, (array, dtype) in tensors.items():
        arr = np.ascontiguousarray(np.asarray(array).astype(np.dtype(dtype), copy=False))
        specs.append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
        payload.append(arr.tobytes())
    header = json.dumps({"kind": kind, "meta": meta, "tensors": specs}, sort_keys=True).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header)))
        fh.write(header)
        for blob in payload:
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)
    return path


def read_tensors(path, kind: Optional[str] = None) -> Tuple[dict, Dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise DatasetParseError("magic", f"file is {len(data)} bytes, too short for a header")
    if data[:4] != MAGIC:
        raise DatasetParseError("magic", f"expected {MAGIC!r}, found {data[:4]!r}")
    version, header_len = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise DatasetParseError("version", f"unsupported version {version}")
    start, end = 12, 12 + header_len
    if end > len(data):
        raise DatasetParseError("header", "header runs past end of file")
    try:
        header = json.loads(data[start:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DatasetParseError("header", f"not valid JSON text: {e}") from e
    if not isinstance(header, dict) or not isinstance(header.get("tensors"), list):
        raise DatasetParseError("header", "missing tensor list")
    if kind is not None and header.get("kind") != kind:
        raise DatasetParseError("kind", f"expected '{kind}', found '{header.get('kind')}'")

    offset = end
    tensors = {}
    for spec in header["tensors"]:
        name = spec.get("name", "?")
        field = f"tensor.{name}"
        dtype_str = spec.get("dtype")
        if dtype_str not in ALLOWED_DTYPES:
            raise DatasetParseError(field, f"unsupported dtype {dtype_str!r}")
        shape = spec.get("shape")
        if not isinstance(shape, list) or any((not isinstance(s, int)) or s < 0 for s in shape):
            raise DatasetParseError(field, f"invalid shape {shape!r}")
        dtype = np.dtype(dtype_str)
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        expected = count * dtype.itemsize
        if offset + 8 > len(data):
            raise DatasetParseError(field, "truncated before byte-length prefix")
        (declared,) = struct.unpack_from("<Q", data, offset)
        offset += 8
        if declared != expected:
            raise DatasetParseError(field, f"declared byte length {declared} but shape {shape} needs {expected}")
        if offset + declared > len(data):
            raise DatasetParseError(field, f"truncated: {len(data) - offset} of {declared} bytes present")
        if count == 0:
            tensors[name] = np.zeros(shape, dtype=dtype)
        else:
            tensors[name] = np.frombuffer(data, dtype=dtype, count=count, offset=offset).reshape(shape).copy()
        offset += declared
    if offset != len(data):
        raise DatasetParseError("trailer", f"{len(data) - offset} unexpected trailing bytes")
    return header, tensors


def _require(header: dict, tensors: Dict[str, np.ndarray], names: List[str]) -> dict:
    for name in names:
        if name not in tensors:
            raise DatasetParseError(f"tensor.{name}", "missing")
    meta = header.get("meta")
    if not isinstance(meta, dict):
        raise DatasetParseError("meta", "missing metadata block")
    return meta


def truth_path_for(path) -> Path:
    return Path(path).with_suffix(TRUTH_SUFFIX)


def write_dataset(ds: EncodedDataset, path) -> Path:
    """Write the encodings; the truth sidecar (if any) goes next to it."""
    p = ds.params
    meta = {
        "k": p.k,
        "epochs": p.epochs,
        "num_private": p.num_private,
        "num_classes": p.num_classes,
        "shape": list(p.shape),
        "sign_flip": p.sign_flip,
        "public_pool_size": p.public_pool_size,
        "release_abs": p.release_abs,
    }
    out = write_tensors(path, "encoded_dataset", meta, {
        "pixels": (ds.pixels, "<f4"),
        "labels": (ds.labels, "<f8"),
    })
    if ds.ground_truth is not None:
        write_truth(truth_path_for(path), ds.ground_truth, p)
    return out


def read_dataset(path) -> EncodedDataset:
    """Read encodings only; never opens the truth sidecar."""
    header, tensors = read_tensors(path, kind="encoded_dataset")
    meta = _require(header, tensors, ["pixels", "labels"])
    try:
        params = DatasetParams(
            k=int(meta["k"]),
            epochs=int(meta["epochs"]),
            num_private=int(meta["num_private"]),
            num_classes=int(meta["num_classes"]),
            shape=tuple(int(s) for s in meta["shape"]),
            sign_flip=bool(meta.get("sign_flip", True)),
            public_pool_size=int(meta.get("public_pool_size", 0)),
            release_abs=bool(meta.get("release_abs", False)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetParseError("meta", f"bad dataset parameters: {e}") from e
    pixels, labels = tensors["pixels"], tensors["labels"]
    if pixels.ndim != 4 or tuple(pixels.shape[1:]) != params.shape:
        raise DatasetParseError("tensor.pixels", f"shape {pixels.shape} does not match declared {params.shape}")
    if labels.shape != (pixels.shape[0], params.num_classes):
        raise DatasetParseError("tensor.labels", f"shape {labels.shape} does not match encodings")
    return EncodedDataset(pixels, labels, params)


@dataclass
class TruthFile:
    records: List[MixRecord]
    originals: Optional[np.ndarray] = None
    private_labels: Optional[np.ndarray] = None
    seed: Optional[int] = None


def write_truth(path, records: List[MixRecord], params: DatasetParams,
                originals: Optional[np.ndarray] = None,
                private_labels: Optional[np.ndarray] = None,
                seed: Optional[int] = None) -> Path:
    k = params.k
    count = len(records)
    tensors = {
        "private_indices": (np.array([r.private_indices for r in records], dtype=np.int64).reshape(count, 2), "<i8"),
        "public_indices": (np.array([r.public_indices for r in records], dtype=np.int64).reshape(count, k - 2), "<i8"),
        "lambdas": (np.array([r.lambdas for r in records], dtype=np.float64).reshape(count, k), "<f8"),
        "sigma": (np.array([r.sigma for r in records], dtype=np.int8).reshape(count, params.pixel_count), "|i1"),
        "epochs": (np.array([r.epoch for r in records], dtype=np.int64), "<i8"),
    }
    if originals is not None:
        tensors["originals"] = (originals, "<f8")
    if private_labels is not None:
        tensors["private_labels"] = (private_labels, "<f8")
    meta = {"k": k, "epochs": params.epochs, "num_private": params.num_private, "seed": seed}
    return write_tensors(path, "truth", meta, tensors)


def read_truth(path) -> TruthFile:
    header, tensors = read_tensors(path, kind="truth")
    meta = _require(header, tensors, ["private_indices", "public_indices", "lambdas", "sigma", "epochs"])
    records = [
        MixRecord(
            private_indices=(int(p[0]), int(p[1])),
            public_indices=tuple(int(q) for q in pub),
            lambdas=lam,
            sigma=sig,
            epoch=int(ep),
        )
        for p, pub, lam, sig, ep in zip(
            tensors["private_indices"], tensors["public_indices"], tensors["lambdas"],
            tensors["sigma"], tensors["epochs"],
        )
    ]
    seed = meta.get("seed")
    return TruthFile(
        records=records,
        originals=tensors.get("originals"),
        private_labels=tensors.get("private_labels"),
        seed=None if seed is None else int(seed),
    )


def write_images(path, images: np.ndarray, labels: Optional[np.ndarray] = None, kind: str = "images") -> Path:
    tensors = {"images": (images, "<f8")}
    if labels is not None:
        tensors["labels"] = (labels, "<f8")
    return write_tensors(path, kind, {"count": int(images.shape[0])}, tensors)


def read_images(path, kind: str = "images") -> Tuple[np.ndarray, Optional[np.ndarray]]:
    header, tensors = read_tensors(path, kind=kind)
    _require(header, tensors, ["images"])
    return tensors["images"], tensors.get("labels")


def write_matrix(path, matrix: np.ndarray, kind: str = "similarity") -> Path:
    return write_tensors(path, kind, {"rows": int(matrix.shape[0])}, {"weights": (matrix, "<f4")})


def read_matrix(path, kind: str = "similarity") -> np.ndarray:
    header, tensors = read_tensors(path, kind=kind)
    _require(header, tensors, ["weights"])
    return tensors["weights"]
