"""
Similarity Stage: pairwise and set-to-encoding similarity of encodings.

The default scorer is an abs-correlation statistic: take abs of each encoding
(which removes the sign mask), optionally box-blur with a 2x2 kernel, subtract
the mean and correlate. Negative correlations map to 0. Any object with the
``PairScorer`` methods can replace it, for instance a learned model or the
ground-truth oracle used in tests.
"""

from typing import List, Optional, Protocol, Sequence

import numpy as np
from langchain_core.messages import AIMessage
import logging as log

from core.errors import ConfigError, ShapeError
from core.types import EncodedDataset, MixRecord
from stages.base import pipeline_stage

CHUNK = 1024


def box_blur(stack: np.ndarray) -> np.ndarray:
    """2x2 mean over valid positions; (n, H, W, C) -> (n, H-1, W-1, C)."""
    if stack.shape[1] < 2 or stack.shape[2] < 2:
        return stack
    return 0.25 * (stack[:, :-1, :-1] + stack[:, 1:, :-1] + stack[:, :-1, 1:] + stack[:, 1:, 1:])


def abs_features(stack: np.ndarray, blur: bool = True) -> np.ndarray:
    """abs -> optional blur -> flatten, as float64 rows."""
    arr = np.abs(np.asarray(stack, dtype=np.float64))
    if arr.ndim == 3:
        arr = arr[None]
    if blur:
        arr = box_blur(arr)
    return arr.reshape(arr.shape[0], -1)


def normalize_rows(features: np.ndarray) -> np.ndarray:
    """Mean-subtract and scale each row to unit norm; constant rows become 0."""
    centered = features - features.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1, keepdims=True)
    out = np.zeros_like(centered)
    nonzero = norms[:, 0] > 1e-12
    out[nonzero] = centered[nonzero] / norms[nonzero]
    return out


class PairScorer(Protocol):
    def pair(self, a: np.ndarray, b: np.ndarray) -> float:
        ...

    def graph(self, ds: EncodedDataset) -> np.ndarray:
        ...


class CorrelationSimilarity:
    def __init__(self, blur: bool = True):
        self.blur = blur

    def pair(self, a: np.ndarray, b: np.ndarray) -> float:
        a, b = np.asarray(a), np.asarray(b)
        if a.shape != b.shape:
            raise ShapeError(f"cannot compare encodings of shape {a.shape} and {b.shape}")
        u = normalize_rows(abs_features(np.stack([a, b]), self.blur))
        return float(np.clip(u[0] @ u[1], 0.0, 1.0))

    def graph(self, ds: EncodedDataset) -> np.ndarray:
        u = normalize_rows(abs_features(ds.pixels, self.blur))
        n = u.shape[0]
        weights = np.empty((n, n), dtype=np.float32)
        for lo in range(0, n, CHUNK):
            weights[lo:lo + CHUNK] = u[lo:lo + CHUNK] @ u.T
        return finish_graph(weights)


class OracleSimilarity:
    """Weight 1 iff two encodings share a private source; built from truth records."""

    def __init__(self, records: Sequence[MixRecord]):
        self.sources = np.array([r.private_indices for r in records], dtype=np.int64)

    def pair(self, a: int, b: int) -> float:
        return float(bool(set(self.sources[a]) & set(self.sources[b])))

    def graph(self, ds: EncodedDataset) -> np.ndarray:
        n = len(ds)
        if n != len(self.sources):
            raise ShapeError(f"oracle knows {len(self.sources)} encodings, dataset has {n}")
        num_private = int(self.sources.max()) + 1
        incidence = np.zeros((n, num_private), dtype=np.float32)
        incidence[np.arange(n), self.sources[:, 0]] = 1.0
        incidence[np.arange(n), self.sources[:, 1]] = 1.0
        return finish_graph((incidence @ incidence.T > 0).astype(np.float32))


def finish_graph(weights: np.ndarray) -> np.ndarray:
    """Symmetrize, clip to [0, 1] and zero the diagonal."""
    weights = 0.5 * (weights + weights.T)
    np.clip(weights, 0.0, 1.0, out=weights)
    np.fill_diagonal(weights, 0.0)
    return weights


def sim(e_i: np.ndarray, e_j: np.ndarray, blur: bool = True) -> float:
    return CorrelationSimilarity(blur).pair(e_i, e_j)


def build_similarity_graph(ds: EncodedDataset, scorer: Optional[PairScorer] = None) -> np.ndarray:
    scorer = scorer or CorrelationSimilarity()
    if len(ds) == 1:
        return np.zeros((1, 1), dtype=np.float32)
    return scorer.graph(ds)


def set_sim(e: np.ndarray, reps: Sequence[np.ndarray], blur: bool = True) -> float:
    """Correlation of abs(e) with the mean abs image of the representatives."""
    if len(reps) < 1:
        raise ConfigError("set similarity needs at least one representative")
    template = abs_features(np.stack(reps), blur).mean(axis=0, keepdims=True)
    u = normalize_rows(np.concatenate([abs_features(np.asarray(e)[None], blur), template]))
    return float(np.clip(u[0] @ u[1], 0.0, 1.0))


def choose_representatives(members: Sequence[int], count: int, seed: int, set_index: int) -> np.ndarray:
    members = np.asarray(sorted(members), dtype=np.int64)
    if len(members) <= count:
        return members
    rng = np.random.default_rng([seed, set_index])
    return np.sort(rng.choice(members, size=count, replace=False))


def build_set_similarity(ds: EncodedDataset, cliques: List[Sequence[int]], reps_per_set: int = 4,
                         seed: int = 0, blur: bool = True, scorer: str = "template",
                         graph: Optional[np.ndarray] = None) -> np.ndarray:
    """|cliques| x |E| set-to-encoding weights in [0, 1]."""
    if scorer == "mean_weight":
        if graph is None:
            raise ConfigError("mean_weight scorer needs the similarity graph")
        weights = np.stack([graph[:, list(members)].astype(np.float64).mean(axis=1) for members in cliques])
        return np.clip(weights, 0.0, 1.0)
    if scorer != "template":
        raise ConfigError(f"unknown set scorer '{scorer}'")

    features = abs_features(ds.pixels, blur)
    u = normalize_rows(features)
    templates = np.stack([
        features[choose_representatives(members, reps_per_set, seed, s)].mean(axis=0)
        for s, members in enumerate(cliques)
    ])
    return np.clip(normalize_rows(templates) @ u.T, 0.0, 1.0)


@pipeline_stage("similarity")
def similarity_node(state: dict) -> dict:
    ds = state["dataset"]
    cfg = state["config"]
    scorer = state.get("scorer") or CorrelationSimilarity(cfg.blur)
    log.info(f"Building similarity graph over {len(ds)} encodings")

    graph = build_similarity_graph(ds, scorer)
    state["similarity"] = graph
    pairs = max(len(graph) * (len(graph) - 1), 1)
    log.info(f"Similarity graph ready: mean weight {graph.sum(dtype=np.float64) / pairs:.4f}, "
             f"{np.count_nonzero(graph > 0.5) / pairs * 100:.1f}% of pairs above 0.5")

    state["messages"].append(AIMessage(content=f"Similarity graph built for {len(ds)} encodings"))
    return state
