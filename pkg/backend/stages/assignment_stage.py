"""
Assignment Stage: route every encoding to exactly two source sets with one
min-cost flow, then decide which recovered weight belongs to which set.

Network: source -> set (capacity 2N), set -> encoding (capacity 1, cost
round(1e6 * (1 - setSim))), encoding -> sink (capacity 2). Supply 2|E|
saturates every arc out of the source when |E| = N * |X|.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from langchain_core.messages import AIMessage
import logging as log

from core.errors import ConfigError, InfeasibleFlowError
from core.flow import quantize_costs, solve_flow
from core.types import MixRecord
from stages.base import pipeline_stage
from stages.recovery_stage import abs_mean_baseline, recover_lambdas
from stages.similarity_stage import build_set_similarity
from tools.metrics import best_matching

TIE_TOL = 1e-12


@dataclass
class AssignmentMap:
    """Per-encoding set pair (higher set score first) and the paired weights."""

    pairs: np.ndarray
    lambdas: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.pairs)

    def members(self, num_sets: int) -> List[np.ndarray]:
        return [np.flatnonzero((self.pairs == s).any(axis=1)) for s in range(num_sets)]

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lambdas = self.lambdas if self.lambdas is not None else np.full(self.pairs.shape, np.nan)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["encoding_index", "set_a", "set_b", "lambda_a", "lambda_b"])
            for i, ((a, b), (la, lb)) in enumerate(zip(self.pairs, lambdas)):
                writer.writerow([i, int(a), int(b), f"{la:.12g}", f"{lb:.12g}"])
        return path


def solve_assignment(set_sim: np.ndarray, epochs: int, num_sets: int, num_encodings: int) -> AssignmentMap:
    if set_sim.shape != (num_sets, num_encodings):
        raise ConfigError(f"set similarity has shape {set_sim.shape}, expected ({num_sets}, {num_encodings})")
    if num_encodings != epochs * num_sets:
        raise ConfigError(f"|E|={num_encodings} must equal N*|X|={epochs * num_sets}")

    source, sink = 0, 1 + num_sets + num_encodings
    set_nodes = 1 + np.arange(num_sets)
    enc_nodes = 1 + num_sets + np.arange(num_encodings)

    grid_s, grid_e = np.meshgrid(np.arange(num_sets), np.arange(num_encodings), indexing="ij")
    start = np.concatenate([np.full(num_sets, source), set_nodes[grid_s.ravel()], enc_nodes])
    end = np.concatenate([set_nodes, enc_nodes[grid_e.ravel()], np.full(num_encodings, sink)])
    capacity = np.concatenate([
        np.full(num_sets, 2 * epochs),
        np.ones(num_sets * num_encodings, dtype=np.int64),
        np.full(num_encodings, 2),
    ])
    cost = np.concatenate([
        np.zeros(num_sets, dtype=np.int64),
        quantize_costs(set_sim.ravel()),
        np.zeros(num_encodings, dtype=np.int64),
    ])
    supplies = np.zeros(sink + 1, dtype=np.int64)
    supplies[source] = 2 * num_encodings
    supplies[sink] = -2 * num_encodings

    sol = solve_flow(start, end, capacity, cost, supplies)
    middle = sol.flows[num_sets:num_sets + num_sets * num_encodings].reshape(num_sets, num_encodings)
    degree = middle.sum(axis=0)
    if (degree != 2).any():
        raise InfeasibleFlowError("flow did not give every encoding two sets",
                                  diagnostics={"bad_encodings": np.flatnonzero(degree != 2).tolist()[:20]})

    pairs = np.empty((num_encodings, 2), dtype=np.int64)
    for e in range(num_encodings):
        chosen = np.flatnonzero(middle[:, e])
        # higher set score first, lower index on ties
        order = sorted(chosen, key=lambda s: (-set_sim[s, e], s))
        pairs[e] = order
    log.info(f"Min-cost flow solved: cost {sol.cost}, {num_encodings} encodings routed")
    return AssignmentMap(pairs)


def _centered_ssr(residual: np.ndarray) -> float:
    centered = residual - residual.mean()
    return float(centered @ centered)


def pair_lambdas(abs_e: np.ndarray, lambdas: Sequence[float], abs_means: Tuple[np.ndarray, np.ndarray],
                 set_scores: Tuple[float, float]) -> Tuple[float, float]:
    """
    Order the unordered weight pair for sets (a, b).

    Both orderings are scored against abs(e) ~ la*mean_a + lb*mean_b + const;
    the smaller residual wins. On a tie the larger weight goes to the set with
    the higher set score (set a when those tie too).
    """
    target = np.asarray(abs_e, dtype=np.float64).ravel()
    mean_a = np.asarray(abs_means[0], dtype=np.float64).ravel()
    mean_b = np.asarray(abs_means[1], dtype=np.float64).ravel()
    l1, l2 = float(lambdas[0]), float(lambdas[1])

    keep = _centered_ssr(target - l1 * mean_a - l2 * mean_b)
    swap = _centered_ssr(target - l2 * mean_a - l1 * mean_b)
    if abs(keep - swap) <= TIE_TOL * max(1.0, keep, swap):
        hi, lo = max(l1, l2), min(l1, l2)
        return (hi, lo) if set_scores[0] >= set_scores[1] else (lo, hi)
    return (l1, l2) if keep < swap else (l2, l1)


def pair_all_lambdas(abs_pixels: np.ndarray, amap: AssignmentMap, unordered: np.ndarray,
                     abs_means: np.ndarray, set_sim: np.ndarray) -> np.ndarray:
    paired = np.empty((len(amap), 2), dtype=np.float64)
    for e, (a, b) in enumerate(amap.pairs):
        paired[e] = pair_lambdas(abs_pixels[e], unordered[e], (abs_means[a], abs_means[b]),
                                 (set_sim[a, e], set_sim[b, e]))
    return paired


def set_to_source_mapping(amap: AssignmentMap, records: Sequence[MixRecord], num_sets: int) -> np.ndarray:
    """Match recovered sets to private indices by maximum encoding overlap."""
    truth = np.array([r.private_indices for r in records], dtype=np.int64)
    num_private = int(truth.max()) + 1
    overlap = np.zeros((num_sets, num_private), dtype=np.float64)
    for (a, b), (x, y) in zip(amap.pairs, truth):
        for s in (a, b):
            overlap[s, x] += 1
            overlap[s, y] += 1
    scale = max(overlap.max(), 1.0)
    return best_matching(overlap / scale)


def assignment_accuracy(amap: AssignmentMap, records: Sequence[MixRecord], num_sets: int) -> Tuple[float, np.ndarray]:
    """Fraction of encodings whose recovered set pair maps onto the true source pair."""
    mapping = set_to_source_mapping(amap, records, num_sets)
    hits = sum(
        {int(mapping[a]), int(mapping[b])} == set(r.private_indices)
        for (a, b), r in zip(amap.pairs, records)
    )
    return hits / max(len(records), 1), mapping


@pipeline_stage("assignment")
def assignment_node(state: dict) -> dict:
    ds = state["dataset"]
    cfg = state["config"]
    medoids = state["clusters"].medoids
    num_sets = len(medoids)

    set_sim = build_set_similarity(
        ds, [m.members for m in medoids], reps_per_set=cfg.reps_per_set, seed=cfg.seed,
        blur=cfg.blur, scorer=cfg.set_scorer, graph=state.get("similarity"),
    )
    amap = solve_assignment(set_sim, ds.params.epochs, num_sets, len(ds))

    recovered = [recover_lambdas(z) for z in ds.labels]
    unordered = np.array([r.lambdas for r in recovered], dtype=np.float64)
    abs_pixels = np.abs(ds.flat())
    abs_means = abs_mean_baseline(amap.members(num_sets), abs_pixels, box=(0.0, 1.0)).reshape(num_sets, -1)
    amap.lambdas = pair_all_lambdas(abs_pixels, amap, unordered, abs_means, set_sim)

    state["set_similarity"] = set_sim
    state["assignment"] = amap
    state["messages"].append(AIMessage(content=f"Assigned {len(ds)} encodings to {num_sets} sets"))
    return state
