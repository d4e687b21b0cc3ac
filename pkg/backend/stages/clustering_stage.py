"""
Clustering Stage: grow one clique per encoding, then pick one clique per
private image with k-medoids over sets.

Cliques are grown greedily: each insert adds the outside encoding with the
largest summed weight to the current members (lowest index on ties). Sets are
compared with 1 - |s & t| / |s | t|.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from langchain_core.messages import AIMessage
import logging as log

from core.errors import ConfigError
from stages.base import pipeline_stage

BLOCK = 512


@dataclass(frozen=True)
class CliqueSet:
    members: Tuple[int, ...]

    def __post_init__(self):
        if not self.members:
            raise ConfigError("a clique needs at least one member")
        if len(set(self.members)) != len(self.members):
            raise ConfigError(f"clique members repeat: {self.members}")

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, item: int) -> bool:
        return item in self.members

    def as_set(self) -> frozenset:
        return frozenset(self.members)


def insert(clique: CliqueSet, graph: np.ndarray) -> CliqueSet:
    n = graph.shape[0]
    if len(clique) >= n:
        raise ConfigError("clique already contains every encoding")
    members = list(clique.members)
    scores = graph[:, members].astype(np.float64).sum(axis=1)
    scores[members] = -np.inf
    return CliqueSet((*clique.members, int(np.argmax(scores))))


def create(seed_encoding: int, extra: int, graph: np.ndarray) -> CliqueSet:
    """``extra`` successive inserts starting from the singleton."""
    return create_all(graph, extra, seeds=[seed_encoding])[0]


def create_all(graph: np.ndarray, extra: int, seeds: Sequence[int] = None) -> List[CliqueSet]:
    """create() for many seeds at once; rows of a block grow in lock step."""
    n = graph.shape[0]
    if extra >= n:
        raise ConfigError(f"clique size parameter {extra} must be below the encoding count {n}")
    seeds = np.arange(n) if seeds is None else np.asarray(seeds, dtype=np.int64)
    cliques = []
    for lo in range(0, len(seeds), BLOCK):
        block = seeds[lo:lo + BLOCK]
        rows = np.arange(len(block))
        scores = graph[block].astype(np.float64)
        taken = np.zeros((len(block), n), dtype=bool)
        taken[rows, block] = True
        grown = [block]
        for _ in range(extra):
            masked = np.where(taken, -np.inf, scores)
            pick = masked.argmax(axis=1)
            taken[rows, pick] = True
            scores += graph[pick]
            grown.append(pick)
        order = np.stack(grown, axis=1)
        cliques.extend(CliqueSet(tuple(int(v) for v in row)) for row in order)
    return cliques


def set_distance(s, t) -> float:
    s, t = set(s), set(t)
    union = len(s | t)
    if union == 0:
        return 0.0
    return 1.0 - len(s & t) / union


def jaccard_distance_matrix(cliques: Sequence[CliqueSet]) -> np.ndarray:
    rows = np.repeat(np.arange(len(cliques)), [len(c) for c in cliques])
    cols = np.concatenate([np.asarray(c.members, dtype=np.int64) for c in cliques])
    width = int(cols.max()) + 1
    incidence = sp.csr_matrix((np.ones(len(cols), dtype=np.float32), (rows, cols)),
                              shape=(len(cliques), width))
    inter = (incidence @ incidence.T).toarray()
    sizes = np.asarray(incidence.sum(axis=1), dtype=np.float32).ravel()
    union = sizes[:, None] + sizes[None, :] - inter
    dist = 1.0 - inter / union
    np.fill_diagonal(dist, 0.0)
    return dist.astype(np.float32)


@dataclass
class ClusterResult:
    medoid_indices: List[int]
    medoids: List[CliqueSet]
    labels: np.ndarray
    cost_trace: List[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.cost_trace)


def _farthest_point_seeds(dist: np.ndarray, k: int) -> List[int]:
    chosen = [0]
    nearest = dist[0].astype(np.float64).copy()
    for _ in range(1, k):
        masked = nearest.copy()
        masked[chosen] = -np.inf
        nxt = int(np.argmax(masked))
        chosen.append(nxt)
        np.minimum(nearest, dist[nxt], out=nearest)
    return chosen


def cluster_sets(cliques: Sequence[CliqueSet], num_clusters: int, max_iter: int = 50) -> ClusterResult:
    """k-medoids under the set distance, farthest-point seeding from set 0."""
    if num_clusters < 1 or num_clusters > len(cliques):
        raise ConfigError(f"cannot form {num_clusters} clusters from {len(cliques)} sets")
    dist = jaccard_distance_matrix(cliques)
    medoids = _farthest_point_seeds(dist, num_clusters)

    distinct = len({c.as_set() for c in cliques})
    if distinct < num_clusters:
        log.warning(f"Only {distinct} distinct cliques for {num_clusters} clusters; medoids will repeat")

    trace = []
    labels = np.zeros(len(cliques), dtype=np.int64)
    for _ in range(max_iter):
        to_medoid = dist[:, medoids].astype(np.float64)
        labels = to_medoid.argmin(axis=1)
        trace.append(float(to_medoid[np.arange(len(cliques)), labels].sum()))

        updated = list(medoids)
        for c in range(num_clusters):
            members = np.flatnonzero(labels == c)
            candidates = np.union1d(members, [medoids[c]])
            if len(members) == 0:
                continue
            totals = dist[np.ix_(candidates, members)].astype(np.float64).sum(axis=1)
            current = totals[np.searchsorted(candidates, medoids[c])]
            best = int(np.argmin(totals))
            if totals[best] < current:
                updated[c] = int(candidates[best])
        if updated == medoids:
            break
        medoids = updated

    return ClusterResult(
        medoid_indices=list(medoids),
        medoids=[cliques[m] for m in medoids],
        labels=labels,
        cost_trace=trace,
    )


@pipeline_stage("clustering")
def clustering_node(state: dict) -> dict:
    ds = state["dataset"]
    cfg = state["config"]
    extra = cfg.clique_size(ds.params.epochs)
    num_private = ds.params.num_private
    log.info(f"Growing {len(ds)} cliques with M={extra}, clustering into {num_private} sets")

    cliques = create_all(state["similarity"], extra)
    clusters = cluster_sets(cliques, num_private, cfg.max_kmeans_iter)
    state["cliques"] = cliques
    state["clusters"] = clusters
    log.info(f"k-medoids finished after {clusters.iterations} iterations, "
             f"cost {clusters.cost_trace[0]:.2f} -> {clusters.cost_trace[-1]:.2f}")

    state["messages"].append(AIMessage(content=f"Recovered {len(clusters.medoids)} source cliques"))
    return state
