"""
LangGraph-based orchestrator for the InstaHide reconstruction attack.

Architecture:
- Similarity: abs-correlation graph over all encodings
- Clustering: greedy cliques per encoding, k-medoids down to one per source
- Assignment: min-cost flow routing each encoding to two sources, weight pairing
- Baseline: abs-mean image per source
- Recovery: projected gradient descent with greedy sign choice (skipped with baseline_only)
- Evaluate: export images and CSVs, score against truth when available
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, TypedDict

import numpy as np
from langgraph.graph import StateGraph, END
from langchain_core.messages import BaseMessage
import logging as log

from core.types import EncodedDataset
from stages import (
    assignment_node,
    baseline_node,
    clustering_node,
    evaluation_node,
    recovery_node,
    should_run_solver,
    similarity_node,
)
from stages.attack_config import AttackConfig
from utils import DEVICE, DTYPE


class AttackState(TypedDict, total=False):
    """State shared across all pipeline stages."""
    dataset: EncodedDataset
    config: AttackConfig
    scorer: Any
    truth_path: Optional[Path]
    out_dir: Optional[Path]
    similarity: np.ndarray
    cliques: list
    clusters: Any
    set_similarity: np.ndarray
    assignment: Any
    baseline: np.ndarray
    reconstruction: Any
    reports: dict
    metrics: dict
    timings: Dict[str, float]
    messages: List[BaseMessage]


def build_attack_graph() -> StateGraph:
    """Build the LangGraph pipeline."""
    graph = StateGraph(AttackState)

    graph.add_node("similarity_graph", similarity_node)
    graph.add_node("clustering", clustering_node)
    graph.add_node("assignment_flow", assignment_node)
    graph.add_node("baseline_mean", baseline_node)
    graph.add_node("recover", recovery_node)
    graph.add_node("evaluate", evaluation_node)

    graph.add_edge("similarity_graph", "clustering")
    graph.add_edge("clustering", "assignment_flow")
    graph.add_edge("assignment_flow", "baseline_mean")
    graph.add_conditional_edges(
        "baseline_mean",
        should_run_solver,
        {
            "recover": "recover",
            "evaluate": "evaluate"
        }
    )
    graph.add_edge("recover", "evaluate")
    graph.add_edge("evaluate", END)

    graph.set_entry_point("similarity_graph")

    return graph


def run_attack(dataset: EncodedDataset, config: Optional[AttackConfig] = None,
               out_dir: Optional[Path] = None, truth_path: Optional[Path] = None,
               scorer: Any = None) -> dict:
    """Execute the reconstruction pipeline on a blind dataset."""
    config = config or AttackConfig()
    log.info("\n" + "=" * 80)
    log.info("INSTALAB: reconstruction attack")
    log.info("=" * 80)
    log.info(f"Dataset: {len(dataset)} encodings, k={dataset.params.k}, N={dataset.params.epochs}, "
             f"|X|={dataset.params.num_private}, shape={dataset.params.shape}")
    log.info(f"Configuration: device={DEVICE}, dtype={DTYPE}, baseline_only={config.baseline_only}, "
             f"box={config.box}, l1={config.gd.l1}")
    log.info("=" * 80 + "\n")

    runnable = build_attack_graph().compile()

    initial_state = {
        "dataset": dataset.blind(),
        "config": config,
        "scorer": scorer,
        "truth_path": truth_path,
        "out_dir": out_dir,
        "reconstruction": None,
        "timings": {},
        "messages": [],
    }

    return runnable.invoke(initial_state)
