"""
InstaLab reconstruction pipeline: stages package.
Exports the node functions for the attack orchestrator.
"""

from stages.similarity_stage import similarity_node
from stages.clustering_stage import clustering_node
from stages.assignment_stage import assignment_node
from stages.recovery_stage import (
    baseline_node,
    recovery_node,
    should_run_solver,
)
from stages.evaluation_stage import evaluation_node

__all__ = [
    "similarity_node",
    "clustering_node",
    "assignment_node",
    "baseline_node",
    "recovery_node",
    "should_run_solver",
    "evaluation_node",
]
