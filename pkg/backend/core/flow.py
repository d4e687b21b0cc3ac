"""
Thin wrapper over OR-tools' exact min-cost flow solver.
"""

from dataclasses import dataclass

import numpy as np
from ortools.graph.python import min_cost_flow

from core.errors import InfeasibleFlowError

COST_SCALE = 1_000_000


def quantize_costs(scores: np.ndarray) -> np.ndarray:
    """Integer arc costs round(1e6 * (1 - score))."""
    return np.rint(COST_SCALE * (1.0 - np.asarray(scores, dtype=np.float64))).astype(np.int64)


@dataclass
class FlowSolution:
    flows: np.ndarray
    cost: int


def solve_flow(start: np.ndarray, end: np.ndarray, capacity: np.ndarray, cost: np.ndarray,
               supplies: np.ndarray) -> FlowSolution:
    smcf = min_cost_flow.SimpleMinCostFlow()
    arcs = smcf.add_arcs_with_capacity_and_unit_cost(
        np.asarray(start, dtype=np.int64),
        np.asarray(end, dtype=np.int64),
        np.asarray(capacity, dtype=np.int64),
        np.asarray(cost, dtype=np.int64),
    )
    supplies = np.asarray(supplies, dtype=np.int64)
    smcf.set_nodes_supplies(np.arange(len(supplies), dtype=np.int64), supplies)

    status = smcf.solve()
    if status != smcf.OPTIMAL:
        raise InfeasibleFlowError(
            f"min-cost flow did not reach an optimal saturating flow (status {status})",
            diagnostics={
                "status": str(status),
                "nodes": int(len(supplies)),
                "arcs": int(len(arcs)),
                "total_supply": int(supplies[supplies > 0].sum()),
            },
        )
    return FlowSolution(flows=np.asarray(smcf.flows(arcs), dtype=np.int64), cost=int(smcf.optimal_cost()))
