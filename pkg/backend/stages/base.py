"""
Shared plumbing for pipeline stage nodes.
"""

import functools
import time
from typing import Callable

import logging as log

from core.errors import InstaLabError, PipelineStageError


def pipeline_stage(name: str) -> Callable:
    """Time a node, and re-raise any lab or numeric failure as PipelineStageError."""

    def decorate(node: Callable[[dict], dict]) -> Callable[[dict], dict]:
        @functools.wraps(node)
        def run(state: dict) -> dict:
            log.info(f"[{name}] starting")
            started = time.perf_counter()
            try:
                state = node(state)
            except PipelineStageError:
                raise
            except (InstaLabError, ValueError, ArithmeticError, MemoryError) as e:
                log.error(f"[{name}] failed: {e}")
                raise PipelineStageError(name, e) from e
            elapsed = time.perf_counter() - started
            state.setdefault("timings", {})[name] = elapsed
            log.info(f"[{name}] done in {elapsed:.2f}s")
            return state

        return run

    return decorate
