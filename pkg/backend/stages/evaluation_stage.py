"""
Evaluation Stage: export reconstructions and, when a truth sidecar exists,
score them.

This is the only stage that ever opens the ``.truth`` file, and it does so
after every attack stage has finished.
"""

from pathlib import Path

from langchain_core.messages import AIMessage
import logging as log

from core.dataset_io import read_truth
from core.image_io import save_images
from stages.assignment_stage import assignment_accuracy
from stages.base import pipeline_stage
from tools.metrics import match_reconstructions
from tools.reporting import write_metric_reports, write_summary


@pipeline_stage("evaluate")
def evaluation_node(state: dict) -> dict:
    ds = state["dataset"]
    amap = state["assignment"]
    baseline = state["baseline"]
    result = state.get("reconstruction")
    out_dir = state.get("out_dir")
    num_sets = len(baseline)

    summary = {
        "encodings": len(ds),
        "sources": num_sets,
        "method": result.method if result is not None else "baseline",
    }
    if result is not None:
        summary["objective"] = result.objective

    if out_dir is not None:
        out_dir = Path(out_dir)
        save_images(baseline, out_dir / "baseline", prefix="baseline")
        if result is not None:
            save_images(result.images, out_dir / "recovered", prefix="recovered")
        amap.write_csv(out_dir / "assignment.csv")

    truth_path = state.get("truth_path")
    if truth_path is not None and Path(truth_path).exists():
        truth = read_truth(truth_path)
        accuracy, _ = assignment_accuracy(amap, truth.records, num_sets)
        summary["assignment_accuracy"] = accuracy
        if truth.originals is not None:
            reports = {"baseline": match_reconstructions(baseline, truth.originals)}
            if result is not None:
                reports["recovered"] = match_reconstructions(result.images, truth.originals)
            for method, report in reports.items():
                for key, value in report.summary().items():
                    summary[f"{method}_{key}"] = value
            state["reports"] = reports
            if out_dir is not None:
                write_metric_reports(out_dir / "metrics.csv", reports)
    else:
        log.info("No truth sidecar; skipping metrics")

    if out_dir is not None:
        write_summary(out_dir / "summary.csv", summary)

    log.info("\n" + "=" * 80)
    log.info("ATTACK SUMMARY")
    log.info("=" * 80)
    for key, value in summary.items():
        log.info(f"{key}: {value}")
    log.info("=" * 80)

    state["metrics"] = summary
    state["messages"].append(AIMessage(content=f"Attack finished: {summary}"))
    return state
