"""
CSV reports for attack metrics and theory experiments.
"""

import csv
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from tools.metrics import MetricReport


def write_rows(path, rows: Sequence[Dict[str, object]], fieldnames: Optional[List[str]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    return path


def read_rows(path) -> List[Dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_summary(path, summary: Dict[str, object]) -> Path:
    return write_rows(path, [{"metric": k, "value": v} for k, v in summary.items()], ["metric", "value"])


def side_by_side_rows(reports: Dict[str, MetricReport]) -> List[Dict[str, object]]:
    """One row per recovered image, one column group per method."""
    count = max((len(r.matching) for r in reports.values()), default=0)
    per_method = {method: report.rows() for method, report in reports.items()}
    rows = []
    for i in range(count):
        row: Dict[str, object] = {"source": i}
        for method, recs in per_method.items():
            rec = recs[i]
            for key in ("original", "ssim", "psnr", "rmse"):
                row[f"{method}_{key}"] = rec[key]
        rows.append(row)
    return rows


def write_metric_reports(path, reports: Dict[str, MetricReport]) -> Path:
    return write_rows(path, side_by_side_rows(reports))


def flatten(record: Dict[str, object], prefix: str = "") -> Dict[str, object]:
    out: Dict[str, object] = {}
    for key, value in record.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, prefix=f"{name}."))
        else:
            out[name] = value
    return out


def write_experiment(path, records: Iterable[Dict[str, object]]) -> Path:
    rows = [flatten(r) for r in records]
    fields: List[str] = []
    for row in rows:
        fields.extend(k for k in row if k not in fields)
    return write_rows(path, rows, fields)
