import numpy as np
import pytest

from attack_orchestrator import run_attack
from core.dataset_io import write_truth
from core.errors import PipelineStageError
from stages.attack_config import AttackConfig, GdConfig
from tools.reporting import read_rows


@pytest.fixture
def truth_file(tmp_path, encoded, private_set):
    return write_truth(tmp_path / "dataset.truth", encoded.ground_truth, encoded.params,
                       originals=private_set.images, private_labels=private_set.labels)


def test_full_attack_writes_outputs(tmp_path, encoded, truth_file):
    out = tmp_path / "attack"
    config = AttackConfig.create(gd=GdConfig.create(max_steps=100))
    state = run_attack(encoded, config, out_dir=out, truth_path=truth_file)

    metrics = state["metrics"]
    assert metrics["encodings"] == len(encoded)
    assert metrics["sources"] == encoded.params.num_private
    assert metrics["method"] == "abs_gd"
    assert 0.0 <= metrics["assignment_accuracy"] <= 1.0
    assert {"baseline_mean_ssim", "recovered_mean_ssim", "objective"} <= set(metrics)

    assert len(list((out / "baseline").glob("*.pgm"))) == encoded.params.num_private
    assert len(list((out / "recovered").glob("*.pgm"))) == encoded.params.num_private
    assert len(read_rows(out / "assignment.csv")) == len(encoded)
    assert len(read_rows(out / "metrics.csv")) == encoded.params.num_private
    summary = {r["metric"]: r["value"] for r in read_rows(out / "summary.csv")}
    assert summary["method"] == "abs_gd"

    amap = state["assignment"]
    counts = np.bincount(amap.pairs.ravel(), minlength=encoded.params.num_private)
    assert counts.tolist() == [2 * encoded.params.epochs] * encoded.params.num_private
    assert set(state["timings"]) == {"similarity", "clustering", "assignment", "baseline", "recovery", "evaluate"}


def test_attack_never_sees_truth_records(encoded):
    state = run_attack(encoded, AttackConfig.create(baseline_only=True))
    assert state["dataset"].ground_truth is None
    assert "assignment_accuracy" not in state["metrics"]


def test_baseline_only_skips_the_solver(tmp_path, encoded, truth_file):
    out = tmp_path / "attack"
    state = run_attack(encoded, AttackConfig.create(baseline_only=True), out_dir=out, truth_path=truth_file)
    assert state["reconstruction"] is None
    assert state["metrics"]["method"] == "baseline"
    assert "recovery" not in state["timings"]
    assert not (out / "recovered").exists()
    assert "recovered_mean_ssim" not in state["metrics"]


def test_stage_failure_names_the_stage(encoded):
    with pytest.raises(PipelineStageError) as err:
        run_attack(encoded, AttackConfig.create(clique_extra=len(encoded)))
    assert err.value.stage == "clustering"
