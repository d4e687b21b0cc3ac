from tools.parsing_tools import parse_all_manifests, parse_manifest
from tools.reporting import flatten, read_rows, write_experiment, write_summary
from utils import MANIFEST_NAME, write_manifest


def test_manifest_round_trip(tmp_path):
    argv = ["gen", "--out", "my runs/a", "--seed", "42"]
    path = write_manifest(tmp_path / "run1", "gen", argv, 42, {"k": 4, "epochs": 8},
                          inputs={"private": "none"}, outputs={"dataset": "dataset.ihed"})
    assert path.name == MANIFEST_NAME

    manifest = parse_manifest(path)
    assert manifest.run_folder == "run1"
    assert manifest.subcommand == "gen"
    assert manifest.argv == argv
    assert manifest.seed == 42
    assert manifest.params == {"epochs": "8", "k": "4"}
    assert manifest.inputs == {"private": "none"}
    assert manifest.outputs == {"dataset": "dataset.ihed"}


def test_manifest_without_seed(tmp_path):
    path = write_manifest(tmp_path / "run", "attack", ["attack"], None, {})
    assert parse_manifest(path).seed is None


def test_missing_or_malformed_manifest(tmp_path):
    assert parse_manifest(tmp_path / "nowhere" / MANIFEST_NAME) is None
    bad = tmp_path / "bad" / MANIFEST_NAME
    bad.parent.mkdir()
    bad.write_text("just some notes\n")
    assert parse_manifest(bad) is None


def test_parse_all_manifests(tmp_path):
    write_manifest(tmp_path / "a", "gen", ["gen"], 1, {})
    write_manifest(tmp_path / "b", "theory", ["theory"], 2, {})
    (tmp_path / "c").mkdir()
    (tmp_path / "c" / MANIFEST_NAME).write_text("broken")
    runs = parse_all_manifests(tmp_path)
    assert sorted(runs) == ["a", "b"]
    assert runs["b"].subcommand == "theory"
    assert parse_all_manifests(tmp_path / "missing") == {}


def test_flatten_and_experiment_csv(tmp_path):
    assert flatten({"a": 1, "b": {"c": 2, "d": {"e": 3}}}) == {"a": 1, "b.c": 2, "b.d.e": 3}
    path = write_experiment(tmp_path / "theory.csv", [{"x": 1}, {"x": 2, "game": {"wins": 5}}])
    rows = read_rows(path)
    assert list(rows[0]) == ["x", "game.wins"]
    assert rows[0]["game.wins"] == ""
    assert rows[1]["game.wins"] == "5"


def test_summary_csv(tmp_path):
    rows = read_rows(write_summary(tmp_path / "summary.csv", {"mean_ssim": 0.5, "method": "abs_gd"}))
    assert rows == [{"metric": "mean_ssim", "value": "0.5"}, {"metric": "method", "value": "abs_gd"}]
