import json

import pytest

from fuzzy_connectome.cli import EXIT_INVALID, EXIT_OK, main


@pytest.fixture(scope="module")
def cohort(tmp_path_factory):
    out = tmp_path_factory.mktemp("cohort")
    assert main(["synth", "--out", str(out), "--rois", "12", "--timepoints", "30", "--seed", "2"]) == EXIT_OK
    return out / "manifest.json"


def test_synth_writes_a_manifest(cohort):
    doc = json.loads(cohort.read_text(encoding="utf-8"))
    assert len(doc["subjects"]) == 163


def test_validate_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"evaluation": {"k": 0}}), encoding="utf-8")
    assert main(["validate", "--config", str(bad)]) == EXIT_INVALID
    out = capsys.readouterr().out
    assert "data:" in out and "evaluation.k:" in out

    good = tmp_path / "good.json"
    good.write_text(json.dumps({"data": {"synthetic": {"n_per_class": [4, 4, 4], "roi_count": 10}}, "evaluation": {"k": 3}}), encoding="utf-8")
    assert main(["validate", "--config", str(good)]) == EXIT_OK


def test_stats_anova_needs_a_column(cohort):
    assert main(["stats", "anova", "--manifest", str(cohort)]) == EXIT_INVALID


def test_edge_screen(cohort, tmp_path):
    out = tmp_path / "edges.csv"
    assert main(["stats", "screen", "--manifest", str(cohort), "--out", str(out)]) == EXIT_OK
    assert out.read_text(encoding="utf-8").startswith("i,j,f_stat,p_value")


def test_summary_without_data(capsys):
    assert main(["train-ae", "--summary"]) == EXIT_OK
    assert "19724" in capsys.readouterr().out


def test_missing_manifest_is_invalid(tmp_path):
    assert main(["connect", "--manifest", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == EXIT_INVALID


def test_feature_and_classifier_round_trip(cohort, tmp_path):
    model = tmp_path / "ae.fcnn"
    features = tmp_path / "features.csv"
    clf = tmp_path / "knn.json"
    preds = tmp_path / "predictions.csv"
    assert main(["train-ae", "--manifest", str(cohort), "--epochs", "1", "--out", str(model)]) == EXIT_OK
    assert main(["extract", "--manifest", str(cohort), "--model", str(model), "--out", str(features)]) == EXIT_OK
    assert main(["fit-classifier", "--features", str(features), "--method", "knn", "--neighbors", "3", "--out", str(clf)]) == EXIT_OK
    assert main(["predict", "--model", str(clf), "--features", str(features), "--out", str(preds)]) == EXIT_OK
    assert len(preds.read_text(encoding="utf-8").splitlines()) == 164


def test_evaluate_raw_features(cohort, tmp_path):
    out = tmp_path / "report.csv"
    code = main([
        "evaluate", "--manifest", str(cohort), "--source", "raw_upper_triangle",
        "--method", "knn", "--neighbors", "1", "--k", "10", "--seed", "3", "--out", str(out),
    ])
    assert code == EXIT_OK
    assert out.exists() and out.with_suffix(".txt").exists()
    assert out.with_suffix(".confusion.ppm").exists()


def test_optimize_benchmark(tmp_path):
    out = tmp_path / "history.csv"
    assert main(["optimize", "--optimizer", "pso", "--dim", "2", "--iters", "30", "--out", str(out)]) == EXIT_OK
    assert len(out.read_text(encoding="utf-8").splitlines()) == 32
