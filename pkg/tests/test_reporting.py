import numpy as np
import pytest

from fuzzy_connectome.classifiers import ConstantClassifier, KnnClassifier
from fuzzy_connectome.evaluation import IdentityFeatures, cross_validate, make_folds
from fuzzy_connectome.stats import EdgeResult
from utils.caching import StageCache, content_key
from utils.reporting import CSV_HEADER, ReportFormatter, write_edges_csv, write_history_csv


@pytest.fixture(scope="module")
def reports():
    rng = np.random.default_rng(0)
    x = np.vstack([c * 4.0 + rng.standard_normal((10, 2)) for c in range(3)])
    y = np.repeat([0, 1, 2], 10)
    plan = make_folds(y, 5)
    return [
        cross_validate(x, y, IdentityFeatures(), lambda s: KnnClassifier(3), plan, method="knn"),
        cross_validate(x, y, IdentityFeatures(), lambda s: ConstantClassifier(), plan, method="constant"),
    ]


def test_csv_rows(reports):
    lines = ReportFormatter().format(reports, "csv").splitlines()
    assert lines[0] == CSV_HEADER
    assert [l.split(",")[:2] for l in lines[1:4]] == [["knn", "fold_mean"], ["knn", "fold_std"], ["knn", "pooled"]]
    assert len(lines) == 7
    assert lines[4].split(",")[4] == "0.333333"


def test_table_layout(reports):
    text = ReportFormatter().format(reports, "table")
    assert text.startswith("Methods")
    assert "Acc (%)" in text and "±" in text
    assert any(line.startswith("constant") and "33.33" in line for line in text.splitlines())


def test_unknown_style(reports):
    with pytest.raises(ValueError, match="Unsupported report style"):
        ReportFormatter().format(reports, "xml")


def test_history_and_edges_files(tmp_path):
    text = write_history_csv([3.0, 1.5], tmp_path / "h.csv", "loss").read_text(encoding="utf-8")
    assert text == "step,loss\n0,3.0\n1,1.5\n"
    edges = [EdgeResult(0, 2, 12.0, 0.008)]
    named = write_edges_csv(edges, tmp_path / "e.csv", ["A", "B", "C"]).read_text(encoding="utf-8")
    assert named.splitlines() == ["i,j,roi_i,roi_j,f_stat,p_value", "0,2,A,C,12.0,0.008"]


def test_content_keys_and_stage_cache(tmp_path):
    assert content_key({"a": 1, "b": 2}) == content_key({"b": 2, "a": 1})
    assert content_key(1, "x") != content_key(1, "y")
    cache = StageCache(tmp_path)
    key = content_key("stage")
    assert not cache.is_complete("s", key)
    d = cache.prepare("s", key)
    assert d == tmp_path / "s" / key[:16]
    cache.mark_complete("s", key)
    assert cache.is_complete("s", key)
    cache.prepare("s", key)
    assert not cache.is_complete("s", key)
