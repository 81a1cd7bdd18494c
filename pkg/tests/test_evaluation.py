import logging

import numpy as np
import pytest

from fuzzy_connectome.classifiers import ConstantClassifier, KnnClassifier
from fuzzy_connectome.evaluation import (
    Average,
    AutoencoderFeatures,
    ConfusionMatrix,
    FeatureExtractor,
    IdentityFeatures,
    binary_metrics,
    cross_validate,
    make_folds,
    multiclass_metrics,
)
from fuzzy_connectome.nn import TrainConfig
from utils.reporting import ReportFormatter

COHORT = [0] * 60 + [1] * 58 + [2] * 45


def _blobs(counts=(60, 58, 45), seed=0, spread=0.3):
    rng = np.random.default_rng(seed)
    centers = 5.0 * np.eye(3)
    x = np.vstack([centers[c] + spread * rng.standard_normal((n, 3)) for c, n in enumerate(counts)])
    y = np.concatenate([np.full(n, c) for c, n in enumerate(counts)])
    return x, y


# ── Binary metrics ──

def test_binary_metric_examples():
    assert binary_metrics(5, 0, 0, 5).as_tuple() == (1.0, 1.0, 1.0, 1.0)
    m = binary_metrics(3, 1, 2, 4)
    assert m.as_tuple() == pytest.approx((0.7, 0.75, 0.6, 6 / 9))
    assert m.flags == ()


def test_degenerate_denominators_are_flagged():
    m = binary_metrics(0, 0, 5, 5)
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
    assert "precision_undefined" in m.flags and "f1_undefined" in m.flags
    m = binary_metrics(0, 3, 0, 5)
    assert m.recall == 0.0 and "recall_undefined" in m.flags


def test_bad_counts_rejected():
    with pytest.raises(ValueError):
        binary_metrics(0, 0, 0, 0)
    with pytest.raises(ValueError):
        binary_metrics(-1, 2, 0, 0)


# ── Multiclass metrics ──

def test_diagonal_and_uniform_confusions():
    assert multiclass_metrics(ConfusionMatrix(np.diag([4.0, 5.0, 6.0]))).as_tuple() == (1.0, 1.0, 1.0, 1.0)
    assert multiclass_metrics(ConfusionMatrix(np.full((3, 3), 2.0))).accuracy == pytest.approx(1 / 3)


def test_macro_metrics_match_a_hand_tally():
    counts = np.array([[5.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 2.0, 3.0]])
    total = counts.sum()
    precision, recall, f1 = [], [], []
    for c in range(3):
        tp = counts[c, c]
        fp = sum(counts[r, c] for r in range(3) if r != c)
        fn = sum(counts[c, p] for p in range(3) if p != c)
        precision.append(tp / (tp + fp))
        recall.append(tp / (tp + fn))
        f1.append(2 * precision[-1] * recall[-1] / (precision[-1] + recall[-1]))
    m = multiclass_metrics(ConfusionMatrix(counts))
    assert m.accuracy == pytest.approx(12 / total)
    assert m.precision == pytest.approx(np.mean(precision))
    assert m.recall == pytest.approx(np.mean(recall))
    assert m.f1 == pytest.approx(np.mean(f1))


def test_micro_average_equals_accuracy_for_single_label():
    cm = ConfusionMatrix(np.array([[5.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 2.0, 3.0]]))
    m = multiclass_metrics(cm, Average.MICRO)
    assert m.precision == pytest.approx(m.accuracy)
    assert m.recall == pytest.approx(m.accuracy)


def test_confusion_from_predictions_and_files(tmp_path):
    cm = ConfusionMatrix.from_predictions([0, 0, 1, 2, 2], [0, 1, 1, 2, 0])
    assert cm.counts.tolist() == [[1, 1, 0], [0, 1, 0], [1, 0, 1]]
    assert cm.per_class(0) == (1.0, 1.0, 1.0, 2.0)
    text = cm.save_csv(tmp_path / "confusion.csv").read_text(encoding="utf-8")
    assert text.splitlines()[0] == "true\\pred,HC,SZ,ADHD"
    assert cm.export_heatmap(tmp_path / "confusion.ppm").read_bytes().startswith(b"P6")
    with pytest.raises(ValueError):
        multiclass_metrics(ConfusionMatrix(np.zeros((3, 3))))


# ── Folds ──

def test_cohort_folds_are_balanced():
    plan = make_folds(COHORT, k=10, seed=0)
    sizes = [f.size for f in plan.folds]
    assert set(sizes) <= {16, 17}
    assert sum(sizes) == 163
    union = np.concatenate(plan.folds)
    assert sorted(union.tolist()) == list(range(163))
    y = np.array(COHORT)
    for c in range(3):
        per_fold = [int((y[f] == c).sum()) for f in plan.folds]
        assert max(per_fold) - min(per_fold) <= 1


def test_singleton_folds_and_warning(caplog):
    with caplog.at_level(logging.WARNING):
        plan = make_folds([0, 0, 0, 1, 1, 1, 2, 2, 2, 2], k=10)
    assert all(f.size == 1 for f in plan.folds)
    assert "fewer than k=10" in caplog.text


def test_folds_are_seeded_and_checked():
    a, b = make_folds(COHORT, seed=4), make_folds(COHORT, seed=4)
    assert all(np.array_equal(x, y) for x, y in zip(a.folds, b.folds))
    assert a.fold_seeds() == b.fold_seeds()
    with pytest.raises(ValueError):
        make_folds([0, 1, 2], k=5)
    with pytest.raises(ValueError):
        make_folds(COHORT, k=1)


# ── Cross-validation ──

def test_constant_control_is_chance_on_balanced_data():
    x, y = _blobs(counts=(30, 30, 30))
    report = cross_validate(x, y, IdentityFeatures(), lambda s: ConstantClassifier(), make_folds(y, 10), method="constant")
    assert report.mean.accuracy == pytest.approx(1 / 3)
    assert report.pooled.accuracy == pytest.approx(1 / 3)


def test_knn_on_separable_cohort():
    x, y = _blobs()
    report = cross_validate(x, y, IdentityFeatures(), lambda s: KnnClassifier(1), make_folds(y, 10, seed=2))
    assert report.mean.accuracy >= 0.95
    assert report.confusion.counts.sum() * report.k == pytest.approx(163)
    assert report.pooled.accuracy == pytest.approx(float((report.predictions == y).mean()))
    for m in report.fold_metrics:
        assert all(0.0 <= v <= 1.0 for v in m.as_tuple())


def test_cross_validation_is_reproducible():
    x, y = _blobs(seed=3, spread=2.0)
    runs = [
        ReportFormatter().format([cross_validate(x, y, IdentityFeatures(), lambda s: KnnClassifier(3), make_folds(y, 10, 7))])
        for _ in range(2)
    ]
    assert runs[0] == runs[1]


class _RecordingFeatures(FeatureExtractor):
    """Column 0 carries the sample index; records which indices reach fit."""

    def __init__(self):
        self.fitted = []

    def fit(self, samples, labels, seed=0):
        self.fitted.append({int(s[0]) for s in samples})
        return self

    def transform(self, samples):
        return np.asarray(samples)[:, 1:]


def test_extractor_only_sees_training_samples():
    x, y = _blobs(counts=(12, 12, 12))
    samples = np.hstack([np.arange(36)[:, None], x])
    recorder = _RecordingFeatures()
    plan = make_folds(y, 4, seed=1)
    report = cross_validate(samples, y, recorder, lambda s: KnnClassifier(3), plan)
    for i, seen in enumerate(recorder.fitted):
        _, test = plan.split(i)
        assert seen.isdisjoint(test.tolist())
        assert seen == set(report.fold_train_indices[i].tolist())


def test_fold_missing_a_training_class_raises():
    y = np.array([0] * 5 + [1] * 5 + [2])
    x = np.random.default_rng(0).standard_normal((11, 2))
    with pytest.raises(ValueError, match="ADHD"):
        cross_validate(x, y, IdentityFeatures(), lambda s: KnnClassifier(1), make_folds(y, 2))


@pytest.mark.parametrize("seed", range(5))
def test_shuffled_labels_stay_near_chance(seed):
    x, y = _blobs(counts=(30, 30, 30), seed=seed)
    shuffled = np.random.default_rng(100 + seed).permutation(y)
    report = cross_validate(x, shuffled, IdentityFeatures(), lambda s: KnnClassifier(3), make_folds(shuffled, 10, seed))
    assert 0.15 <= report.mean.accuracy <= 0.50


def test_autoencoder_features_per_fold():
    rng = np.random.default_rng(5)
    mats = [np.tanh(rng.standard_normal((8, 8))) for _ in range(12)]
    y = np.array([0, 1, 2] * 4)
    extractor = AutoencoderFeatures(8, TrainConfig(epochs=1, batch_size=4))
    report = cross_validate(mats, y, extractor, lambda s: KnnClassifier(1), make_folds(y, 2))
    assert report.k == 2
    assert extractor.transform(mats).shape == (12, 1)
    assert set(report.predictions.tolist()) <= {0, 1, 2}
