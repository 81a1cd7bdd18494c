"""
Stratified k-fold cross-validation, binary and multiclass metrics, and
fold-averaged confusion matrices.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from utils.ppm import sequential_rgb, write_ppm

from .cnn_ae import AutoencoderModel, build_autoencoder, encode, finetune_classifier, train_reconstruction
from .classifiers import BaseClassifier
from .connectivity import ConnectivityMatrix
from .data_model import N_CLASSES, ClassLabel
from .nn import TrainConfig

logger = logging.getLogger(__name__)


class Average(str, Enum):
    MACRO = "macro"
    MICRO = "micro"


# ── Metrics ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    precision: float
    recall: float
    f1: float
    flags: Tuple[str, ...] = ()

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return self.accuracy, self.precision, self.recall, self.f1


def binary_metrics(tp: float, fp: float, fn: float, tn: float) -> MetricSet:
    """Accuracy, precision, recall and F1; an undefined ratio is 0 and flagged."""
    counts = (tp, fp, fn, tn)
    if any(c < 0 for c in counts):
        raise ValueError("counts must be nonnegative")
    total = tp + fp + fn + tn
    if total == 0:
        raise ValueError("all counts are zero")
    flags: List[str] = []
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.append("precision_undefined")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.append("recall_undefined")
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.append("f1_undefined")
    return MetricSet((tp + tn) / total, precision, recall, f1, tuple(flags))


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: np.ndarray

    @classmethod
    def from_predictions(cls, y_true: Sequence[int], y_pred: Sequence[int]) -> "ConfusionMatrix":
        counts = np.zeros((N_CLASSES, N_CLASSES))
        np.add.at(counts, (np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int)), 1.0)
        return cls(counts)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def per_class(self, c: int) -> Tuple[float, float, float, float]:
        """(tp, fp, fn, tn) for class c against the rest."""
        tp = float(self.counts[c, c])
        fp = float(self.counts[:, c].sum()) - tp
        fn = float(self.counts[c, :].sum()) - tp
        return tp, fp, fn, self.total - tp - fp - fn

    def save_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        names = [c.name for c in ClassLabel]
        lines = ["true\\pred," + ",".join(names)]
        for name, row in zip(names, self.counts):
            lines.append(name + "," + ",".join(repr(float(v)) for v in row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def export_heatmap(self, path: Union[str, Path]) -> Path:
        """Row-normalized white → red image, one pixel per cell."""
        rows = self.counts.sum(axis=1, keepdims=True)
        return write_ppm(sequential_rgb(np.divide(self.counts, rows, out=np.zeros_like(self.counts), where=rows > 0)), path)


def multiclass_metrics(confusion: ConfusionMatrix, average: Union[Average, str] = Average.MACRO) -> MetricSet:
    """Accuracy = trace/total; precision/recall/F1 macro- or micro-averaged over one-vs-rest tallies."""
    total = confusion.total
    if total == 0:
        raise ValueError("empty confusion matrix")
    accuracy = float(np.trace(confusion.counts)) / total
    tallies = [confusion.per_class(c) for c in range(confusion.counts.shape[0])]
    if Average(average) is Average.MICRO:
        tp, fp, fn, tn = (sum(t[i] for t in tallies) for i in range(4))
        m = binary_metrics(tp, fp, fn, tn)
        return MetricSet(accuracy, m.precision, m.recall, m.f1, m.flags)
    per = [binary_metrics(*t) for t in tallies]
    flags = tuple(sorted({f"{ClassLabel(c).name}:{flag}" for c, m in enumerate(per) for flag in m.flags}))
    return MetricSet(
        accuracy,
        float(np.mean([m.precision for m in per])),
        float(np.mean([m.recall for m in per])),
        float(np.mean([m.f1 for m in per])),
        flags,
    )


# ── Folds ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FoldPlan:
    folds: Tuple[np.ndarray, ...]
    seed: int

    @property
    def k(self) -> int:
        return len(self.folds)

    @property
    def n_samples(self) -> int:
        return sum(f.size for f in self.folds)

    def split(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        test = self.folds[i]
        train = np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != i]))
        return train, test

    def fold_seeds(self) -> List[int]:
        return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(self.seed).spawn(self.k)]


def make_folds(labels: Sequence[Union[ClassLabel, int]], k: int = 10, seed: int = 0) -> FoldPlan:
    """
    Shuffle each class with the seed, concatenate the classes and deal the
    sequence round-robin into k folds, so every class is spread evenly.
    """
    y = np.asarray([int(l) for l in labels], dtype=int)
    if k < 2:
        raise ValueError("k must be at least 2")
    if y.size < k:
        raise ValueError(f"cannot split {y.size} samples into {k} folds")
    rng = np.random.default_rng(seed)
    order: List[int] = []
    for c in sorted(set(y.tolist())):
        members = np.flatnonzero(y == c)
        if members.size < k:
            logger.warning("class %s has %d samples, fewer than k=%d", ClassLabel(c).name, members.size, k)
        order.extend(rng.permutation(members).tolist())
    assignment = np.arange(len(order)) % k
    order_arr = np.array(order)
    folds = tuple(np.sort(order_arr[assignment == i]) for i in range(k))
    return FoldPlan(folds, seed)


# ── Feature extractors ──────────────────────────────────────────────────────

class FeatureExtractor(ABC):
    """Turns raw samples into an N×d feature matrix; fitted on training folds only."""

    def fit(self, samples: Sequence[Any], labels: np.ndarray, seed: int = 0) -> "FeatureExtractor":
        return self

    @abstractmethod
    def transform(self, samples: Sequence[Any]) -> np.ndarray:
        raise NotImplementedError


class IdentityFeatures(FeatureExtractor):
    def transform(self, samples: Sequence[Any]) -> np.ndarray:
        return np.asarray(samples, dtype=float)


class UpperTriangleFeatures(FeatureExtractor):
    def transform(self, samples: Sequence[ConnectivityMatrix]) -> np.ndarray:
        return np.stack([m.upper_triangle() for m in samples])


class AutoencoderFeatures(FeatureExtractor):
    """Train the autoencoder (and optionally fine-tune the encoder), then encode."""

    def __init__(
        self,
        input_size: int,
        train: TrainConfig,
        finetune: Optional[TrainConfig] = None,
        freeze_encoder: bool = False,
    ):
        self.input_size = input_size
        self.train = train
        self.finetune = finetune
        self.freeze_encoder = freeze_encoder
        self.encoder: Optional[Any] = None
        self.history: List[float] = []

    @classmethod
    def from_encoder(cls, encoder: Any) -> "AutoencoderFeatures":
        """Already-trained encoder (autoencoder or fine-tuned); no training config attached."""
        extractor = cls(encoder.input_size, TrainConfig())
        extractor.encoder = encoder
        return extractor

    def fit(self, samples: Sequence[ConnectivityMatrix], labels: np.ndarray, seed: int = 0) -> "AutoencoderFeatures":
        model: AutoencoderModel = build_autoencoder(self.input_size, seed)
        _, self.history = train_reconstruction(model, samples, self.train.model_copy(update={"seed": seed}))
        self.encoder = model
        if self.finetune is not None:
            self.encoder, _ = finetune_classifier(
                model, samples, labels, self.finetune.model_copy(update={"seed": seed}),
                freeze_encoder=self.freeze_encoder, require_all_classes=False,
            )
        return self

    def transform(self, samples: Sequence[ConnectivityMatrix]) -> np.ndarray:
        if self.encoder is None:
            raise RuntimeError("autoencoder features are not fitted")
        return encode(self.encoder, samples)


class PrefittedFeatures(FeatureExtractor):
    """Wraps an extractor already fitted on every subject; per-fold fit is a no-op."""

    def __init__(self, inner: FeatureExtractor):
        self.inner = inner

    def transform(self, samples: Sequence[Any]) -> np.ndarray:
        return self.inner.transform(samples)


# ── Cross-validation ────────────────────────────────────────────────────────

@dataclass
class EvalReport:
    method: str
    average: Average
    fold_metrics: List[MetricSet]
    fold_confusions: List[ConfusionMatrix]
    predictions: np.ndarray
    fold_train_indices: List[np.ndarray] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.fold_metrics)

    @property
    def mean(self) -> MetricSet:
        return MetricSet(*np.mean([m.as_tuple() for m in self.fold_metrics], axis=0).tolist())

    @property
    def std(self) -> MetricSet:
        return MetricSet(*np.std([m.as_tuple() for m in self.fold_metrics], axis=0).tolist())

    @property
    def pooled_confusion(self) -> ConfusionMatrix:
        return ConfusionMatrix(sum(c.counts for c in self.fold_confusions))

    @property
    def confusion(self) -> ConfusionMatrix:
        """Fold-averaged confusion matrix."""
        return ConfusionMatrix(self.pooled_confusion.counts / self.k)

    @property
    def pooled(self) -> MetricSet:
        return multiclass_metrics(self.pooled_confusion, self.average)


def cross_validate(
    samples: Sequence[Any],
    labels: Sequence[Union[ClassLabel, int]],
    extractor: FeatureExtractor,
    classifier_factory: Callable[[int], BaseClassifier],
    plan: FoldPlan,
    average: Union[Average, str] = Average.MACRO,
    method: str = "",
) -> EvalReport:
    """
    For each fold: fit the extractor and a fresh classifier on the training
    split only, predict the test split. Each fold draws its seed from the
    plan's master seed.
    """
    y = np.asarray([int(l) for l in labels], dtype=int)
    if len(samples) != y.size:
        raise ValueError("samples and labels differ in length")
    if plan.n_samples != y.size:
        raise ValueError(f"fold plan covers {plan.n_samples} samples, dataset has {y.size}")

    fold_metrics: List[MetricSet] = []
    confusions: List[ConfusionMatrix] = []
    train_sets: List[np.ndarray] = []
    predictions = np.full(y.size, -1, dtype=int)
    for i, fold_seed in enumerate(plan.fold_seeds()):
        train, test = plan.split(i)
        missing = [c.name for c in ClassLabel if not np.any(y[train] == int(c))]
        if missing:
            raise ValueError(f"fold {i}: training split lacks class(es) {', '.join(missing)}")
        train_samples = [samples[j] for j in train]
        test_samples = [samples[j] for j in test]

        extractor.fit(train_samples, y[train], fold_seed)
        clf = classifier_factory(fold_seed)
        clf.fit(extractor.transform(train_samples), y[train])
        pred = clf.predict(extractor.transform(test_samples))

        predictions[test] = pred
        cm = ConfusionMatrix.from_predictions(y[test], pred)
        confusions.append(cm)
        fold_metrics.append(multiclass_metrics(cm, average))
        train_sets.append(train)
        logger.info("fold %d/%d: accuracy %.4f", i + 1, plan.k, fold_metrics[-1].accuracy)

    return EvalReport(method, Average(average), fold_metrics, confusions, predictions, train_sets)
