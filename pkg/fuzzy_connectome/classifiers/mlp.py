from __future__ import annotations

from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from ..data_model import N_CLASSES, ClassLabel
from ..nn import Dense, ReLU, Sequential, Softmax, TrainConfig, cross_entropy_loss, fit, one_hot
from .base import BaseClassifier, Method, default_mlp_config, as_labels, as_matrix, require_all_classes

HIDDEN_UNITS = 64


def build_mlp(in_features: int, seed: int = 0, hidden: int = HIDDEN_UNITS) -> Sequential:
    rng = np.random.default_rng(seed)
    return Sequential([
        Dense(in_features, hidden, rng), ReLU(),
        Dense(hidden, hidden, rng), ReLU(),
        Dense(hidden, N_CLASSES, rng), Softmax(),
    ])


class MlpClassifier(BaseClassifier):
    """Two hidden ReLU layers and a softmax head on standardized features."""

    method = Method.MLP

    def __init__(self, train: Optional[TrainConfig] = None, hidden: int = HIDDEN_UNITS):
        self.train = train or default_mlp_config()
        self.hidden = hidden
        self.network: Optional[Sequential] = None
        self.mean: Optional[np.ndarray] = None
        self.scale: Optional[np.ndarray] = None
        self.history: list = []

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale

    def fit(self, features: np.ndarray, labels: Sequence[Union[ClassLabel, int]]) -> "MlpClassifier":
        x = as_matrix(features)
        y = as_labels(labels)
        if x.shape[0] != y.size:
            raise ValueError("features and labels differ in length")
        require_all_classes(y)
        self.mean = x.mean(axis=0)
        std = x.std(axis=0)
        self.scale = np.where(std > 0, std, 1.0)
        self.network = build_mlp(x.shape[1], self.train.seed, self.hidden)
        self.history = fit(self.network, self._standardize(x), one_hot(y, N_CLASSES), cross_entropy_loss, self.train)
        return self

    def predict_scores(self, features: np.ndarray) -> np.ndarray:
        if self.network is None:
            raise RuntimeError("mlp classifier is not fitted")
        return self.network.predict(self._standardize(as_matrix(features)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "train": self.train.model_dump(mode="json"),
            "hidden": self.hidden,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "layers": [{name: p.tolist() for name, p in layer.params.items()} for layer in self.network.layers],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MlpClassifier":
        clf = cls(TrainConfig.model_validate(data["train"]), int(data["hidden"]))
        clf.mean = np.array(data["mean"], dtype=float)
        clf.scale = np.array(data["scale"], dtype=float)
        clf.network = build_mlp(clf.mean.size, clf.train.seed, clf.hidden)
        for layer, params in zip(clf.network.layers, data["layers"]):
            for name, values in params.items():
                layer.params[name] = np.array(values, dtype=float)
        return clf


def mlp_fit(features: np.ndarray, labels: Sequence[Union[ClassLabel, int]], config: Optional[TrainConfig] = None) -> MlpClassifier:
    return MlpClassifier(config).fit(features, labels)


def mlp_classify(model: MlpClassifier, x: np.ndarray) -> ClassLabel:
    return model.classify(x)
