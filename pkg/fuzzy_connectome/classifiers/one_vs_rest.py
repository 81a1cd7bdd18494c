"""
Shared 3-class wrapper for the fuzzy regressors: one model per class fitted
on 0/1 targets, scored by each model's crisp output, labeled by argmax.
"""

from __future__ import annotations

import logging
from abc import abstractmethod
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..data_model import ClassLabel
from ..fcm import FcmResult, fcm_cluster
from .base import BaseClassifier, ClassifierConfig, as_labels, as_matrix, require_all_classes

logger = logging.getLogger(__name__)


def one_vs_rest_targets(labels: np.ndarray, label: Union[ClassLabel, int]) -> np.ndarray:
    return (np.asarray(labels) == int(label)).astype(float)


class OneVsRestClassifier(BaseClassifier):
    def __init__(self, config: Optional[ClassifierConfig] = None):
        self.config = config or ClassifierConfig(method=self.method)
        self.models: List[Any] = []

    @abstractmethod
    def _fit_one(self, features: np.ndarray, targets: np.ndarray, fcm: FcmResult) -> Any:
        raise NotImplementedError

    @abstractmethod
    def _score_one(self, model: Any, features: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @abstractmethod
    def _model_to_dict(self, model: Any) -> Dict[str, Any]:
        raise NotImplementedError

    @abstractmethod
    def _model_from_dict(self, data: Dict[str, Any]) -> Any:
        raise NotImplementedError

    def fit(self, features: np.ndarray, labels: Sequence[Union[ClassLabel, int]]) -> "OneVsRestClassifier":
        x = as_matrix(features)
        y = as_labels(labels)
        if x.shape[0] != y.size:
            raise ValueError("features and labels differ in length")
        require_all_classes(y)
        # clustering depends on the features only, so the three models share it
        fcm = fcm_cluster(x, self.config.clusters, seed=self.config.seed)
        self.models = []
        for label in ClassLabel:
            self.models.append(self._fit_one(x, one_vs_rest_targets(y, label), fcm))
            logger.debug("%s: fitted %s-vs-rest model", self.method.value, label.name)
        return self

    def predict_scores(self, features: np.ndarray) -> np.ndarray:
        if not self.models:
            raise RuntimeError(f"{self.method.value} classifier is not fitted")
        x = as_matrix(features)
        return np.column_stack([self._score_one(m, x) for m in self.models])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.model_dump(mode="json"),
            "models": [self._model_to_dict(m) for m in self.models],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OneVsRestClassifier":
        clf = cls(ClassifierConfig.model_validate(data["config"]))
        clf.models = [clf._model_from_dict(m) for m in data["models"]]
        return clf
