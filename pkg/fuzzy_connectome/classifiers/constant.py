from __future__ import annotations

from typing import Any, Dict, Sequence, Union

import numpy as np

from ..data_model import N_CLASSES, ClassLabel
from .base import BaseClassifier, Method, as_matrix


class ConstantClassifier(BaseClassifier):
    """Chance-level control: always predicts one label."""

    method = Method.CONSTANT

    def __init__(self, label: Union[ClassLabel, int, str] = ClassLabel.HC):
        self.label = ClassLabel.parse(label)

    def fit(self, features: np.ndarray, labels: Sequence[Union[ClassLabel, int]]) -> "ConstantClassifier":
        return self

    def predict_scores(self, features: np.ndarray) -> np.ndarray:
        scores = np.zeros((as_matrix(features).shape[0], N_CLASSES))
        scores[:, int(self.label)] = 1.0
        return scores

    def to_dict(self) -> Dict[str, Any]:
        return {"label": self.label.name}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConstantClassifier":
        return cls(data["label"])
