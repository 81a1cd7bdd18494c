from __future__ import annotations

import json
from abc import ABC, abstractmethod
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, NonNegativeInt, PositiveInt

from ..data_model import ClassLabel
from ..fcm import DEFAULT_CLUSTERS, DEFAULT_FOU_DELTA
from ..nn import TrainConfig
from ..optimizers import MetaheuristicSpec

MODEL_FORMAT = "fuzzy_connectome.classifier"
MODEL_VERSION = 1


class Method(str, Enum):
    IT2FR = "it2fr"
    ANFIS = "anfis"
    KNN = "knn"
    MLP = "mlp"
    CONSTANT = "constant"


class AnfisMode(str, Enum):
    HYBRID = "hybrid"
    METAHEURISTIC = "metaheuristic"


def default_mlp_config() -> TrainConfig:
    return TrainConfig(learning_rate=1e-2, epochs=200, batch_size=16)


class ClassifierConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: Method = Method.IT2FR
    clusters: PositiveInt = DEFAULT_CLUSTERS
    fou_delta: float = Field(DEFAULT_FOU_DELTA, ge=0.0, lt=1.0)
    ridge: NonNegativeFloat = 1e-6
    use_bias: bool = True
    k: PositiveInt = 3
    anfis_mode: AnfisMode = AnfisMode.HYBRID
    hybrid_iterations: NonNegativeInt = 20
    premise_lr: NonNegativeFloat = 1e-3
    optimizer: Optional[MetaheuristicSpec] = None
    mlp: TrainConfig = Field(default_factory=default_mlp_config)
    constant_label: ClassLabel = ClassLabel.HC
    seed: NonNegativeInt = 0

    def with_seed(self, seed: int) -> "ClassifierConfig":
        """Copy with the seed pushed into the nested MLP and optimizer configs too."""
        update: Dict[str, Any] = {"seed": seed, "mlp": self.mlp.model_copy(update={"seed": seed})}
        if self.optimizer is not None:
            update["optimizer"] = self.optimizer.model_copy(update={"seed": seed})
        return self.model_copy(update=update)


def as_labels(labels: Sequence[Union[ClassLabel, int, str]]) -> np.ndarray:
    return np.array([int(ClassLabel.parse(l)) for l in labels], dtype=int)


def require_all_classes(y: np.ndarray) -> None:
    present = set(np.asarray(y).tolist())
    missing = [c.name for c in ClassLabel if int(c) not in present]
    if missing:
        raise ValueError(f"training labels are missing class(es): {', '.join(missing)}")


class BaseClassifier(ABC):
    """Abstract base class for every 3-class classifier."""

    method: Method

    @abstractmethod
    def fit(self, features: np.ndarray, labels: Sequence[Union[ClassLabel, int]]) -> "BaseClassifier":
        raise NotImplementedError

    @abstractmethod
    def predict_scores(self, features: np.ndarray) -> np.ndarray:
        """N×3 class scores; higher is more likely."""
        raise NotImplementedError

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError

    @classmethod
    @abstractmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BaseClassifier":
        raise NotImplementedError

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Argmax of the scores; np.argmax already prefers the lowest class index on ties."""
        return np.argmax(self.predict_scores(as_matrix(features)), axis=1)

    def classify(self, x: np.ndarray) -> ClassLabel:
        return ClassLabel(int(self.predict(np.asarray(x, dtype=float)[None, :])[0]))

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {"format": MODEL_FORMAT, "version": MODEL_VERSION, "method": self.method.value, "model": self.to_dict()}
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path


def as_matrix(features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"features must be N×d, got shape {x.shape}")
    return x
