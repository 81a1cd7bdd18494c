from __future__ import annotations

from typing import Any, Dict, Optional, Sequence, Union

import faiss
import numpy as np

from ..data_model import N_CLASSES, ClassLabel
from .base import BaseClassifier, Method, as_labels, as_matrix

# extra faiss candidates re-ranked in float64 so float32 rounding cannot drop a true neighbour
CANDIDATE_MARGIN = 8


class KnnClassifier(BaseClassifier):
    """
    Exact Euclidean k-nearest neighbours. faiss (flat L2, exhaustive) proposes
    candidates; distances are recomputed in float64 and ordered by
    (distance, stored index). Vote ties go to the class with the smaller summed
    neighbour distance, then to the lower class index.
    """

    method = Method.KNN

    def __init__(self, k: int = 3):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.features: Optional[np.ndarray] = None
        self.labels: Optional[np.ndarray] = None
        self._index: Optional[faiss.IndexFlatL2] = None

    def fit(self, features: np.ndarray, labels: Sequence[Union[ClassLabel, int]]) -> "KnnClassifier":
        x = as_matrix(features)
        y = as_labels(labels)
        if x.shape[0] != y.size:
            raise ValueError("features and labels differ in length")
        if self.k > x.shape[0]:
            raise ValueError(f"k={self.k} exceeds the {x.shape[0]} stored samples")
        self.features = x.copy()
        self.labels = y
        self._index = faiss.IndexFlatL2(x.shape[1])
        self._index.add(np.ascontiguousarray(x, dtype=np.float32))
        return self

    def neighbors(self, queries: np.ndarray) -> tuple:
        """Indices (Q×k) and float64 distances (Q×k) of the k nearest stored samples."""
        if self._index is None:
            raise RuntimeError("knn classifier is not fitted")
        q = as_matrix(queries)
        n = self.features.shape[0]
        pool = min(n, self.k + CANDIDATE_MARGIN)
        _, cand = self._index.search(np.ascontiguousarray(q, dtype=np.float32), pool)
        idx = np.empty((q.shape[0], self.k), dtype=int)
        dist = np.empty((q.shape[0], self.k))
        for i, row in enumerate(cand):
            row = row[row >= 0]
            d = np.sqrt(((self.features[row] - q[i]) ** 2).sum(axis=1))
            order = np.lexsort((row, d))[: self.k]
            idx[i] = row[order]
            dist[i] = d[order]
        return idx, dist

    def predict(self, features: np.ndarray) -> np.ndarray:
        idx, dist = self.neighbors(features)
        out = np.empty(idx.shape[0], dtype=int)
        for i in range(idx.shape[0]):
            labels = self.labels[idx[i]]
            votes = np.bincount(labels, minlength=N_CLASSES)
            summed = np.bincount(labels, weights=dist[i], minlength=N_CLASSES)
            tied = np.flatnonzero(votes == votes.max())
            out[i] = tied[np.lexsort((tied, summed[tied]))[0]]
        return out

    def predict_scores(self, features: np.ndarray) -> np.ndarray:
        """Vote fractions; `predict` applies the distance tie-break on top."""
        idx, _ = self.neighbors(features)
        return np.stack([np.bincount(self.labels[row], minlength=N_CLASSES) / self.k for row in idx])

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "features": self.features.tolist(), "labels": self.labels.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "KnnClassifier":
        return cls(int(data["k"])).fit(np.array(data["features"], dtype=float), data["labels"])


def knn_classify(model: KnnClassifier, x: np.ndarray) -> ClassLabel:
    return model.classify(x)
