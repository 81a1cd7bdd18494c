"""ROI averaging, Pearson functional connectivity, matrix export and heatmaps."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, NamedTuple, Sequence, Union

import numpy as np

from utils.ppm import diverging_rgb, write_ppm

from .data_model import SubjectRecord
from .errors import ShapeError

logger = logging.getLogger(__name__)

BACKGROUND = -1
MATRIX_FMT = "%.17e"


# ── Types ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class LabelMap:
    """ROI index per voxel; `BACKGROUND` marks voxels outside every ROI."""

    labels: np.ndarray

    def validate(self, roi_count: int) -> None:
        labels = np.asarray(self.labels)
        bad = labels[(labels != BACKGROUND) & ((labels < 0) | (labels >= roi_count))]
        if bad.size:
            raise ShapeError(f"label {int(bad[0])} outside [0, {roi_count})")
        counts = np.bincount(labels[labels != BACKGROUND].astype(int), minlength=roi_count)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise ShapeError(f"ROI {int(empty[0])} has zero voxels")


@dataclass(frozen=True)
class ConnectivityMatrix:
    values: np.ndarray
    subject_id: str = ""

    @property
    def roi_count(self) -> int:
        return self.values.shape[0]

    def upper_triangle(self) -> np.ndarray:
        """Strict upper triangle, row-major; R(R−1)/2 values."""
        iu = np.triu_indices(self.roi_count, k=1)
        return self.values[iu]


class Correlation(NamedTuple):
    r: float
    zero_variance: bool


# ── ROI averaging ───────────────────────────────────────────────────────────

def roi_average(voxel_series: np.ndarray, labels: Union[LabelMap, np.ndarray], roi_count: int) -> np.ndarray:
    """Mean voxel series per ROI: V×T voxels + label map → R×T."""
    voxel_series = np.asarray(voxel_series, dtype=float)
    label_map = labels if isinstance(labels, LabelMap) else LabelMap(np.asarray(labels))
    lab = np.asarray(label_map.labels)
    if voxel_series.ndim != 2 or lab.shape != (voxel_series.shape[0],):
        raise ShapeError(f"label map length {lab.shape} does not match {voxel_series.shape[0]} voxels")
    label_map.validate(roi_count)

    out = np.empty((roi_count, voxel_series.shape[1]))
    for r in range(roi_count):
        out[r] = voxel_series[lab == r].mean(axis=0)
    return out


# ── Pearson ─────────────────────────────────────────────────────────────────

def pearson(x: np.ndarray, y: np.ndarray) -> Correlation:
    """Sample Pearson r by the centered two-pass formula; 0 + flag on a constant series."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("pearson needs at least 2 samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    if sxx == 0.0 or syy == 0.0:
        return Correlation(0.0, True)
    r = float(np.dot(xc, yc)) / np.sqrt(sxx * syy)
    return Correlation(float(np.clip(r, -1.0, 1.0)), False)


def correlation_matrix(series: np.ndarray, subject_id: str = "") -> ConnectivityMatrix:
    """Pairwise Pearson over the rows of an R×T array (R ≥ 1)."""
    series = np.asarray(series, dtype=float)
    if series.ndim != 2 or series.shape[1] < 2:
        raise ValueError(f"series must be R×T with T ≥ 2, got {series.shape}")
    centered = series - series.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", centered, centered))
    flat = norms == 0.0
    safe = np.where(flat, 1.0, norms)
    unit = centered / safe[:, None]
    values = unit @ unit.T
    values = 0.5 * (values + values.T)
    np.clip(values, -1.0, 1.0, out=values)
    values[flat, :] = 0.0
    values[:, flat] = 0.0
    diag = np.where(flat, 0.0, 1.0)
    np.fill_diagonal(values, diag)

    for roi in np.flatnonzero(flat):
        logger.warning(
            "subject %s: ROI %d has zero variance; its %d pairs are set to 0",
            subject_id or "?", roi, series.shape[0] - 1,
        )
    return ConnectivityMatrix(values, subject_id)


def connectivity_matrix(record: SubjectRecord) -> ConnectivityMatrix:
    return correlation_matrix(record.series, record.id)


def connectivity_matrices(records: Sequence[SubjectRecord]) -> List[ConnectivityMatrix]:
    return [connectivity_matrix(r) for r in records]


# ── Export ──────────────────────────────────────────────────────────────────

def save_matrix_csv(matrix: ConnectivityMatrix, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, matrix.values, fmt=MATRIX_FMT, delimiter=",")
    return path


def load_matrix_csv(path: Union[str, Path], subject_id: str = "") -> ConnectivityMatrix:
    values = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    if values.shape[0] != values.shape[1]:
        raise ShapeError(f"{path}: connectivity matrix must be square, got {values.shape}")
    return ConnectivityMatrix(values, subject_id or Path(path).stem)


def export_heatmap(matrix: ConnectivityMatrix, path: Union[str, Path]) -> Path:
    """PPM heatmap, one pixel per cell: -1 blue, 0 white, +1 red."""
    return write_ppm(diverging_rgb(matrix.values), path)
