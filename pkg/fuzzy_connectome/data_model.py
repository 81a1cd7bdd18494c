"""
Dataset representation, on-disk formats and the seeded synthetic cohort.

Series files are plain CSV: R rows × T columns, no header, row i = ROI i.
A manifest is one JSON document listing every subject with its label and the
series path (relative to the manifest's directory).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_serializer,
    field_validator,
    model_validator,
)

from .errors import DatasetError

logger = logging.getLogger(__name__)

SERIES_FMT = "%.17g"
MANIFEST_NAME = "manifest.json"


# ── Labels ──────────────────────────────────────────────────────────────────

class ClassLabel(IntEnum):
    HC = 0
    SZ = 1
    ADHD = 2

    @classmethod
    def parse(cls, value: Union[str, int, "ClassLabel"]) -> "ClassLabel":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().upper()
            if key in cls.__members__:
                return cls[key]
            if key.isdigit():
                return cls(int(key))
            raise ValueError(f"unknown class label: {value!r}")
        return cls(int(value))


N_CLASSES = len(ClassLabel)


# ── Records ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SubjectRecord:
    """One subject's ROI time series (R×T) plus its class label."""

    id: str
    label: ClassLabel
    series: np.ndarray
    extra: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        series = np.array(self.series, dtype=float)
        if series.ndim != 2:
            raise DatasetError(f"series must be 2-D (R×T), got {series.ndim}-D", self.id)
        rois, timepoints = series.shape
        if rois < 2:
            raise DatasetError(f"need at least 2 ROIs, got {rois}", self.id)
        if timepoints < 3:
            raise DatasetError(f"need at least 3 timepoints, got {timepoints}", self.id)
        bad = np.argwhere(~np.isfinite(series))
        if bad.size:
            r, t = bad[0]
            raise DatasetError(f"non-finite value at roi={r}, t={t}", self.id)
        series.flags.writeable = False
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "label", ClassLabel.parse(self.label))

    @property
    def roi_count(self) -> int:
        return self.series.shape[0]

    @property
    def timepoints(self) -> int:
        return self.series.shape[1]


def labels_of(records: Sequence[SubjectRecord]) -> np.ndarray:
    return np.array([int(r.label) for r in records], dtype=int)


# ── Manifest ────────────────────────────────────────────────────────────────

class ManifestEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    label: ClassLabel
    path: str
    extra: Dict[str, str] = Field(default_factory=dict, description="Pass-through demographics")

    @field_validator("label", mode="before")
    @classmethod
    def _parse_label(cls, v: Any) -> ClassLabel:
        return ClassLabel.parse(v)

    @field_serializer("label")
    def _label_name(self, v: ClassLabel) -> str:
        return v.name


class DatasetManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    subjects: List[ManifestEntry] = Field(default_factory=list)
    roi_count: PositiveInt
    seed: Optional[NonNegativeInt] = None

    @model_validator(mode="after")
    def _unique_ids(self) -> "DatasetManifest":
        seen = set()
        for s in self.subjects:
            if s.id in seen:
                raise ValueError(f"duplicate subject id: {s.id}")
            seen.add(s.id)
        return self


def read_manifest(manifest_path: Union[str, Path]) -> DatasetManifest:
    path = Path(manifest_path)
    if not path.is_file():
        raise DatasetError("manifest not found", location=str(path))
    try:
        return DatasetManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DatasetError(f"invalid manifest: {e}", location=str(path)) from e


# ── Series files ────────────────────────────────────────────────────────────

def read_series_csv(path: Union[str, Path], subject_id: Optional[str] = None) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise DatasetError("series file not found", subject_id, str(path))
    try:
        return np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except ValueError as e:
        raise DatasetError(f"unparseable series file: {e}", subject_id, str(path)) from e


def write_series_csv(series: np.ndarray, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.asarray(series, dtype=float), fmt=SERIES_FMT, delimiter=",")
    return path


def load_dataset(manifest_path: Union[str, Path]) -> List[SubjectRecord]:
    """Load every subject of a manifest, in manifest order, validating as we go."""
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent

    records: List[SubjectRecord] = []
    for entry in manifest.subjects:
        series_path = base / entry.path
        series = read_series_csv(series_path, entry.id)
        if series.shape[0] != manifest.roi_count:
            raise DatasetError(
                f"dimension mismatch: expected {manifest.roi_count} ROI rows, got {series.shape[0]}",
                entry.id,
                str(series_path),
            )
        try:
            records.append(SubjectRecord(entry.id, entry.label, series, dict(entry.extra)))
        except DatasetError as e:
            raise DatasetError(str(e), location=str(series_path)) from e

    logger.info("Loaded %d subjects from %s", len(records), manifest_path)
    return records


def save_dataset(
    records: Sequence[SubjectRecord],
    out_dir: Union[str, Path],
    seed: Optional[int] = None,
    roi_count: Optional[int] = None,
) -> Path:
    """Write series CSVs under `out_dir/series/` and a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    if roi_count is None:
        if not records:
            raise ValueError("roi_count is required when saving an empty dataset")
        roi_count = records[0].roi_count

    entries: List[ManifestEntry] = []
    for rec in records:
        if rec.roi_count != roi_count:
            raise DatasetError(f"dimension mismatch: expected {roi_count} ROIs, got {rec.roi_count}", rec.id)
        if "/" in rec.id or "\\" in rec.id:
            raise DatasetError("subject id cannot contain path separators", rec.id)
        rel = f"series/{rec.id}.csv"
        write_series_csv(rec.series, out_dir / rel)
        entries.append(ManifestEntry(id=rec.id, label=rec.label, path=rel, extra=dict(rec.extra)))

    manifest = DatasetManifest(subjects=entries, roi_count=roi_count, seed=seed)
    manifest_path = out_dir / MANIFEST_NAME
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    return manifest_path


# ── Synthetic cohort ────────────────────────────────────────────────────────

class BlockSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rois: List[NonNegativeInt] = Field(..., min_length=1)
    target: float = Field(..., gt=-1.0, lt=1.0, description="Intra-block Pearson target")


class SyntheticSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_per_class: Tuple[NonNegativeInt, NonNegativeInt, NonNegativeInt]
    roi_count: PositiveInt = 118
    timepoints: PositiveInt = 142
    class_block_structure: List[List[BlockSpec]] = Field(default_factory=lambda: [[], [], []])
    noise_sigma: PositiveFloat = 1.0
    seed: NonNegativeInt = 0

    @model_validator(mode="after")
    def _check_blocks(self) -> "SyntheticSpec":
        if len(self.class_block_structure) != N_CLASSES:
            raise ValueError(f"class_block_structure needs {N_CLASSES} entries (one per class)")
        if self.timepoints < 3:
            raise ValueError("timepoints must be at least 3")
        if self.roi_count < 2:
            raise ValueError("roi_count must be at least 2")
        for label, blocks in zip(ClassLabel, self.class_block_structure):
            used: set = set()
            for block in blocks:
                for roi in block.rois:
                    if roi >= self.roi_count:
                        raise ValueError(f"{label.name}: ROI index {roi} outside [0, {self.roi_count})")
                    if roi in used:
                        raise ValueError(f"{label.name}: ROI {roi} appears in more than one block")
                    used.add(roi)
        return self


def block_loading(target: float, noise_sigma: float) -> float:
    """Latent weight α with α² / (α² + σ²) = |target|."""
    t = abs(target)
    return noise_sigma * float(np.sqrt(t / (1.0 - t)))


def generate_synthetic(spec: SyntheticSpec) -> List[SubjectRecord]:
    """
    Each block shares a standard-normal latent signal; off-block ROIs are pure noise.
    Negative targets alternate the latent's sign inside the block, so neighbouring
    members anticorrelate.
    """
    rng = np.random.default_rng(spec.seed)
    records: List[SubjectRecord] = []
    for label, n_subjects, blocks in zip(ClassLabel, spec.n_per_class, spec.class_block_structure):
        for i in range(n_subjects):
            series = rng.standard_normal((spec.roi_count, spec.timepoints)) * spec.noise_sigma
            for block in blocks:
                z = rng.standard_normal(spec.timepoints)
                alpha = block_loading(block.target, spec.noise_sigma)
                signs = np.ones(len(block.rois))
                if block.target < 0:
                    signs[1::2] = -1.0
                series[block.rois] += alpha * signs[:, None] * z[None, :]
            records.append(SubjectRecord(f"{label.name}-{i:03d}", label, series))
    logger.info("Generated %d synthetic subjects (seed=%d)", len(records), spec.seed)
    return records


def demo_synthetic_spec(seed: int = 7, roi_count: int = 118, timepoints: int = 142) -> SyntheticSpec:
    """Separable 3-class cohort with the reference cohort sizes (60 HC, 58 SZ, 45 ADHD)."""
    if roi_count < 10:
        raise ValueError("demo cohort needs at least 10 ROIs")
    width = max(2, roi_count // 12)
    blocks = [
        [BlockSpec(rois=list(range(c * 2 * width, c * 2 * width + width)), target=0.8)]
        for c in range(N_CLASSES)
    ]
    return SyntheticSpec(
        n_per_class=(60, 58, 45),
        roi_count=roi_count,
        timepoints=timepoints,
        class_block_structure=blocks,
        noise_sigma=1.0,
        seed=seed,
    )
