"""
End-to-end pipeline: dataset → connectivity → edge screen → autoencoder →
features → classifier → cross-validation, driven by one JSON config file.

Every stage writes into its own cache directory keyed by the content hash of
its inputs; a rerun with an identical config reuses those directories.
"""

from __future__ import annotations

import json
import logging
import shutil
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt, ValidationError, model_validator

from utils.caching import RunLock, StageCache, cache_root, content_key, file_digest
from utils.reporting import write_edges_csv, write_history_csv, write_report

from .classifiers import ClassifierConfig, ConstantClassifier, Method, build_classifier
from .cnn_ae import (
    FeatureVector,
    build_autoencoder,
    finetune_classifier,
    format_summary,
    load_model,
    save_features_csv,
    save_model,
    train_reconstruction,
)
from .connectivity import ConnectivityMatrix, connectivity_matrices
from .data_model import (
    ClassLabel,
    DatasetManifest,
    SubjectRecord,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    save_dataset,
)
from .errors import ConfigError, ShapeError, StageError
from .evaluation import (
    Average,
    AutoencoderFeatures,
    EvalReport,
    FeatureExtractor,
    PrefittedFeatures,
    UpperTriangleFeatures,
    cross_validate,
    make_folds,
)
from .nn import TrainConfig
from .stats import edge_screen

logger = logging.getLogger(__name__)

PIPELINE_VERSION = 1
PUBLISHED = ("report.csv", "report.txt", "confusion.csv", "confusion.ppm", "predictions.csv",
             "model.json", "features.csv", "edges.csv")


# ── Config ──────────────────────────────────────────────────────────────────

class FeatureSource(str, Enum):
    CNN_AE = "cnn_ae"
    RAW_UPPER_TRIANGLE = "raw_upper_triangle"


class FitScope(str, Enum):
    FOLD = "fold"
    ALL = "all"


class DataSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    manifest: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None

    @model_validator(mode="after")
    def _one_source(self) -> "DataSection":
        if (self.manifest is None) == (self.synthetic is None):
            raise ValueError("exactly one of 'manifest' or 'synthetic' is required")
        return self


class AutoencoderSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    input_size: Optional[PositiveInt] = Field(None, description="Defaults to the dataset's ROI count")
    train: TrainConfig = Field(default_factory=lambda: TrainConfig(epochs=20))
    finetune: Optional[TrainConfig] = Field(
        default_factory=lambda: TrainConfig(epochs=20),
        description="Encoder + softmax fine-tuning before extraction; null extracts from the reconstruction encoder",
    )
    freeze_encoder: bool = False
    fit_scope: FitScope = FitScope.FOLD


class FeaturesSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    source: FeatureSource = FeatureSource.CNN_AE


class EvaluationSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k: int = Field(10, ge=2)
    seed: NonNegativeInt = 0
    average: Average = Average.MACRO
    control: bool = Field(True, description="Also evaluate the constant-label classifier")


class StatsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    enabled: bool = True
    alpha: float = Field(0.0005, gt=0.0, le=1.0)


class PipelineConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data: DataSection
    autoencoder: AutoencoderSection = Field(default_factory=AutoencoderSection)
    features: FeaturesSection = Field(default_factory=FeaturesSection)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    stats: StatsSection = Field(default_factory=StatsSection)
    output_dir: str = "runs/latest"


def _diagnostics(error: ValidationError) -> List[str]:
    out: List[str] = []
    for e in error.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        out.append(f"{loc}: {e['msg']}")
    return out


def _read_document(path: Path) -> Any:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return {}
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e


def _semantic_checks(config: PipelineConfig, base_dir: Path) -> List[str]:
    out: List[str] = []
    if config.data.manifest is not None and not (base_dir / config.data.manifest).is_file():
        out.append(f"data.manifest: file not found: {config.data.manifest}")
    syn = config.data.synthetic
    if syn is not None:
        if sum(syn.n_per_class) < config.evaluation.k:
            out.append(f"evaluation.k: {config.evaluation.k} folds exceed the {sum(syn.n_per_class)} synthetic subjects")
        size = config.autoencoder.input_size
        if config.features.source is FeatureSource.CNN_AE and size is not None and size != syn.roi_count:
            out.append(f"autoencoder.input_size: {size} does not match synthetic roi_count {syn.roi_count}")
    return out


def validate_config(path: Union[str, Path]) -> List[str]:
    """Every violation in the file, without running anything. Unparseable files raise ConfigError."""
    path = Path(path)
    doc = _read_document(path)
    if not isinstance(doc, dict):
        return ["<root>: expected a JSON object"]
    try:
        config = PipelineConfig.model_validate(doc)
    except ValidationError as e:
        return _diagnostics(e)
    return _semantic_checks(config, path.parent)


def load_config(path: Union[str, Path]) -> PipelineConfig:
    path = Path(path)
    diagnostics = validate_config(path)
    if diagnostics:
        raise ConfigError(f"{path}: {len(diagnostics)} problem(s)", diagnostics)
    config = PipelineConfig.model_validate(_read_document(path))
    if config.data.manifest is not None:
        config.data.manifest = str((path.parent / config.data.manifest).resolve())
    return config


# ── Helpers ─────────────────────────────────────────────────────────────────

def method_name(classifier: ClassifierConfig) -> str:
    """it2fr-gwo, anfis-hybrid, knn, ..."""
    name = classifier.method.value
    if classifier.method in (Method.IT2FR, Method.ANFIS):
        if classifier.optimizer is not None:
            name += f"-{classifier.optimizer.kind.value}"
        elif classifier.method is Method.ANFIS:
            name += f"-{classifier.anfis_mode.value}"
    return name


def _save_matrices(matrices: Sequence[ConnectivityMatrix], records: Sequence[SubjectRecord], out_dir: Path) -> None:
    np.save(out_dir / "matrices.npy", np.stack([m.values for m in matrices]))
    subjects = {"ids": [r.id for r in records], "labels": [r.label.name for r in records]}
    (out_dir / "subjects.json").write_text(json.dumps(subjects), encoding="utf-8")


def _load_matrices(out_dir: Path) -> Tuple[List[ConnectivityMatrix], np.ndarray]:
    values = np.load(out_dir / "matrices.npy")
    subjects = json.loads((out_dir / "subjects.json").read_text(encoding="utf-8"))
    matrices = [ConnectivityMatrix(v, sid) for v, sid in zip(values, subjects["ids"])]
    labels = np.array([int(ClassLabel.parse(l)) for l in subjects["labels"]], dtype=int)
    return matrices, labels


def _write_predictions(report: EvalReport, subject_ids: Sequence[str], labels: np.ndarray, path: Path) -> None:
    lines = ["subject_id,true,predicted"]
    for sid, t, p in zip(subject_ids, labels, report.predictions):
        lines.append(f"{sid},{ClassLabel(int(t)).name},{ClassLabel(int(p)).name}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ── Runner ──────────────────────────────────────────────────────────────────

@dataclass
class PipelineResult:
    output_dir: Path
    artifacts: Dict[str, Path] = field(default_factory=dict)
    cache_hits: List[str] = field(default_factory=list)
    reports: List[EvalReport] = field(default_factory=list)


class _StageRunner:
    def __init__(self, cache: StageCache, result: PipelineResult):
        self.cache = cache
        self.result = result
        self.last_good: Optional[Path] = None

    def run(self, stage: str, key: str, build: Callable[[Path], None]) -> Path:
        if self.cache.is_complete(stage, key):
            d = self.cache.stage_dir(stage, key)
            logger.info("cache hit: %s (%s)", stage, key[:12])
            self.result.cache_hits.append(stage)
        else:
            logger.info("running stage: %s", stage)
            d = self.cache.prepare(stage, key)
            try:
                build(d)
            except Exception as e:
                raise StageError(stage, e, str(self.last_good) if self.last_good else None) from e
            self.cache.mark_complete(stage, key)
        self.last_good = d
        self.result.artifacts[stage] = d
        return d


def _dataset_key(config: PipelineConfig) -> str:
    if config.data.synthetic is not None:
        return content_key(PIPELINE_VERSION, "dataset", config.data.synthetic.model_dump(mode="json"))
    manifest_path = Path(config.data.manifest)
    manifest = DatasetManifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
    digests = [file_digest(manifest_path.parent / s.path) for s in manifest.subjects]
    return content_key(PIPELINE_VERSION, "dataset", file_digest(manifest_path), digests)


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """
    Run every stage in dependency order and publish the final artifacts into
    `config.output_dir`. A failing stage raises StageError naming the stage and
    the directory of the last stage that completed.
    """
    out_dir = Path(config.output_dir)
    result = PipelineResult(out_dir)
    runner = _StageRunner(StageCache(cache_root(out_dir)), result)

    with RunLock(out_dir):
        # 1) dataset
        ds_key = _dataset_key(config)

        def build_dataset(d: Path) -> None:
            if config.data.synthetic is not None:
                records = generate_synthetic(config.data.synthetic)
                save_dataset(records, d, config.data.synthetic.seed, config.data.synthetic.roi_count)
            else:
                records = load_dataset(config.data.manifest)
                save_dataset(records, d, None, records[0].roi_count if records else None)

        ds_dir = runner.run("dataset", ds_key, build_dataset)

        # 2) connectivity
        conn_key = content_key(PIPELINE_VERSION, "connect", ds_key)

        def build_connect(d: Path) -> None:
            records = load_dataset(ds_dir / "manifest.json")
            _save_matrices(connectivity_matrices(records), records, d)

        conn_dir = runner.run("connect", conn_key, build_connect)
        matrices, labels = _load_matrices(conn_dir)
        subject_ids = [m.subject_id for m in matrices]
        roi_count = matrices[0].roi_count if matrices else 0

        # 3) edge screen
        if config.stats.enabled:
            def build_stats(d: Path) -> None:
                write_edges_csv(edge_screen(matrices, labels, config.stats.alpha), d / "edges.csv")

            runner.run("stats", content_key(PIPELINE_VERSION, "stats", conn_key, config.stats.alpha), build_stats)

        # 4) autoencoder on every subject (the deployable encoder)
        ae = config.autoencoder
        input_size = ae.input_size or roi_count
        ae_key: Optional[str] = None
        global_extractor: FeatureExtractor = UpperTriangleFeatures()
        if config.features.source is FeatureSource.CNN_AE:
            ae_key = content_key(PIPELINE_VERSION, "autoencoder", conn_key, ae.model_dump(mode="json"), input_size)

            def build_autoencoder_stage(d: Path) -> None:
                if input_size != roi_count:
                    raise ShapeError(f"autoencoder input_size {input_size} does not match ROI count {roi_count}")
                model = build_autoencoder(input_size, ae.train.seed)
                (d / "summary.txt").write_text(format_summary(model) + "\n", encoding="utf-8")
                _, history = train_reconstruction(model, matrices, ae.train)
                save_model(model, d / "autoencoder.fcnn")
                write_history_csv(history, d / "loss_history.csv", "loss")
                if ae.finetune is not None:
                    tuned, curve = finetune_classifier(model, matrices, labels, ae.finetune, ae.freeze_encoder)
                    save_model(tuned, d / "finetuned.fcnn")
                    write_history_csv(curve, d / "finetune_accuracy.csv", "accuracy")

            ae_dir = runner.run("autoencoder", ae_key, build_autoencoder_stage)
            encoder_path = ae_dir / ("finetuned.fcnn" if ae.finetune is not None else "autoencoder.fcnn")
            global_extractor = AutoencoderFeatures.from_encoder(load_model(encoder_path))

        # 5) features for every subject
        feat_key = content_key(PIPELINE_VERSION, "features", conn_key, config.features.source.value, ae_key)

        def build_features(d: Path) -> None:
            values = global_extractor.transform(matrices)
            vectors = [FeatureVector(row, sid, ClassLabel(int(l))) for row, sid, l in zip(values, subject_ids, labels)]
            save_features_csv(vectors, d / "features.csv")

        feat_dir = runner.run("features", feat_key, build_features)

        # 6) final classifier on every subject
        clf_key = content_key(PIPELINE_VERSION, "classifier", feat_key, config.classifier.model_dump(mode="json"))

        def build_classifier_stage(d: Path) -> None:
            build_classifier(config.classifier).fit(global_extractor.transform(matrices), labels).save(d / "model.json")

        clf_dir = runner.run("classifier", clf_key, build_classifier_stage)

        # 7) cross-validation
        eval_key = content_key(
            PIPELINE_VERSION, "evaluate", conn_key,
            config.features.model_dump(mode="json"),
            ae.model_dump(mode="json") if ae_key else None,
            config.classifier.model_dump(mode="json"),
            config.evaluation.model_dump(mode="json"),
        )

        def build_evaluate(d: Path) -> None:
            ev = config.evaluation
            plan = make_folds(labels, ev.k, ev.seed)
            if ae_key is None:
                extractor: FeatureExtractor = UpperTriangleFeatures()
            elif ae.fit_scope is FitScope.ALL:
                extractor = PrefittedFeatures(global_extractor)
            else:
                extractor = AutoencoderFeatures(input_size, ae.train, ae.finetune, ae.freeze_encoder)

            reports = [cross_validate(
                matrices, labels, extractor,
                lambda seed: build_classifier(config.classifier.with_seed(seed)),
                plan, ev.average, method_name(config.classifier),
            )]
            if ev.control:
                reports.append(cross_validate(
                    matrices, labels, UpperTriangleFeatures(),
                    lambda seed: ConstantClassifier(config.classifier.constant_label),
                    plan, ev.average, Method.CONSTANT.value,
                ))
            write_report(reports, d / "report.csv", "csv")
            write_report(reports, d / "report.txt", "table")
            reports[0].confusion.save_csv(d / "confusion.csv")
            reports[0].confusion.export_heatmap(d / "confusion.ppm")
            _write_predictions(reports[0], subject_ids, labels, d / "predictions.csv")
            result.reports = reports

        eval_dir = runner.run("evaluate", eval_key, build_evaluate)

        # 8) publish
        out_dir.mkdir(parents=True, exist_ok=True)
        for stage_dir in (eval_dir, clf_dir, feat_dir, result.artifacts.get("stats")):
            if stage_dir is None:
                continue
            for name in PUBLISHED:
                src = stage_dir / name
                if src.exists():
                    shutil.copyfile(src, out_dir / name)
                    result.artifacts[name] = out_dir / name
        if "autoencoder" in result.artifacts:
            shutil.copyfile(result.artifacts["autoencoder"] / "summary.txt", out_dir / "autoencoder_summary.txt")

    logger.info("pipeline finished: %d stage(s) from cache, outputs in %s", len(result.cache_hits), out_dir)
    return result
