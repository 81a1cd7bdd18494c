"""
Command-line entry point: `python main.py <subcommand> ...`.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError

from utils.log import configure_logging
from utils.reporting import write_edges_csv, write_history_csv, write_report

from .classifiers import AnfisMode, ClassifierConfig, Method, build_classifier, load_classifier
from .cnn_ae import (
    AutoencoderModel,
    build_autoencoder,
    extract_features,
    feature_matrix,
    finetune_classifier,
    format_summary,
    load_features_csv,
    load_model,
    save_features_csv,
    save_model,
    train_reconstruction,
)
from .connectivity import connectivity_matrices, export_heatmap, save_matrix_csv
from .data_model import (
    ClassLabel,
    SyntheticSpec,
    demo_synthetic_spec,
    generate_synthetic,
    labels_of,
    load_dataset,
    save_dataset,
)
from .errors import ConfigError, DatasetError, FuzzyConnectomeError
from .evaluation import (
    Average,
    AutoencoderFeatures,
    FeatureExtractor,
    IdentityFeatures,
    PrefittedFeatures,
    UpperTriangleFeatures,
    cross_validate,
    make_folds,
)
from .nn import OptimizerKind, TrainConfig
from .optimizers import MetaheuristicKind, MetaheuristicSpec, benchmark_objective, minimize
from .pipeline import FeatureSource, FitScope, load_config, method_name, run_pipeline, validate_config
from .stats import anova_by_label, chi_square_independence, contingency_by_label, edge_screen, read_roi_names

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


# ── Shared argument groups ──────────────────────────────────────────────────

def _add_train_args(p: argparse.ArgumentParser, epochs: int = 50, lr: float = 1e-3) -> None:
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--lr", type=float, default=lr)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--train-optimizer", choices=[k.value for k in OptimizerKind], default=OptimizerKind.ADAM.value)
    p.add_argument("--seed", type=int, default=0)


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        optimizer=args.train_optimizer,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )


def _add_metaheuristic_args(p: argparse.ArgumentParser, default: str = "none") -> None:
    p.add_argument("--optimizer", choices=[k.value for k in MetaheuristicKind] + ["none"], default=default)
    p.add_argument("--pop", type=int, default=None, help="population size (default per optimizer)")
    p.add_argument("--iters", type=int, default=400)


def _metaheuristic_spec(args: argparse.Namespace) -> Optional[MetaheuristicSpec]:
    if args.optimizer == "none":
        return None
    return MetaheuristicSpec(kind=args.optimizer, population=args.pop, max_iter=args.iters, seed=args.seed)


def _add_classifier_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=[m.value for m in Method], default=Method.IT2FR.value)
    _add_metaheuristic_args(p)
    p.add_argument("--clusters", type=int, default=3)
    p.add_argument("--fou-delta", type=float, default=0.2)
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--neighbors", type=int, default=3, help="k for knn")
    p.add_argument("--anfis-mode", choices=[m.value for m in AnfisMode], default=AnfisMode.HYBRID.value)
    p.add_argument("--seed", type=int, default=0)


def _classifier_config(args: argparse.Namespace) -> ClassifierConfig:
    return ClassifierConfig(
        method=args.method,
        clusters=args.clusters,
        fou_delta=args.fou_delta,
        ridge=args.ridge,
        k=args.neighbors,
        anfis_mode=args.anfis_mode,
        optimizer=_metaheuristic_spec(args),
        seed=args.seed,
    )


# ── Subcommands ─────────────────────────────────────────────────────────────

def cmd_synth(args: argparse.Namespace) -> int:
    if args.spec:
        spec = SyntheticSpec.model_validate_json(Path(args.spec).read_text(encoding="utf-8"))
    else:
        spec = demo_synthetic_spec(args.seed, args.rois, args.timepoints)
    manifest = save_dataset(generate_synthetic(spec), args.out, spec.seed, spec.roi_count)
    print(f"✅ {manifest} created ({sum(spec.n_per_class)} subjects).")
    return EXIT_OK


def cmd_connect(args: argparse.Namespace) -> int:
    records = load_dataset(args.manifest)
    out = Path(args.out)
    for matrix in connectivity_matrices(records):
        save_matrix_csv(matrix, out / f"{matrix.subject_id}.csv")
        if args.heatmaps:
            export_heatmap(matrix, out / f"{matrix.subject_id}.ppm")
    print(f"✅ {len(records)} connectivity matrices written to {out}.")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    if args.test != "screen" and not args.column:
        raise ConfigError(f"stats {args.test} needs --column")
    records = load_dataset(args.manifest)
    if args.test == "anova":
        res = anova_by_label(records, args.column)
        print(f"F({res.df_between}, {res.df_within}) = {res.f_stat:.4f}, p = {res.p_value:.4g}")
    elif args.test == "chisq":
        res = chi_square_independence(contingency_by_label(records, args.column))
        print(f"chi2({res.df}) = {res.statistic:.4f}, p = {res.p_value:.4g}")
    else:
        edges = edge_screen(connectivity_matrices(records), labels_of(records), args.alpha)
        names = read_roi_names(args.roi_names) if args.roi_names else ()
        path = write_edges_csv(edges, args.out, names)
        print(f"✅ {path} created ({len(edges)} edges at alpha={args.alpha}).")
    return EXIT_OK


def cmd_train_ae(args: argparse.Namespace) -> int:
    if args.manifest is None:
        if not args.summary:
            raise ConfigError("train-ae needs --manifest (or --summary on its own)")
        print(format_summary(build_autoencoder(args.input_size or 118, args.seed)))
        return EXIT_OK
    records = load_dataset(args.manifest)
    matrices = connectivity_matrices(records)
    model = build_autoencoder(args.input_size or records[0].roi_count, args.seed)
    if args.summary:
        print(format_summary(model))
    _, history = train_reconstruction(model, matrices, _train_config(args))
    path = save_model(model, args.out)
    write_history_csv(history, Path(args.out).with_suffix(".loss.csv"), "loss")
    print(f"✅ {path} created (final loss {history[-1]:.6g}).")
    return EXIT_OK


def cmd_finetune(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    if not isinstance(model, AutoencoderModel):
        raise ConfigError(f"{args.model} is not an autoencoder checkpoint")
    records = load_dataset(args.manifest)
    tuned, curve = finetune_classifier(
        model, connectivity_matrices(records), labels_of(records), _train_config(args), args.freeze_encoder
    )
    path = save_model(tuned, args.out)
    write_history_csv(curve, Path(args.out).with_suffix(".accuracy.csv"), "accuracy")
    print(f"✅ {path} created (training accuracy {curve[-1]:.4f}).")
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    encoder = load_model(args.model)
    records = load_dataset(args.manifest)
    features = extract_features(encoder, connectivity_matrices(records), labels_of(records))
    path = save_features_csv(features, args.out)
    print(f"✅ {path} created ({len(features)} × {features[0].values.size if features else 0}).")
    return EXIT_OK


def _labelled_features(path: str):
    vectors = load_features_csv(path)
    if any(v.label is None for v in vectors):
        raise DatasetError("every row needs a label", location=path)
    return feature_matrix(vectors), np.array([int(v.label) for v in vectors], dtype=int)


def cmd_fit_classifier(args: argparse.Namespace) -> int:
    x, y = _labelled_features(args.features)
    clf = build_classifier(_classifier_config(args)).fit(x, y)
    path = clf.save(args.out)
    accuracy = float((clf.predict(x) == y).mean())
    print(f"✅ {path} created (training accuracy {accuracy:.4f}).")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    clf = load_classifier(args.model)
    vectors = load_features_csv(args.features)
    pred = clf.predict(feature_matrix(vectors))
    lines = ["subject_id,predicted"] + [f"{v.subject_id},{ClassLabel(int(p)).name}" for v, p in zip(vectors, pred)]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"✅ {out} created ({len(vectors)} predictions).")
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    spec = _metaheuristic_spec(args)
    if spec is None:
        raise ConfigError("optimize needs --optimizer ga|pso|gwo")
    result = minimize(benchmark_objective(args.function, args.dim), spec)
    print(f"{spec.kind.value} on {args.function}-{args.dim}: best {result.best_score:.6g} after {spec.max_iter} iterations")
    if args.out:
        write_history_csv(result.history, args.out, "best")
        print(f"✅ {args.out} created.")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    if (args.manifest is None) == (args.features is None):
        raise ConfigError("evaluate needs exactly one of --manifest or --features")
    extractor: FeatureExtractor
    if args.features:
        samples, labels = _labelled_features(args.features)
        extractor = IdentityFeatures()
    else:
        records = load_dataset(args.manifest)
        samples, labels = connectivity_matrices(records), labels_of(records)
        if args.source == FeatureSource.RAW_UPPER_TRIANGLE.value:
            extractor = UpperTriangleFeatures()
        else:
            train = _train_config(args)
            finetune = train.model_copy(update={"epochs": args.finetune_epochs}) if args.finetune_epochs > 0 else None
            extractor = AutoencoderFeatures(samples[0].roi_count, train, finetune, args.freeze_encoder)
            if args.fit_scope == FitScope.ALL.value:
                extractor = PrefittedFeatures(extractor.fit(samples, labels, args.seed))

    config = _classifier_config(args)
    plan = make_folds(labels, args.folds, args.seed)
    report = cross_validate(
        samples, labels, extractor, lambda seed: build_classifier(config.with_seed(seed)),
        plan, args.average, method_name(config),
    )
    out = Path(args.out)
    write_report([report], out, "csv")
    write_report([report], out.with_suffix(".txt"), "table")
    report.confusion.save_csv(out.with_suffix(".confusion.csv"))
    report.confusion.export_heatmap(out.with_suffix(".confusion.ppm"))
    m, s = report.mean, report.std
    print(f"{report.method}: accuracy {m.accuracy:.4f} ± {s.accuracy:.4f} (pooled {report.pooled.accuracy:.4f})")
    print(f"✅ {out} created.")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.out:
        config.output_dir = args.out
    result = run_pipeline(config)
    if result.cache_hits:
        print(f"♻️  reused cached stage(s): {', '.join(result.cache_hits)}")
    print(f"✅ pipeline finished; artifacts in {result.output_dir}.")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    diagnostics = validate_config(args.config)
    if diagnostics:
        for d in diagnostics:
            print(f"❌ {d}")
        return EXIT_INVALID
    print(f"✅ {args.config} is valid.")
    return EXIT_OK


# ── Parser ──────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzzy-connectome", description="Connectome classification pipeline")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("--spec", help="SyntheticSpec JSON (default: the separable demo cohort)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--rois", type=int, default=118)
    p.add_argument("--timepoints", type=int, default=142)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("connect", help="Pearson connectivity matrices")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--heatmaps", action="store_true")
    p.set_defaults(func=cmd_connect)

    p = sub.add_parser("stats", help="anova | chisq | screen")
    p.add_argument("test", choices=["anova", "chisq", "screen"])
    p.add_argument("--manifest", required=True)
    p.add_argument("--column", help="manifest extra column (anova, chisq)")
    p.add_argument("--alpha", type=float, default=0.0005)
    p.add_argument("--roi-names")
    p.add_argument("--out", default="edges.csv")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train-ae", help="train the convolutional autoencoder")
    p.add_argument("--manifest")
    p.add_argument("--out", default="autoencoder.fcnn")
    p.add_argument("--input-size", type=int)
    p.add_argument("--summary", action="store_true", help="print the per-layer table")
    _add_train_args(p)
    p.set_defaults(func=cmd_train_ae)

    p = sub.add_parser("finetune", help="fine-tune the encoder with a softmax head")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", default="finetuned.fcnn")
    p.add_argument("--freeze-encoder", action="store_true")
    _add_train_args(p, epochs=20)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("extract", help="bottleneck features to CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", default="features.csv")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fit-classifier", help="fit a classifier on a features CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--out", default="model.json")
    _add_classifier_args(p)
    p.set_defaults(func=cmd_fit_classifier)

    p = sub.add_parser("predict", help="apply a saved classifier")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", default="predictions.csv")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("optimize", help="run an optimizer on a benchmark function")
    p.add_argument("--function", default="sphere")
    p.add_argument("--dim", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    _add_metaheuristic_args(p, default=MetaheuristicKind.GWO.value)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="k-fold cross-validation")
    p.add_argument("--manifest")
    p.add_argument("--features")
    p.add_argument("--source", choices=[s.value for s in FeatureSource], default=FeatureSource.CNN_AE.value)
    p.add_argument("--fit-scope", choices=[s.value for s in FitScope], default=FitScope.FOLD.value)
    p.add_argument("--k", dest="folds", type=int, default=10, help="number of folds")
    p.add_argument("--average", choices=[a.value for a in Average], default=Average.MACRO.value)
    p.add_argument("--out", default="report.csv")
    _add_classifier_args(p)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--finetune-epochs", type=int, default=20, help="softmax fine-tuning before extraction; 0 skips it")
    p.add_argument("--freeze-encoder", action="store_true")
    p.add_argument("--train-optimizer", choices=[k.value for k in OptimizerKind], default=OptimizerKind.ADAM.value)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override output_dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a config file without running it")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"❌ {e}", file=sys.stderr)
        for d in e.diagnostics:
            print(f"   {d}", file=sys.stderr)
        return EXIT_INVALID
    except (DatasetError, ValidationError, ValueError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_INVALID
    except FuzzyConnectomeError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception("unexpected failure")
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_RUNTIME
