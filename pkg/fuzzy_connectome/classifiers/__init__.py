import json
from pathlib import Path
from typing import Dict, Type, Union

from .anfis import AnfisClassifier, AnfisModel, anfis_fit, anfis_predict
from .base import MODEL_FORMAT, MODEL_VERSION, AnfisMode, BaseClassifier, ClassifierConfig, Method
from .constant import ConstantClassifier
from .it2fr import IT2FRClassifier, IT2FRModel, TypeReducedOutput, classify, fit_classifier, fit_init, predict
from .knn import KnnClassifier, knn_classify
from .mlp import MlpClassifier, mlp_classify, mlp_fit

CLASSIFIERS: Dict[Method, Type[BaseClassifier]] = {
    Method.IT2FR: IT2FRClassifier,
    Method.ANFIS: AnfisClassifier,
    Method.KNN: KnnClassifier,
    Method.MLP: MlpClassifier,
    Method.CONSTANT: ConstantClassifier,
}


def build_classifier(config: ClassifierConfig) -> BaseClassifier:
    """Fresh, unfitted classifier for a config."""
    if config.method in (Method.IT2FR, Method.ANFIS):
        return CLASSIFIERS[config.method](config)
    if config.method is Method.KNN:
        return KnnClassifier(config.k)
    if config.method is Method.MLP:
        return MlpClassifier(config.mlp)
    return ConstantClassifier(config.constant_label)


def load_classifier(path: Union[str, Path]) -> BaseClassifier:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a classifier model file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {doc.get('version')}")
    return CLASSIFIERS[Method(doc["method"])].from_dict(doc["model"])


__all__ = [
    "AnfisClassifier",
    "AnfisMode",
    "AnfisModel",
    "BaseClassifier",
    "CLASSIFIERS",
    "ClassifierConfig",
    "ConstantClassifier",
    "IT2FRClassifier",
    "IT2FRModel",
    "KnnClassifier",
    "Method",
    "MlpClassifier",
    "TypeReducedOutput",
    "anfis_fit",
    "anfis_predict",
    "build_classifier",
    "classify",
    "fit_classifier",
    "fit_init",
    "knn_classify",
    "load_classifier",
    "mlp_classify",
    "mlp_fit",
    "predict",
]
