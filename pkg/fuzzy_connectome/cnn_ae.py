"""
Convolutional autoencoder over connectivity matrices, encoder fine-tuning
with a softmax head, and bottleneck feature extraction.

Encoder: three (Conv2D 3×3 + ReLU + ceil MaxPool 2×2) blocks, channels
1→32→32→1. Decoder mirrors it with nearest upsampling, then center-crops to
the input size before a final Conv2D + Tanh. At input 118 the bottleneck is
15×15 and the stack holds 19,724 parameters.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .connectivity import ConnectivityMatrix
from .data_model import N_CLASSES, ClassLabel
from .errors import ShapeError
from .nn import (
    CenterCrop,
    Conv2D,
    Dense,
    MaxPool2x2,
    ReLU,
    Sequential,
    Softmax,
    Tanh,
    TrainConfig,
    UpsampleNearest2x,
    cross_entropy_loss,
    fit,
    load_checkpoint,
    mse_loss,
    one_hot,
    save_checkpoint,
)

logger = logging.getLogger(__name__)

MIN_INPUT_SIZE = 8
HIDDEN_CHANNELS = 32
AUTOENCODER_KIND = "autoencoder"
FINETUNED_KIND = "finetuned_encoder"

MatrixLike = Union[ConnectivityMatrix, np.ndarray]


def _ceil_half(n: int) -> int:
    return -(-n // 2)


def bottleneck_side(input_size: int) -> int:
    return _ceil_half(_ceil_half(_ceil_half(input_size)))


# ── Models ──────────────────────────────────────────────────────────────────

@dataclass
class AutoencoderModel:
    encoder: Sequential
    decoder: Sequential
    input_size: int

    @property
    def network(self) -> Sequential:
        """Encoder and decoder chained; shares layer objects with both."""
        return Sequential(self.encoder.layers + self.decoder.layers)

    @property
    def bottleneck_size(self) -> int:
        return bottleneck_side(self.input_size)

    @property
    def n_params(self) -> int:
        return self.encoder.n_params + self.decoder.n_params

    def reconstruct(self, matrices: Sequence[MatrixLike]) -> np.ndarray:
        x = to_input_tensor(matrices, self.input_size)
        return self.network.predict(x)[..., 0]


@dataclass
class FineTunedEncoder:
    encoder: Sequential
    head: Sequential
    input_size: int

    @property
    def network(self) -> Sequential:
        return Sequential(self.encoder.layers + self.head.layers)

    def predict_proba(self, matrices: Sequence[MatrixLike]) -> np.ndarray:
        return self.network.predict(to_input_tensor(matrices, self.input_size))

    def classify(self, matrices: Sequence[MatrixLike]) -> List[ClassLabel]:
        return [ClassLabel(int(i)) for i in self.predict_proba(matrices).argmax(axis=1)]


def build_autoencoder(input_size: int = 118, seed: int = 0) -> AutoencoderModel:
    if input_size < MIN_INPUT_SIZE:
        raise ValueError(f"input_size {input_size} too small for three poolings (need ≥ {MIN_INPUT_SIZE})")
    rng = np.random.default_rng(seed)
    encoder = Sequential([
        Conv2D(1, HIDDEN_CHANNELS, rng), ReLU(), MaxPool2x2(),
        Conv2D(HIDDEN_CHANNELS, HIDDEN_CHANNELS, rng), ReLU(), MaxPool2x2(),
        Conv2D(HIDDEN_CHANNELS, 1, rng), ReLU(), MaxPool2x2(),
    ])
    decoder = Sequential([
        Conv2D(1, 1, rng), ReLU(), UpsampleNearest2x(),
        Conv2D(1, HIDDEN_CHANNELS, rng), ReLU(), UpsampleNearest2x(),
        Conv2D(HIDDEN_CHANNELS, HIDDEN_CHANNELS, rng), ReLU(), UpsampleNearest2x(),
        CenterCrop(input_size),
        Conv2D(HIDDEN_CHANNELS, 1, rng), Tanh(),
    ])
    return AutoencoderModel(encoder, decoder, input_size)


class LayerRow(NamedTuple):
    layer: str
    output_shape: Tuple[int, ...]
    params: int


def layer_summary(model: AutoencoderModel) -> List[LayerRow]:
    """Per-layer output shape and parameter count, encoder then decoder."""
    network = model.network
    shapes = network.output_shapes((model.input_size, model.input_size, 1))
    return [LayerRow(layer.kind.value, shape, layer.n_params) for layer, shape in zip(network.layers, shapes)]


def format_summary(model: AutoencoderModel) -> str:
    rows = layer_summary(model)
    lines = [f"{'Layer':<20}{'Output Shape':<18}{'Param':>8}"]
    for row in rows:
        lines.append(f"{row.layer:<20}{str(row.output_shape):<18}{row.params:>8}")
    lines.append(f"{'Total':<38}{sum(r.params for r in rows):>8}")
    return "\n".join(lines)


# ── Inputs ──────────────────────────────────────────────────────────────────

def to_input_tensor(matrices: Sequence[MatrixLike], input_size: int) -> np.ndarray:
    arrays = [m.values if isinstance(m, ConnectivityMatrix) else np.asarray(m, dtype=float) for m in matrices]
    for i, a in enumerate(arrays):
        if a.shape != (input_size, input_size):
            raise ShapeError(f"matrix {i} has shape {a.shape}, model expects {input_size}×{input_size}")
    if not arrays:
        return np.zeros((0, input_size, input_size, 1))
    return np.stack(arrays)[..., None]


# ── Training ────────────────────────────────────────────────────────────────

def bottleneck_collapsed(features: np.ndarray) -> bool:
    """True when every input maps to the same bottleneck vector."""
    f = np.asarray(features, dtype=float).reshape(len(features), -1)
    return f.shape[0] > 1 and not np.any(np.ptp(f, axis=0) > 0)


class BottleneckGuard:
    """
    Epoch callback for `fit`. Once the encoder sends every training input to
    the same bottleneck vector (the one-channel ReLU went dead), the weights
    roll back to the last epoch with a varying bottleneck and training stops.
    """

    def __init__(self, network: Sequential, encoder: Sequential, x: np.ndarray):
        self.network = network
        self.encoder = encoder
        self.x = x
        self.rolled_back_at: Optional[int] = None
        self.active = not bottleneck_collapsed(encoder.predict(x))
        if not self.active:
            logger.warning("bottleneck is already constant on the training inputs; guard disabled")
        self._snapshot = self._take()

    def _take(self) -> List[Dict[str, np.ndarray]]:
        return [{k: v.copy() for k, v in layer.params.items()} for layer in self.network.layers]

    def _restore(self) -> None:
        for layer, saved in zip(self.network.layers, self._snapshot):
            for k, v in saved.items():
                layer.params[k][...] = v

    def __call__(self, epoch: int, loss: float) -> bool:
        if not self.active:
            return False
        if bottleneck_collapsed(self.encoder.predict(self.x)):
            self._restore()
            self.rolled_back_at = epoch
            logger.warning("bottleneck collapsed in epoch %d; weights rolled back, training stopped", epoch + 1)
            return True
        self._snapshot = self._take()
        return False


def train_reconstruction(
    model: AutoencoderModel,
    matrices: Sequence[MatrixLike],
    config: TrainConfig,
) -> Tuple[AutoencoderModel, List[float]]:
    """
    Minimize mean squared reconstruction error in place; returns the loss of
    every epoch run. Stops early if the bottleneck collapses.
    """
    x = to_input_tensor(matrices, model.input_size)
    network = model.network
    history = fit(network, x, x, mse_loss, config, on_epoch=BottleneckGuard(network, model.encoder, x))
    logger.info("reconstruction: %d epochs, loss %.6g → %.6g", len(history), history[0], history[-1])
    return model, history


def finetune_classifier(
    model: AutoencoderModel,
    matrices: Sequence[MatrixLike],
    labels: Sequence[Union[ClassLabel, int]],
    config: TrainConfig,
    freeze_encoder: bool = False,
    require_all_classes: bool = True,
) -> Tuple[FineTunedEncoder, List[float]]:
    """
    Drop the decoder, attach Dense(bottleneck²→3) + Softmax and train with
    cross-entropy. Works on a copy of the encoder; `model` is left untouched.
    Returns the tuned encoder and the per-epoch training accuracy.
    """
    y = np.array([int(l) for l in labels], dtype=int)
    if require_all_classes:
        missing = [c.name for c in ClassLabel if c not in set(y.tolist())]
        if missing:
            raise ValueError(f"fine-tuning needs every class; missing {', '.join(missing)}")
    x = to_input_tensor(matrices, model.input_size)
    if x.shape[0] != y.size:
        raise ValueError("matrices and labels differ in length")

    encoder = model.encoder.clone()
    encoder.set_trainable(not freeze_encoder)
    side = model.bottleneck_size
    rng = np.random.default_rng(config.seed)
    head = Sequential([Dense(side * side, N_CLASSES, rng), Softmax()])
    tuned = FineTunedEncoder(encoder, head, model.input_size)
    network = tuned.network

    curve: List[float] = []
    guard = BottleneckGuard(network, encoder, x)

    def record_accuracy(epoch: int, loss: float) -> bool:
        stop = guard(epoch, loss)
        pred = network.predict(x).argmax(axis=1)
        curve.append(float((pred == y).mean()))
        return stop

    fit(network, x, one_hot(y, N_CLASSES), cross_entropy_loss, config, on_epoch=record_accuracy)
    logger.info("fine-tune: %d epochs, final training accuracy %.4f", len(curve), curve[-1])
    return tuned, curve


# ── Features ────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    subject_id: str = ""
    label: Optional[ClassLabel] = None


def encode(encoder: Union[FineTunedEncoder, AutoencoderModel], matrices: Sequence[MatrixLike]) -> np.ndarray:
    """Flattened post-pool bottleneck per input, row-major."""
    x = to_input_tensor(matrices, encoder.input_size)
    if x.shape[0] == 0:
        return np.zeros((0, bottleneck_side(encoder.input_size) ** 2))
    return encoder.encoder.predict(x).reshape(x.shape[0], -1)


def extract_features(
    encoder: Union[FineTunedEncoder, AutoencoderModel],
    matrices: Sequence[MatrixLike],
    labels: Optional[Sequence[Union[ClassLabel, int]]] = None,
) -> List[FeatureVector]:
    values = encode(encoder, matrices)
    out: List[FeatureVector] = []
    for i, (m, row) in enumerate(zip(matrices, values)):
        sid = m.subject_id if isinstance(m, ConnectivityMatrix) else str(i)
        label = ClassLabel.parse(labels[i]) if labels is not None else None
        out.append(FeatureVector(row, sid, label))
    return out


def feature_matrix(features: Sequence[FeatureVector]) -> np.ndarray:
    return np.stack([f.values for f in features]) if features else np.zeros((0, 0))


def save_features_csv(features: Sequence[FeatureVector], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    width = features[0].values.size if features else 0
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "label"] + [f"f{i}" for i in range(width)])
        for f in features:
            writer.writerow([f.subject_id, f.label.name if f.label is not None else ""] + [repr(float(v)) for v in f.values])
    return path


def load_features_csv(path: Union[str, Path]) -> List[FeatureVector]:
    out: List[FeatureVector] = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            label = ClassLabel.parse(row[1]) if row[1] else None
            out.append(FeatureVector(np.array([float(v) for v in row[2:]]), row[0], label))
    return out


# ── Persistence ─────────────────────────────────────────────────────────────

def save_model(model: Union[AutoencoderModel, FineTunedEncoder], path: Union[str, Path]) -> Path:
    if isinstance(model, AutoencoderModel):
        meta = {"kind": AUTOENCODER_KIND, "input_size": model.input_size, "encoder_layers": len(model.encoder.layers)}
    else:
        meta = {"kind": FINETUNED_KIND, "input_size": model.input_size, "encoder_layers": len(model.encoder.layers)}
    return save_checkpoint(model.network, path, meta)


def load_model(path: Union[str, Path]) -> Union[AutoencoderModel, FineTunedEncoder]:
    network, meta = load_checkpoint(path)
    split = int(meta["encoder_layers"])
    encoder = Sequential(network.layers[:split])
    rest = Sequential(network.layers[split:])
    if meta.get("kind") == AUTOENCODER_KIND:
        return AutoencoderModel(encoder, rest, int(meta["input_size"]))
    if meta.get("kind") == FINETUNED_KIND:
        return FineTunedEncoder(encoder, rest, int(meta["input_size"]))
    raise ValueError(f"{path}: unknown model kind {meta.get('kind')!r}")
