from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import GradCheckResult, check_gradients
from .layers import (
    CenterCrop,
    Conv2D,
    Dense,
    Layer,
    LayerKind,
    LayerSpec,
    MaxPool2x2,
    ReLU,
    Softmax,
    Tanh,
    UpsampleNearest2x,
)
from .losses import cross_entropy_loss, mse_loss, one_hot
from .network import Sequential, backward
from .training import SGD, Adam, OptimizerKind, TrainConfig, fit, train_step

__all__ = [
    "Adam",
    "CenterCrop",
    "Conv2D",
    "Dense",
    "GradCheckResult",
    "Layer",
    "LayerKind",
    "LayerSpec",
    "MaxPool2x2",
    "OptimizerKind",
    "ReLU",
    "SGD",
    "Sequential",
    "Softmax",
    "Tanh",
    "TrainConfig",
    "UpsampleNearest2x",
    "backward",
    "check_gradients",
    "cross_entropy_loss",
    "fit",
    "load_checkpoint",
    "mse_loss",
    "one_hot",
    "save_checkpoint",
    "train_step",
]
