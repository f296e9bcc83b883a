"""Small trainable network comparing upsample + convolution with the fused layer."""

from .data import load_idx_dataset, read_idx_images, read_idx_labels, synthetic_digits
from .layers import (
    Conv2D,
    Dense,
    Flatten,
    MaxPool2D,
    ReLU,
    SegregatedTransposeConv2D,
    SoftmaxCrossEntropy,
    Upsample2x,
)
from .models import (
    Sequential,
    build_conventional_model,
    build_model,
    build_proposed_model,
    initial_weights,
)
from .training import TrainConfig, TrainReport, Trainer, compare_training, evaluate, train

__all__ = [
    "Conv2D",
    "Dense",
    "Flatten",
    "MaxPool2D",
    "ReLU",
    "SegregatedTransposeConv2D",
    "Sequential",
    "SoftmaxCrossEntropy",
    "TrainConfig",
    "TrainReport",
    "Trainer",
    "Upsample2x",
    "build_conventional_model",
    "build_model",
    "build_proposed_model",
    "compare_training",
    "evaluate",
    "initial_weights",
    "load_idx_dataset",
    "read_idx_images",
    "read_idx_labels",
    "synthetic_digits",
    "train",
]
