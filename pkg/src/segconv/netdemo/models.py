"""The two demo networks: upsample + convolution versus the fused layer."""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..exceptions import ContractError
from ..validation import resolve_dtype
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

INPUT_SHAPE = (28, 28, 1)
N_CLASSES = 10
N_FILTERS = 8
KERNEL_SIZE = 5


class Sequential:
    """A stack of layers ending in softmax cross-entropy."""

    def __init__(self, layers, name=""):
        self.layers = list(layers)
        self.name = name
        self.loss_fn = SoftmaxCrossEntropy()

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
            if grad is None:
                break
        return grad

    def loss_and_backward(self, x, label):
        logits = self.forward(x)
        loss, grad = self.loss_fn(logits, label)
        self.backward(grad)
        return loss

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def sgd_step(self, learning_rate, scale=1.0):
        for layer in self.layers:
            if not layer.params:
                continue
            for name, p in layer.params.items():
                _kernels.sgd_update(p, layer.grads[name], learning_rate * scale)
            layer.params_updated()

    def parameters(self):
        """Flat ``{"<layer index>.<name>": array}`` view of all parameters."""
        return {
            f"{n}.{name}": p
            for n, layer in enumerate(self.layers)
            for name, p in layer.params.items()
        }

    def shapes(self, input_shape=INPUT_SHAPE):
        """Output shape after every layer, starting with the input."""
        shapes = [tuple(input_shape)]
        for layer in self.layers:
            shapes.append(tuple(layer.output_shape(shapes[-1])))
        return shapes

    def predict_logits(self, x):
        return self.forward(x)


def initial_weights(seed=0, precision="single"):
    """Seeded He-style initial weights shared by both model variants."""
    dtype = resolve_dtype(precision)
    rng = np.random.default_rng(seed)
    fan_in = KERNEL_SIZE * KERNEL_SIZE * INPUT_SHAPE[2]
    kernel = rng.standard_normal((KERNEL_SIZE, KERNEL_SIZE, INPUT_SHAPE[2], N_FILTERS))
    kernel *= np.sqrt(2.0 / fan_in)
    pooled = 26 * 26 * N_FILTERS
    weight = rng.standard_normal((N_CLASSES, pooled)) * np.sqrt(1.0 / pooled)
    bias = np.zeros(N_CLASSES)
    return kernel.astype(dtype), weight.astype(dtype), bias.astype(dtype)


def build_conventional_model(seed=0, precision="single"):
    """Input 28x28x1, upsample to 55x55, 5x5x1x8 valid convolution, ReLU,
    ceil-mode 2x2 max pool to 26x26x8, dense to 10 logits.
    """
    kernel, weight, bias = initial_weights(seed, precision)
    layers = [
        Upsample2x(),
        Conv2D(kernel, compute_input_grad=False),
        ReLU(),
        MaxPool2D(),
        Flatten(),
        Dense(weight, bias),
    ]
    return Sequential(layers, name="conventional")


def build_proposed_model(seed=0, precision="single"):
    """Same network with the upsample and convolution replaced by one fused
    transpose convolution layer (5x5x1x8, no padding, output 51x51x8).
    """
    kernel, weight, bias = initial_weights(seed, precision)
    layers = [
        SegregatedTransposeConv2D(kernel, p_orig=0, compute_input_grad=False),
        ReLU(),
        MaxPool2D(),
        Flatten(),
        Dense(weight, bias),
    ]
    return Sequential(layers, name="proposed")


def build_model(variant, seed=0, precision="single"):
    if variant == "conventional":
        return build_conventional_model(seed, precision)
    if variant == "proposed":
        return build_proposed_model(seed, precision)
    raise ContractError(f"unknown model variant {variant!r}")
