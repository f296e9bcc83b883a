"""scikit-learn style wrappers.

``SegregatedTransposeConv2d`` is a stateless-after-fit transformer over image
batches; ``TransposeConvNetClassifier`` trains one of the two demo networks.
Both follow the usual contract: hyper-parameters in ``__init__`` untouched,
learned state in trailing-underscore attributes, ``fit`` returns ``self``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.preprocessing import LabelEncoder
from sklearn.utils.validation import check_is_fitted

from .exceptions import ContractError
from .fused import transpose_conv_fused, transpose_conv_fused_parallel
from .netdemo.models import INPUT_SHAPE, N_CLASSES, build_model
from .netdemo.training import TrainConfig, Trainer
from .reference import geometry, transpose_conv_naive
from .segregation import segregate
from .validation import check_image_batch, check_kernel, check_non_negative_int, check_positive_int, resolve_dtype

__all__ = ["SegregatedTransposeConv2d", "TransposeConvNetClassifier"]


class SegregatedTransposeConv2d(TransformerMixin, BaseEstimator):
    """2x transpose convolution applied to every image of a batch.

    Parameters
    ----------
    kernel : array-like of shape (kh, kw, cin, cout) or (kh, kw)
    padding : int, default=0
        Zero padding applied around the upsampled map.
    variant : {"fused", "fused_parallel", "naive"}, default="fused"
    workers : int, default=1
        Thread count for ``variant="fused_parallel"``.
    precision : {"single", "double"}, default="single"

    Attributes
    ----------
    kernel_ : ndarray of shape (kh, kw, cin, cout)
    sub_kernels_ : SubKernelSet
    n_channels_in_ : int
    """

    def __init__(self, kernel=None, padding=0, variant="fused", workers=1, precision="single"):
        self.kernel = kernel
        self.padding = padding
        self.variant = variant
        self.workers = workers
        self.precision = precision

    def fit(self, X=None, y=None):
        """Validate and segregate the kernel; ``X``, if given, is only shape-checked."""
        if self.kernel is None:
            raise ContractError("kernel must be set before fit")
        if self.variant not in ("fused", "fused_parallel", "naive"):
            raise ContractError(f"unknown variant {self.variant!r}")
        check_non_negative_int(self.padding, "padding")
        check_positive_int(self.workers, "workers")
        self.kernel_ = check_kernel(self.kernel, precision=self.precision)
        self.sub_kernels_ = segregate(self.kernel_, self.padding)
        self.n_channels_in_ = self.kernel_.shape[2]
        if X is not None:
            self._check_batch(X)
        return self

    def _check_batch(self, X):
        batch = check_image_batch(X, precision=self.precision)
        if batch.shape[3] != self.n_channels_in_:
            raise ContractError(
                f"X has {batch.shape[3]} channels but the kernel expects {self.n_channels_in_}"
            )
        return batch

    def transform(self, X):
        """Return ``(n, out_h, out_w, cout)``."""
        check_is_fitted(self, "sub_kernels_")
        batch = self._check_batch(X)
        kh, kw = self.kernel_.shape[:2]
        geom = geometry(batch.shape[1], kh, kw, self.padding, n_in_w=batch.shape[2])
        out = np.empty((batch.shape[0], geom.out_h, geom.out_w, self.kernel_.shape[3]), dtype=batch.dtype)
        for n, x in enumerate(batch):
            if self.variant == "naive":
                out[n] = transpose_conv_naive(x, self.kernel_, self.padding)
            elif self.variant == "fused":
                out[n] = transpose_conv_fused(x, self.sub_kernels_, geom)
            else:
                out[n] = transpose_conv_fused_parallel(x, self.sub_kernels_, geom, self.workers)
        return out


class TransposeConvNetClassifier(ClassifierMixin, BaseEstimator):
    """Digit classifier built on either demo network.

    Parameters
    ----------
    variant : {"proposed", "conventional"}, default="proposed"
    iterations : int, default=2000
        Single-sample SGD updates.
    learning_rate : float, default=0.01
    seed : int, default=0
    precision : {"single", "double"}, default="single"

    Attributes
    ----------
    classes_ : ndarray
    model_ : Sequential
    report_ : TrainReport
    """

    def __init__(self, variant="proposed", iterations=2000, learning_rate=0.01, seed=0, precision="single"):
        self.variant = variant
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.seed = seed
        self.precision = precision

    def _images(self, X):
        batch = check_image_batch(X, precision=self.precision)
        if batch.shape[1:] != INPUT_SHAPE:
            raise ContractError(f"images must be {INPUT_SHAPE}, got {batch.shape[1:]}")
        return batch

    def fit(self, X, y):
        images = self._images(X)
        y = np.asarray(y)
        if y.shape != (len(images),):
            raise ContractError(f"y must have shape ({len(images)},), got {y.shape}")
        encoder = LabelEncoder().fit(y)
        if len(encoder.classes_) > N_CLASSES:
            raise ContractError(f"at most {N_CLASSES} classes are supported, got {len(encoder.classes_)}")
        self.classes_ = encoder.classes_
        self.model_ = build_model(self.variant, self.seed, self.precision)
        cfg = TrainConfig(
            iterations=check_non_negative_int(self.iterations, "iterations"),
            learning_rate=self.learning_rate,
            seed=self.seed,
        )
        self.report_ = Trainer(self.model_, (images, encoder.transform(y)), cfg).run().report()
        return self

    def _logits(self, X):
        check_is_fitted(self, ["model_", "classes_"])
        images = self._images(X)
        dtype = resolve_dtype(self.precision)
        return np.stack([self.model_.forward(x) for x in images]).astype(dtype, copy=False)

    def predict_proba(self, X):
        logits = self._logits(X)[:, : len(self.classes_)]
        logits = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(logits)
        return exp / exp.sum(axis=1, keepdims=True)

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]
