"""Layers for the small demo network.

Every layer maps one ``(h, w, c)`` sample (or a flat vector) forward and
returns the input gradient from :meth:`backward`, accumulating parameter
gradients into ``grads``.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..exceptions import ContractError, StateError
from ..fused import _run_tile
from ..reference import conv2d_valid, geometry
from ..segregation import CLASSES, segregate
from ..tensor import upsample2x

__all__ = [
    "Conv2D",
    "Dense",
    "Flatten",
    "Layer",
    "MaxPool2D",
    "ReLU",
    "SegregatedTransposeConv2D",
    "SoftmaxCrossEntropy",
    "Upsample2x",
]


class Layer:
    """Base class. Parameterless layers keep empty ``params``/``grads``."""

    def __init__(self):
        self.params = {}
        self.grads = {}
        self._cache = None

    def _cached(self):
        if self._cache is None:
            raise StateError(f"{type(self).__name__}.backward called before forward")
        return self._cache

    def zero_grad(self):
        for name, p in self.params.items():
            g = self.grads.get(name)
            if g is None or g.shape != p.shape or g.dtype != p.dtype:
                self.grads[name] = np.zeros_like(p)
            else:
                g.fill(0)

    def params_updated(self):
        """Hook for layers that derive state from their parameters."""

    def output_shape(self, input_shape):
        raise NotImplementedError


class Upsample2x(Layer):
    """Zero-insertion upsampling, ``h x w`` to ``(2h-1) x (2w-1)``."""

    def forward(self, x):
        self._cache = x.shape
        return upsample2x(x)

    def backward(self, grad_out):
        self._cached()
        return np.ascontiguousarray(grad_out[::2, ::2])

    def output_shape(self, input_shape):
        h, w, c = input_shape
        return (2 * h - 1, 2 * w - 1, c)


def _kernel_grad_gemm(x, g, kh, kw, off_r, off_c, cols_cache):
    """``sum_ij window(i, j) outer g[i, j]`` as one matrix product over im2col patches.

    Returns a ``(kh * kw * cin, cout)`` array in ``(u, v, c)`` row order.
    """
    n_i, n_j, cout = g.shape
    cin = x.shape[2]
    shape = (n_i * n_j, kh * kw * cin)
    cols = cols_cache.get(shape)
    if cols is None or cols.dtype != x.dtype:
        cols = cols_cache[shape] = np.empty(shape, dtype=x.dtype)
    _kernels.patches_into(x, kh, kw, off_r, off_c, n_i, n_j, cols)
    return cols.T @ g.reshape(-1, cout)


class Conv2D(Layer):
    """Valid, stride-1 convolution without bias."""

    def __init__(self, kernel, compute_input_grad=True):
        super().__init__()
        self.params["kernel"] = np.ascontiguousarray(kernel)
        self.compute_input_grad = compute_input_grad
        self._cols = {}
        self.zero_grad()

    def forward(self, x):
        self._cache = x
        return conv2d_valid(x, self.params["kernel"])

    def backward(self, grad_out):
        x = self._cached()
        k = self.params["kernel"]
        g = np.ascontiguousarray(grad_out, dtype=x.dtype)
        kh, kw = k.shape[:2]
        gk = self.grads["kernel"]
        gk += _kernel_grad_gemm(x, g, kh, kw, 0, 0, self._cols).reshape(k.shape)
        if not self.compute_input_grad:
            return None
        gx = np.zeros_like(x)
        _kernels.conv_valid_input_grad(k, g, gx)
        return gx

    def output_shape(self, input_shape):
        h, w, _ = input_shape
        kh, kw, _, cout = self.params["kernel"].shape
        return (h - kh + 1, w - kw + 1, cout)


class SegregatedTransposeConv2D(Layer):
    """2x transpose convolution through the four parity sub-kernels.

    Equivalent to ``Upsample2x`` followed by zero padding ``p_orig`` and
    ``Conv2D``, but neither pass touches an upsampled buffer. The backward
    pass runs each parity class separately and scatters the sub-kernel
    gradients back onto the original kernel taps.
    """

    def __init__(self, kernel, p_orig=0, compute_input_grad=True):
        super().__init__()
        self.params["kernel"] = np.ascontiguousarray(kernel)
        self.p_orig = p_orig
        self.compute_input_grad = compute_input_grad
        self.sks = None
        self._buffers = {}
        self._geoms = {}
        self.zero_grad()
        self.params_updated()
        kh, kw, cin, cout = self.params["kernel"].shape
        flat = np.arange(kh * kw * cin * cout).reshape(kh, kw, cin * cout)
        # flat positions in the full kernel of each class's (u, v, c, f) entries
        self._tap_index = [
            flat[np.ix_(rows, cols)].reshape(-1) for rows, cols in zip(self.sks.row_taps, self.sks.col_taps)
        ]

    def params_updated(self):
        k = self.params["kernel"]
        sks = self.sks
        if sks is None or sks.dtype != k.dtype or sks.source_dims != k.shape[:2] or sks.cin != k.shape[2]:
            self.sks = segregate(k, self.p_orig)
            return
        # same layout as before: refresh the layer-owned sub-kernels in place
        for sub, rows, cols in zip(sks.subs, sks.row_taps, sks.col_taps):
            if sub.size:
                np.copyto(sub, k[rows[0] : rows[-1] + 1 : 2, cols[0] : cols[-1] + 1 : 2])

    def _buffer(self, key, shape, dtype):
        buf = self._buffers.get(key)
        if buf is None or buf.shape != shape or buf.dtype != dtype:
            buf = self._buffers[key] = np.zeros(shape, dtype=dtype)
        return buf

    def _geometry(self, shape):
        geom = self._geoms.get(shape)
        if geom is None:
            kh, kw = self.sks.source_dims
            geom = self._geoms[shape] = geometry(shape[0], kh, kw, self.p_orig, n_in_w=shape[1])
        return geom

    def forward(self, x):
        geom = self._geometry(x.shape[:2])
        if x.shape[2] != self.sks.cin:
            raise ContractError(f"input has {x.shape[2]} channels but kernel expects {self.sks.cin}")
        p = geom.p_fused
        dtype = self.sks.dtype
        # the border of the padded buffer is never written, so it stays zero across calls
        xp = self._buffer("xp", (x.shape[0] + 2 * p, x.shape[1] + 2 * p, x.shape[2]), dtype)
        xp[p : p + x.shape[0], p : p + x.shape[1]] = x
        out = np.zeros((geom.out_h, geom.out_w, self.sks.cout), dtype=dtype)
        _run_tile(xp, self.sks, out, (0, self.sks.cout, 0, geom.block_rows))
        self._cache = (xp, p, x.shape, geom)
        return out

    def backward(self, grad_out):
        xp, p, in_shape, geom = self._cached()
        if grad_out.shape[:2] != (geom.out_h, geom.out_w):
            raise ContractError(f"grad_out shape {grad_out.shape} does not match forward output")
        g = np.ascontiguousarray(grad_out, dtype=xp.dtype)
        need = self.compute_input_grad
        gxp = np.zeros_like(xp) if need else None
        gk = self.grads["kernel"].reshape(-1)
        cin, cout = self.sks.cin, self.sks.cout
        for n, ((r, s), sk, (off_r, off_c)) in enumerate(
            zip(CLASSES, self.sks.subs, self.sks.class_input_offsets)
        ):
            n_pos = ((geom.out_h - r + 1) // 2) * ((geom.out_w - s + 1) // 2)
            if not (sk.size and n_pos):
                continue
            skh, skw = sk.shape[:2]
            cols = self._buffer(("cols", n), (n_pos, skh * skw * cin), xp.dtype)
            plane = self._buffer(("plane", n), (n_pos, cout), xp.dtype)
            _kernels.class_operands(xp, g, r, s, skh, skw, off_r, off_c, cols, plane)
            # classes own disjoint taps, so plain fancy-index accumulation is safe
            gk[self._tap_index[n]] += (cols.T @ plane).reshape(-1)
            if need:
                _kernels.fused_class_input_grad(sk, r, s, off_r, off_c, g, gxp)
        if not need:
            return None
        h, w, _ = in_shape
        return np.ascontiguousarray(gxp[p : p + h, p : p + w])

    def output_shape(self, input_shape):
        g = self._geometry(tuple(input_shape[:2]))
        return (g.out_h, g.out_w, self.params["kernel"].shape[3])


class ReLU(Layer):
    def forward(self, x):
        x = np.ascontiguousarray(x)
        out = np.empty_like(x)
        mask = np.empty(x.shape, dtype=np.bool_)
        _kernels.relu_forward(x, out, mask)
        self._cache = mask
        return out

    def backward(self, grad_out):
        mask = self._cached()
        grad_out = np.ascontiguousarray(grad_out)
        gx = np.empty_like(grad_out)
        _kernels.relu_backward(grad_out, mask, gx)
        return gx

    def output_shape(self, input_shape):
        return input_shape


class MaxPool2D(Layer):
    """Non-overlapping 2x2 max pooling in ceiling mode (a 51-wide map pools to 26).

    Ties go to the first maximum in row-major window order.
    """

    def forward(self, x):
        x = np.ascontiguousarray(x)
        h, w, c = x.shape
        out = np.empty((-(-h // 2), -(-w // 2), c), dtype=x.dtype)
        argmax = np.empty(out.shape, dtype=np.int64)
        _kernels.maxpool2_ceil(x, out, argmax)
        self._cache = (argmax, x.shape)
        return out

    def backward(self, grad_out):
        argmax, shape = self._cached()
        gx = np.zeros(shape, dtype=grad_out.dtype)
        _kernels.maxpool2_backward(np.ascontiguousarray(grad_out), argmax, gx)
        return gx

    def output_shape(self, input_shape):
        h, w, c = input_shape
        return (-(-h // 2), -(-w // 2), c)


class Flatten(Layer):
    def forward(self, x):
        self._cache = x.shape
        return x.reshape(-1)

    def backward(self, grad_out):
        return grad_out.reshape(self._cached())

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)


class Dense(Layer):
    """Fully connected layer on a flat vector: ``weight @ x + bias``.

    ``weight`` is stored ``(n_out, n_in)`` so every inner loop runs along a
    contiguous row.
    """

    def __init__(self, weight, bias):
        super().__init__()
        self.params["weight"] = np.ascontiguousarray(weight)
        self.params["bias"] = np.ascontiguousarray(bias)
        self.zero_grad()

    def forward(self, x):
        w = self.params["weight"]
        x = np.ascontiguousarray(x, dtype=w.dtype)
        if x.shape != (w.shape[1],):
            raise ContractError(f"Dense expects a flat vector of {w.shape[1]}, got shape {x.shape}")
        out = np.empty(w.shape[0], dtype=w.dtype)
        _kernels.dense_forward(x, w, self.params["bias"], out)
        self._cache = x
        return out

    def backward(self, grad_out):
        x = self._cached()
        w = self.params["weight"]
        grad_out = np.ascontiguousarray(grad_out, dtype=w.dtype)
        gx = np.empty_like(x)
        _kernels.dense_backward(x, w, grad_out, self.grads["weight"], self.grads["bias"], gx)
        return gx

    def output_shape(self, input_shape):
        return (self.params["weight"].shape[0],)


class SoftmaxCrossEntropy:
    """Softmax followed by negative log-likelihood of one integer label."""

    def __call__(self, logits, label):
        shifted = logits - logits.max()
        exp = np.exp(shifted)
        total = exp.sum()
        loss = float(np.log(total) - shifted[label])
        grad = exp / total
        grad[label] -= 1
        return loss, grad
