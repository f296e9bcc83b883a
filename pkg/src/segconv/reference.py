"""Conventional convolution and the upsample-pad-convolve transpose convolution.

These are the ground truth the fused path is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _kernels
from .exceptions import ContractError, ShapeError
from .tensor import alloc_zeros, pad, upsample2x
from .validation import (
    check_kernel,
    check_non_negative_int,
    check_positive_int,
    check_tensor,
)

__all__ = [
    "MultCounter",
    "TConvGeometry",
    "conv2d_valid",
    "geometry",
    "transpose_conv_naive",
]


class MultCounter:
    """Accumulates multiplications reported by the compiled kernels."""

    def __init__(self):
        self.mults = 0

    def add(self, n):
        self.mults += int(n)

    def __repr__(self):
        return f"MultCounter(mults={self.mults})"


@dataclass(frozen=True)
class TConvGeometry:
    """Shape facts for a 2x transpose convolution with stride 1 on the upsampled map.

    ``n_in`` is the input height and ``n_in_w`` its width (equal for square maps).
    """

    n_in: int
    kh: int
    kw: int
    p_orig: int
    p_fused: int
    out_h: int
    out_w: int
    trim_extra_row: bool
    trim_extra_col: bool
    n_in_w: int

    @property
    def upsampled_h(self):
        return 2 * self.n_in - 1

    @property
    def upsampled_w(self):
        return 2 * self.n_in_w - 1

    @property
    def padded_upsampled_shape(self):
        return (self.upsampled_h + 2 * self.p_orig, self.upsampled_w + 2 * self.p_orig)

    @property
    def fused_input_shape(self):
        return (self.n_in + 2 * self.p_fused, self.n_in_w + 2 * self.p_fused)

    @property
    def block_rows(self):
        return (self.out_h + 1) // 2

    @property
    def block_cols(self):
        return (self.out_w + 1) // 2


def geometry(n_in, kh, kw, p_orig, n_in_w=None):
    """Derive output size, fused padding and trim flags.

    >>> g = geometry(4, 3, 3, 2)
    >>> (g.out_h, g.out_w, g.p_fused)
    (9, 9, 1)
    """
    n_in = check_positive_int(n_in, "n_in")
    n_in_w = n_in if n_in_w is None else check_positive_int(n_in_w, "n_in_w")
    kh = check_positive_int(kh, "kh")
    kw = check_positive_int(kw, "kw")
    p_orig = check_non_negative_int(p_orig, "p_orig")
    out_h = (2 * n_in - 1) + 2 * p_orig - kh + 1
    out_w = (2 * n_in_w - 1) + 2 * p_orig - kw + 1
    if out_h < 1 or out_w < 1:
        raise ShapeError(
            f"degenerate transpose convolution: input {n_in}x{n_in_w}, "
            f"kernel {kh}x{kw}, padding {p_orig} gives output {out_h}x{out_w}"
        )
    return TConvGeometry(
        n_in=n_in,
        kh=kh,
        kw=kw,
        p_orig=p_orig,
        p_fused=p_orig // 2,
        out_h=out_h,
        out_w=out_w,
        trim_extra_row=out_h % 2 == 1,
        trim_extra_col=out_w % 2 == 1,
        n_in_w=n_in_w,
    )


def conv2d_valid(input, kernel, *, counter=None):
    """Stride-1 convolution without implicit padding (cross-correlation form).

    ``out[i, j, f] = sum over u, v, c of input[i+u, j+v, c] * kernel[u, v, c, f]``,
    accumulated in ``u``, ``v``, ``c`` order.
    """
    x = check_tensor(input, check_finite=False, name="input")
    k = check_kernel(kernel, precision=x.dtype, check_finite=False)
    kh, kw, cin, cout = k.shape
    h, w, c = x.shape
    if c != cin:
        raise ContractError(f"input has {c} channels but kernel expects {cin}")
    if h < kh or w < kw:
        raise ShapeError(f"kernel {kh}x{kw} larger than input {h}x{w}")
    out = alloc_zeros((h - kh + 1, w - kw + 1, cout), x.dtype, "output")
    mults = _kernels.conv_valid_into(x, k, out, 0, cout, 0, out.shape[0])
    if counter is not None:
        counter.add(mults)
    return out


def transpose_conv_naive(input, kernel, p_orig, *, counter=None):
    """2x transpose convolution the conventional way: upsample, pad, convolve."""
    x = check_tensor(input, name="input")
    k = check_kernel(kernel, precision=x.dtype)
    g = geometry(x.shape[0], k.shape[0], k.shape[1], p_orig, n_in_w=x.shape[1])
    if x.shape[2] != k.shape[2]:
        raise ContractError(f"input has {x.shape[2]} channels but kernel expects {k.shape[2]}")
    out = conv2d_valid(pad(upsample2x(x), g.p_orig), k, counter=counter)
    assert out.shape[:2] == (g.out_h, g.out_w)
    return out
