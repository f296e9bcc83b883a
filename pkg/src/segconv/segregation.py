"""Split a kernel into the four parity sub-kernels used by the fused path.

Output position ``(y, x)`` of the upsampled-and-padded convolution only ever
meets non-zero input through taps ``(u, v)`` where ``y + u - p`` and
``x + v - p`` are both even. Grouping taps by the parity of ``(y, x)`` gives
four smaller kernels that never touch an inserted zero.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError
from .validation import check_kernel, check_non_negative_int, check_positive_int

__all__ = ["CLASSES", "SubKernelSet", "active_taps", "segregate", "sub_kernel_dims"]

# (row parity, column parity) of the output positions each sub-kernel serves
CLASSES = ((0, 0), (0, 1), (1, 0), (1, 1))


def active_taps(k_size, parity, p_orig):
    """Kernel indices along one axis that hit real input for outputs of ``parity``.

    Returns ``(taps, offset)`` where ``offset`` is where the window for block
    index 0 starts in the input padded by ``p_orig // 2``.
    """
    first = (p_orig - parity) % 2
    taps = tuple(range(first, k_size, 2))
    offset = (parity + first - p_orig) // 2 + p_orig // 2
    return taps, offset


@dataclass(frozen=True, eq=False)
class SubKernelSet:
    """The four parity sub-kernels of one original kernel.

    ``subs[n]``, ``row_taps[n]``, ``col_taps[n]`` and ``class_input_offsets[n]``
    all describe parity class ``CLASSES[n]``. ``row_taps``/``col_taps`` list
    the original kernel indices each sub-kernel row/column was taken from.
    """

    subs: tuple
    class_input_offsets: tuple
    row_taps: tuple
    col_taps: tuple
    source_dims: tuple
    p_orig: int

    @property
    def p_orig_parity(self):
        return self.p_orig % 2

    @property
    def cin(self):
        return self.subs[0].shape[2]

    @property
    def cout(self):
        return self.subs[0].shape[3]

    @property
    def dtype(self):
        return self.subs[0].dtype

    @functools.cached_property
    def offset_array(self):
        """``class_input_offsets`` as a read-only ``(4, 2)`` int64 array for the compiled loops."""
        arr = np.array(self.class_input_offsets, dtype=np.int64)
        arr.flags.writeable = False
        return arr

    def sub(self, r, s):
        return self.subs[CLASSES.index((r, s))]

    def offsets(self, r, s):
        return self.class_input_offsets[CLASSES.index((r, s))]

    def spatial_dims(self):
        return [sk.shape[:2] for sk in self.subs]

    def merge(self, parts=None):
        """Scatter per-class arrays (default: the sub-kernels) back to full kernel layout.

        Used to reassemble gradients computed against the sub-kernels.
        """
        parts = self.subs if parts is None else parts
        kh, kw = self.source_dims
        full = np.zeros((kh, kw, self.cin, self.cout), dtype=parts[0].dtype)
        for part, rows, cols in zip(parts, self.row_taps, self.col_taps):
            if part.size:
                full[np.ix_(rows, cols)] = part
        return full

    def equals(self, other):
        """Bitwise equality of all sub-kernels and metadata."""
        return (
            self.class_input_offsets == other.class_input_offsets
            and self.row_taps == other.row_taps
            and self.col_taps == other.col_taps
            and self.source_dims == other.source_dims
            and self.p_orig == other.p_orig
            and all(
                a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()
                for a, b in zip(self.subs, other.subs)
            )
        )


def segregate(kernel, p_orig):
    """Split ``kernel`` (``kh x kw x cin x cout``) into four parity sub-kernels.

    Taps keep their relative row-major order inside each sub-kernel, and the
    data is copied into contiguous storage. Sub-kernels may be empty (e.g. for
    a 1x1 kernel three of them are).

    For an odd kernel and even ``p_orig`` class ``(0, 0)`` gets the even-even
    taps; an odd ``p_orig`` swaps every class with its complement.
    """
    k = check_kernel(kernel)
    p_orig = check_non_negative_int(p_orig, "p_orig")
    kh, kw = k.shape[:2]
    subs, offsets, row_taps, col_taps = [], [], [], []
    for r, s in CLASSES:
        rows, off_r = active_taps(kh, r, p_orig)
        cols, off_c = active_taps(kw, s, p_orig)
        if rows and cols:
            # taps form stride-2 runs, so a basic slice picks them out
            # always copy: a slice that is already contiguous would otherwise alias the caller's kernel
            sub = np.array(k[rows[0] : rows[-1] + 1 : 2, cols[0] : cols[-1] + 1 : 2], order="C")
        else:
            sub = np.zeros((len(rows), len(cols)) + k.shape[2:], dtype=k.dtype)
        subs.append(sub)
        offsets.append((off_r, off_c))
        row_taps.append(rows)
        col_taps.append(cols)
    return SubKernelSet(
        subs=tuple(subs),
        class_input_offsets=tuple(offsets),
        row_taps=tuple(row_taps),
        col_taps=tuple(col_taps),
        source_dims=(kh, kw),
        p_orig=p_orig,
    )


def sub_kernel_dims(n):
    """Spatial sizes of the four sub-kernels of an odd ``n x n`` kernel.

    >>> sub_kernel_dims(5)
    [(3, 3), (3, 2), (2, 3), (2, 2)]
    """
    n = check_positive_int(n, "n")
    if n % 2 == 0:
        raise ContractError(f"sub_kernel_dims only covers odd kernels, got n={n}; use segregate")
    big, small = (n + 1) // 2, n // 2
    return [(big, big), (big, small), (small, big), (small, small)]
