"""Transpose convolution computed straight from the un-upsampled input.

Each block position ``(i, j)`` yields the 2x2 output block
``out[2i:2i+2, 2j:2j+2]``, one element per parity class, by running that
class's sub-kernel over the input padded with ``p_orig // 2``. Blocks that
would fall past an odd output edge are never visited.
"""

from __future__ import annotations

import functools
import os
from concurrent.futures import ThreadPoolExecutor

from . import _kernels
from .exceptions import ContractError
from .reference import geometry
from .segregation import CLASSES, segregate
from .tensor import alloc_zeros, pad
from .validation import check_kernel, check_positive_int, check_tensor

__all__ = [
    "default_workers",
    "partition_work",
    "transpose_conv",
    "transpose_conv_fused",
    "transpose_conv_fused_parallel",
]


def default_workers():
    """Worker count from ``SEGCONV_THREADS`` (defaults to 1)."""
    raw = os.environ.get("SEGCONV_THREADS", "1")
    try:
        return check_positive_int(int(raw), "SEGCONV_THREADS")
    except ValueError:
        raise ContractError(f"SEGCONV_THREADS must be a positive integer, got {raw!r}") from None


def _check_operands(input, sks, geom):
    x = check_tensor(input, precision=sks.dtype, name="input")
    if x.shape[2] != sks.cin:
        raise ContractError(f"input has {x.shape[2]} channels but sub-kernels expect {sks.cin}")
    if (geom.kh, geom.kw) != sks.source_dims or geom.p_orig != sks.p_orig:
        raise ContractError(
            f"geometry (kernel {geom.kh}x{geom.kw}, P={geom.p_orig}) does not match "
            f"sub-kernels (kernel {sks.source_dims[0]}x{sks.source_dims[1]}, P={sks.p_orig})"
        )
    if x.shape[:2] != (geom.n_in, geom.n_in_w):
        raise ContractError(
            f"input is {x.shape[0]}x{x.shape[1]} but geometry expects {geom.n_in}x{geom.n_in_w}"
        )
    return x


def partition_work(cout, block_rows, workers):
    """Split block rows, then output channels, into at most ``workers`` disjoint tiles.

    Returns ``(f0, f1, i0, i1)`` tuples. Row bands come first so every tile
    keeps the full channel run for the vectorised inner loop; channels are
    only split when there are more workers than block rows. Workers beyond
    ``block_rows * cout`` stay idle.
    """
    n_rows = max(1, min(workers, block_rows))
    n_chan = max(1, min(workers // n_rows, cout))
    chan_edges = [cout * n // n_chan for n in range(n_chan + 1)]
    row_edges = [block_rows * n // n_rows for n in range(n_rows + 1)]
    return [
        (chan_edges[a], chan_edges[a + 1], row_edges[b], row_edges[b + 1])
        for b in range(n_rows)
        for a in range(n_chan)
    ]


@functools.lru_cache(maxsize=8)
def _executor(n_threads):
    # pools are reused across calls; thread start-up dominates small layers otherwise
    return ThreadPoolExecutor(max_workers=n_threads, thread_name_prefix="segconv")


def _run_tile(xp, sks, out, tile):
    f0, f1, i0, i1 = tile
    return _kernels.fused_tile_into(xp, *sks.subs, sks.offset_array, out, f0, f1, i0, i1)


def transpose_conv_fused(input, sks, geom, *, counter=None):
    """Fused 2x transpose convolution; equals the upsample-pad-convolve result bit for bit.

    Only two buffers are allocated: the input padded by ``geom.p_fused`` and
    the output.
    """
    x = _check_operands(input, sks, geom)
    xp = pad(x, geom.p_fused)
    out = alloc_zeros((geom.out_h, geom.out_w, sks.cout), x.dtype, "output")
    mults = _run_tile(xp, sks, out, (0, sks.cout, 0, geom.block_rows))
    if counter is not None:
        counter.add(mults)
    return out


def transpose_conv_fused_parallel(input, sks, geom, workers, *, counter=None):
    """Multi-threaded :func:`transpose_conv_fused` with identical output.

    Every output element is written by exactly one worker, in the same
    accumulation order as the sequential version, so results do not depend on
    ``workers`` or scheduling.
    """
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ContractError(f"workers must be a positive integer, got {workers!r}")
    x = _check_operands(input, sks, geom)
    xp = pad(x, geom.p_fused)
    out = alloc_zeros((geom.out_h, geom.out_w, sks.cout), x.dtype, "output")
    tiles = partition_work(sks.cout, geom.block_rows, workers)
    if len(tiles) == 1:
        mults = _run_tile(xp, sks, out, tiles[0])
    else:
        pool = _executor(len(tiles))
        mults = sum(pool.map(lambda t: _run_tile(xp, sks, out, t), tiles))
    if counter is not None:
        counter.add(mults)
    return out


def transpose_conv(input, kernel, p_orig, *, variant="fused", workers=1, counter=None):
    """Convenience entry point: pick ``'naive'``, ``'fused'`` or ``'fused_parallel'``."""
    from .reference import transpose_conv_naive

    if variant == "naive":
        return transpose_conv_naive(input, kernel, p_orig, counter=counter)
    x = check_tensor(input, name="input")
    sks = segregate(check_kernel(kernel, precision=x.dtype), p_orig)
    geom = geometry(x.shape[0], *sks.source_dims, p_orig, n_in_w=x.shape[1])
    if variant == "fused":
        return transpose_conv_fused(x, sks, geom, counter=counter)
    if variant == "fused_parallel":
        return transpose_conv_fused_parallel(x, sks, geom, workers, counter=counter)
    raise ContractError(f"unknown variant {variant!r}")
