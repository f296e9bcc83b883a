"""Dense feature-map utilities: padding, zero-insertion upsampling, comparison,
the ``SGC1`` binary tensor format, and buffer accounting.
"""

from __future__ import annotations

import contextlib
import contextvars
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ParseError
from .validation import check_non_negative_int, check_tensor

__all__ = [
    "AllocationLog",
    "alloc_zeros",
    "pad",
    "read_tensor",
    "tensors_equal_approx",
    "tensors_equal_exact",
    "track_allocations",
    "upsample2x",
    "write_tensor",
]

MAGIC = b"SGC1"
_HEADER = struct.Struct("<4sIIII")
_PRECISION_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


@dataclass
class AllocationLog:
    """Record of every buffer allocated through :func:`alloc_zeros`.

    ``total_bytes`` never subtracts frees, so it is an upper bound on the
    auxiliary memory held at any one time.
    """

    events: list = field(default_factory=list)

    def record(self, label, nbytes):
        self.events.append((label, int(nbytes)))

    @property
    def total_bytes(self):
        return sum(n for _, n in self.events)

    @property
    def largest(self):
        return max((n for _, n in self.events), default=0)

    def bytes_for(self, label):
        return sum(n for name, n in self.events if name == label)


_active_log: contextvars.ContextVar[AllocationLog | None] = contextvars.ContextVar(
    "segconv_allocation_log", default=None
)


@contextlib.contextmanager
def track_allocations():
    """Collect allocations made by segconv operations inside the block."""
    log = AllocationLog()
    token = _active_log.set(log)
    try:
        yield log
    finally:
        _active_log.reset(token)


def alloc_zeros(shape, dtype, label):
    arr = np.zeros(shape, dtype=dtype)
    log = _active_log.get()
    if log is not None:
        log.record(label, arr.nbytes)
    return arr


def pad(t, p):
    """Zero-pad the two spatial dimensions of ``t`` by ``p`` on every side.

    Returns a new array even when ``p == 0``.
    """
    t = check_tensor(t, check_finite=False)
    p = check_non_negative_int(p, "p")
    h, w, c = t.shape
    out = alloc_zeros((h + 2 * p, w + 2 * p, c), t.dtype, "pad")
    out[p : p + h, p : p + w] = t
    return out


def upsample2x(t):
    """Insert a zero between neighbouring rows and columns.

    An ``h x w`` map becomes ``(2h-1) x (2w-1)`` with ``out[2i, 2j] = t[i, j]``.
    """
    t = check_tensor(t, check_finite=False)
    h, w, c = t.shape
    out = alloc_zeros((2 * h - 1, 2 * w - 1, c), t.dtype, "upsample")
    out[::2, ::2] = t
    return out


def tensors_equal_exact(a, b):
    """Bitwise equality of two tensors, except that ``+0.0 == -0.0``.

    Mismatched shapes compare unequal rather than raising.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    # == on floats already treats signed zeros as equal and NaN as unequal
    return bool(np.array_equal(a, b))


def tensors_equal_approx(a, b, rel_tol):
    """Elementwise ``|a - b| <= rel_tol * max(|a|, |b|, 1)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        return False
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return bool(np.all(np.abs(a - b) <= rel_tol * scale))


def encode_tensor(t) -> bytes:
    t = check_tensor(t, check_finite=False)
    dtype = t.dtype.newbyteorder("<")
    h, w, c = t.shape
    header = _HEADER.pack(MAGIC, h, w, c, _PRECISION_CODES[dtype])
    return header + np.ascontiguousarray(t, dtype=dtype).tobytes()


def decode_tensor(buf: bytes):
    if len(buf) < _HEADER.size:
        raise ParseError(
            f"tensor header needs {_HEADER.size} bytes, got {len(buf)}", len(buf)
        )
    magic, h, w, c, code = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    if code not in _CODE_DTYPES:
        raise ParseError(f"unknown precision code {code}", 16)
    if min(h, w, c) < 1:
        raise ParseError(f"tensor dimensions must be positive, got {(h, w, c)}", 4)
    dtype = _CODE_DTYPES[code]
    expected = h * w * c * dtype.itemsize
    payload = len(buf) - _HEADER.size
    if payload != expected:
        raise ParseError(
            f"payload has {payload} bytes, expected {expected}", _HEADER.size + min(payload, expected)
        )
    data = np.frombuffer(buf, dtype=dtype, offset=_HEADER.size).reshape(h, w, c)
    bad = np.flatnonzero(~np.isfinite(data))
    if bad.size:
        raise ParseError("tensor contains NaN or Inf", _HEADER.size + int(bad[0]) * dtype.itemsize)
    return check_tensor(data.astype(dtype.newbyteorder("="), copy=True))


def write_tensor(path, t):
    """Write ``t`` in the ``SGC1`` format (header then raw little-endian data)."""
    Path(path).write_bytes(encode_tensor(t))


def read_tensor(path):
    """Read an ``SGC1`` file. Rejects NaN/Inf elements."""
    return decode_tensor(Path(path).read_bytes())
