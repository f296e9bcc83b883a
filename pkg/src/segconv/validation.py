"""Input validation helpers.

Tensors are plain ``numpy`` arrays: feature maps are ``(height, width,
channels)`` and kernels are ``(kh, kw, cin, cout)``, both C-contiguous with
dtype ``float32`` or ``float64``.
"""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import ContractError, ShapeError

PRECISIONS = {"single": np.dtype(np.float32), "double": np.dtype(np.float64)}


def resolve_dtype(precision):
    """Map ``'single'``/``'double'`` (or a float dtype) to a numpy dtype."""
    if isinstance(precision, str):
        try:
            return PRECISIONS[precision]
        except KeyError:
            raise ContractError(
                f"precision must be one of {sorted(PRECISIONS)}, got {precision!r}"
            ) from None
    dtype = np.dtype(precision)
    if dtype not in PRECISIONS.values():
        raise ContractError(f"unsupported element type {dtype}")
    return dtype


def precision_of(array) -> str:
    return "double" if array.dtype == np.float64 else "single"


def _as_float_array(data, ndim, name, precision, check_finite):
    arr = np.asarray(data)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if any(s < 1 for s in arr.shape):
        raise ShapeError(f"{name} dimensions must be positive, got {arr.shape}")
    if precision is None:
        dtype = arr.dtype if arr.dtype in PRECISIONS.values() else np.dtype(np.float32)
    else:
        dtype = resolve_dtype(precision)
    arr = np.ascontiguousarray(arr, dtype=dtype)
    if check_finite and not np.isfinite(arr).all():
        raise ContractError(f"{name} contains NaN or Inf")
    return arr


def check_tensor(data, precision=None, *, check_finite=True, name="tensor"):
    """Validate and convert ``data`` to a ``(h, w, c)`` float feature map.

    A 2-D array is promoted to a single-channel map. Non-float input is cast
    to ``float32`` unless ``precision`` says otherwise.
    """
    arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return _as_float_array(arr, 3, name, precision, check_finite)


def check_kernel(data, precision=None, *, check_finite=True, name="kernel"):
    """Validate and convert ``data`` to a ``(kh, kw, cin, cout)`` filter bank.

    A 2-D array is treated as a single-input, single-output kernel.
    """
    arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[:, :, None, None]
    return _as_float_array(arr, 4, name, precision, check_finite)


def check_image_batch(X, precision=None, *, name="X"):
    """Validate a batch of feature maps, returning shape ``(n, h, w, c)``.

    Accepts ``(n, h, w)`` for single-channel images.
    """
    arr = np.asarray(X)
    if arr.ndim == 3:
        arr = arr[..., None]
    return _as_float_array(arr, 4, name, precision, True)


def check_non_negative_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ContractError(f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise ContractError(f"{name} must be non-negative, got {value}")
    return int(value)


def check_positive_int(value, name):
    value = check_non_negative_int(value, name)
    if value == 0:
        raise ContractError(f"{name} must be positive")
    return value

