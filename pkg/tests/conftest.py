import numpy as np
import pytest


def scatter_tconv(x, k, p):
    """Transpose convolution written as a scatter, independent of the package.

    Input element ``x[i, j]`` sits at ``(2i + p, 2j + p)`` of the padded
    upsampled map, so it reaches output ``(2i + p - u, 2j + p - v)`` through tap
    ``(u, v)``.
    """
    x = np.asarray(x, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    h, w, _ = x.shape
    kh, kw, _, cout = k.shape
    oh = 2 * h - 1 + 2 * p - kh + 1
    ow = 2 * w - 1 + 2 * p - kw + 1
    out = np.zeros((oh, ow, cout))
    for i in range(h):
        for j in range(w):
            for u in range(kh):
                for v in range(kw):
                    y, z = 2 * i + p - u, 2 * j + p - v
                    if 0 <= y < oh and 0 <= z < ow:
                        out[y, z] += x[i, j] @ k[u, v]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def int_tensor(rng, shape, lo=-8, hi=8, dtype=np.float32):
    return rng.integers(lo, hi + 1, size=shape).astype(dtype)
