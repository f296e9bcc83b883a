import numpy as np
import pytest
from conftest import int_tensor, scatter_tconv

from segconv import (
    ContractError,
    MultCounter,
    ShapeError,
    conv2d_valid,
    geometry,
    transpose_conv_naive,
)

X2 = np.array([[1, 2], [3, 4]], dtype=np.float64)[:, :, None]
K3 = np.arange(1, 10, dtype=np.float64).reshape(3, 3, 1, 1)


def test_geometry_doctest_values():
    g = geometry(4, 3, 3, 2)
    assert (g.out_h, g.out_w, g.p_fused) == (9, 9, 1)
    assert g.trim_extra_row and g.trim_extra_col


@pytest.mark.parametrize(
    "n_in, k, p, out",
    [(4, 4, 2, 8), (8, 4, 2, 16), (16, 4, 2, 32), (32, 4, 2, 64), (28, 5, 0, 51), (224, 5, 2, 447), (1, 1, 0, 1)],
)
def test_geometry_output_size(n_in, k, p, out):
    g = geometry(n_in, k, k, p)
    assert g.out_h == g.out_w == out
    assert g.trim_extra_row == (out % 2 == 1)


def test_geometry_rectangular_and_derived_shapes():
    g = geometry(3, 2, 4, 3, n_in_w=5)
    assert (g.out_h, g.out_w) == (5 + 6 - 2 + 1, 9 + 6 - 4 + 1)
    assert g.padded_upsampled_shape == (11, 15)
    assert g.fused_input_shape == (5, 7)
    assert (g.block_rows, g.block_cols) == (5, 6)


def test_geometry_rejects_degenerate_and_bad_args():
    with pytest.raises(ShapeError):
        geometry(1, 3, 3, 0)
    with pytest.raises(ContractError):
        geometry(0, 3, 3, 0)
    with pytest.raises(ContractError):
        geometry(4, 3, 3, -1)


def test_naive_hand_computed_values():
    out = transpose_conv_naive(X2, K3, 2)
    assert out.shape == (5, 5, 1)
    # corner sees only x[0,0] through tap (2,2); centre sees all four inputs
    assert out[0, 0, 0] == 9
    assert out[2, 2, 0] == 1 * 1 + 2 * 3 + 3 * 7 + 4 * 9
    assert out[4, 4, 0] == 4 * 1


def test_naive_matches_scatter_oracle(rng):
    for p in range(4):
        x = int_tensor(rng, (5, 4, 2), dtype=np.float64)
        k = int_tensor(rng, (3, 4, 2, 3), dtype=np.float64)
        np.testing.assert_array_equal(transpose_conv_naive(x, k, p), scatter_tconv(x, k, p))


def test_identity_pipeline():
    out = transpose_conv_naive(np.ones((1, 1, 1), np.float32), np.ones((1, 1, 1, 1), np.float32), 0)
    assert out.shape == (1, 1, 1) and out[0, 0, 0] == 1.0


def test_conv2d_valid_small_case():
    x = np.arange(16, dtype=np.float64).reshape(4, 4, 1)
    k = np.ones((2, 2, 1, 1))
    out = conv2d_valid(x, k)
    assert out[:, :, 0].tolist() == [[10, 14, 18], [26, 30, 34], [42, 46, 50]]


def test_conv2d_valid_wide_channels_match_einsum(rng):
    x = rng.standard_normal((6, 5, 3))
    k = rng.standard_normal((3, 2, 3, 20))
    ref = np.zeros((4, 4, 20))
    for u in range(3):
        for v in range(2):
            ref += np.einsum("ijc,cf->ijf", x[u : u + 4, v : v + 4], k[u, v])
    np.testing.assert_allclose(conv2d_valid(x, k), ref, rtol=1e-12, atol=1e-12)


def test_conv2d_valid_errors():
    with pytest.raises(ContractError):
        conv2d_valid(np.zeros((4, 4, 2)), np.zeros((2, 2, 3, 1)))
    with pytest.raises(ShapeError):
        conv2d_valid(np.zeros((2, 2, 1)), np.zeros((3, 3, 1, 1)))


def test_naive_counter_counts_zero_multiplications():
    c = MultCounter()
    transpose_conv_naive(X2, K3, 2, counter=c)
    assert c.mults == 5 * 5 * 9


def test_naive_rejects_nonfinite_and_channel_mismatch():
    bad = X2.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(ContractError):
        transpose_conv_naive(bad, K3, 0)
    with pytest.raises(ContractError):
        transpose_conv_naive(np.zeros((2, 2, 2)), K3, 0)
