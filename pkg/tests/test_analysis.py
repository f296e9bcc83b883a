import json

import numpy as np
import pytest

from segconv import (
    GAN_LAYERS,
    LayerShape,
    MultCounter,
    count_ops_fused,
    count_ops_naive,
    geometry,
    memory_saved_bytes,
    segregate,
    table4_report,
    transpose_conv_fused,
    transpose_conv_naive,
)
from segconv.analysis import Table4Report


def test_dcgan_layer2_counts():
    s = GAN_LAYERS["DCGAN"][2]
    assert count_ops_naive(s).mults == 536_870_912
    assert count_ops_fused(s).mults == 134_217_728
    assert count_ops_naive(s).adds == 536_838_144
    assert count_ops_fused(s).adds == 134_184_960


def test_model_totals():
    report = table4_report()
    assert report.row("DCGAN", "total")["reduction_mults"] == 1_226_833_920
    assert report.row("EB-GAN", "total")["reduction_mults"] == 11_274_289_152
    assert report.row("EB-GAN", "total")["reduction_adds"] == 11_274_289_152
    assert report.row("Art-GAN", "total")["mults_naive"] == 562_036_736
    assert report.row("GP-GAN", "total")["mults_fused"] == 103_809_024


def test_typo_rows_are_flagged_not_copied():
    flags = table4_report().flags
    assert len(flags) == 4
    assert any("Art-GAN 6 mults_fused" in f for f in flags)
    assert any("GP-GAN total adds_fused" in f and "103,682,048" in f for f in flags)
    assert table4_report().row("GP-GAN", "total")["adds_fused"] == 103_682_048


def test_report_round_trips():
    report = table4_report()
    parsed = json.loads(report.to_json())
    assert parsed["rows"] == report.rows
    assert Table4Report.rows_from_csv(report.to_csv()) == report.rows


def test_memory_saved_flowers_4x4():
    assert memory_saved_bytes(LayerShape(224, 3, 1, 4, 4, 2)) == 1_827_900
    assert memory_saved_bytes(LayerShape(224, 3, 1, 4, 4, 2), elem_bytes=8) == 2 * 1_827_900


@pytest.mark.parametrize(
    "shape",
    [LayerShape(5, 2, 3, 3, 3, 1), LayerShape(6, 1, 2, 4, 4, 2), LayerShape(7, 3, 1, 5, 5, 3), LayerShape(4, 2, 2, 2, 3, 0)],
)
def test_analytic_counts_match_instrumented(shape):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((shape.n_in, shape.n_in, shape.cin)).astype(np.float32)
    k = rng.standard_normal((shape.kh, shape.kw, shape.cin, shape.cout)).astype(np.float32)
    cn, cf = MultCounter(), MultCounter()
    transpose_conv_naive(x, k, shape.p_orig, counter=cn)
    g = geometry(shape.n_in, shape.kh, shape.kw, shape.p_orig)
    transpose_conv_fused(x, segregate(k, shape.p_orig), g, counter=cf)
    assert cn.mults == count_ops_naive(shape).mults
    assert cf.mults == count_ops_fused(shape).mults


def test_adds_are_mults_minus_outputs():
    s = LayerShape(10, 3, 4, 5, 5, 2)
    g = s.geometry
    for ops in (count_ops_naive(s), count_ops_fused(s)):
        assert ops.adds == ops.mults - g.out_h * g.out_w * s.cout


def test_small_odd_padding_maps_can_exceed_four():
    # with odd P the larger parity class owns the extra output row, so tiny maps pass 4x
    s = LayerShape(9, 2, 2, 3, 3, 1)
    ratio = count_ops_naive(s).mults / count_ops_fused(s).mults
    assert ratio == pytest.approx((51 / 25) ** 2)
    assert ratio > 4.1
