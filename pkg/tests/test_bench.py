import json

import pytest

from segconv import ContractError, LayerShape
from segconv.bench import (
    BenchRecord,
    bench_metadata,
    bench_shape,
    preset_shapes,
    records_from_csv,
    records_to_csv,
    records_to_json,
)


def test_flowers_preset_shapes():
    shapes = dict(preset_shapes("flowers"))
    assert shapes["flowers 5x5"] == LayerShape(224, 3, 1, 5, 5, 3)
    assert [s.p_orig for s in shapes.values()] == [1, 2, 3]


def test_gan_presets():
    assert len(preset_shapes("gan:dcgan")) == 4
    assert [label for label, _ in preset_shapes("gan:ebgan")][-1] == "EB-GAN layer 7"
    for bad in ("gan:stylegan", "imagenet"):
        with pytest.raises(ContractError):
            preset_shapes(bad)


def test_bench_shape_records():
    records = bench_shape("tiny", LayerShape(6, 2, 3, 3, 3, 1), workers=2, reps=3)
    assert [r.variant for r in records] == ["naive", "fused", "fused_parallel"]
    assert records[0].speedup_vs_naive == 1.0
    assert records[2].workers == 2 and records[1].workers == 1
    assert all(r.wall_seconds > 0 and r.repetitions == 3 for r in records)


def test_reps_below_three_rejected():
    with pytest.raises(ContractError):
        bench_shape("tiny", LayerShape(6, 2, 3, 3, 3, 1), reps=2)
    with pytest.raises(ContractError):
        BenchRecord("x", LayerShape(6, 2, 3, 3, 3, 1), "fused", 1, 0.1, 2, 1.0)
    with pytest.raises(ContractError):
        BenchRecord("x", LayerShape(6, 2, 3, 3, 3, 1), "fused", 1, 0.0, 3, 1.0)


def test_csv_and_json_carry_identical_values():
    records = bench_shape("tiny", LayerShape(5, 1, 2, 4, 4, 2), reps=3, variants=("fused",))
    from_csv = records_from_csv(records_to_csv(records))
    from_json = json.loads(records_to_json(records, bench_metadata("custom", workers=1, reps=3, seed=0, precision="single")))
    assert from_csv == from_json["records"]
    assert from_json["metadata"]["repetitions"] == 3
    assert "padding_rule" in bench_metadata("flowers", workers=1, reps=3, seed=0, precision="single")
