import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from segconv import read_tensor, table4_report, write_tensor
from segconv.analysis import Table4Report
from segconv.cli import main
from segconv.images import write_image
from segconv.netdemo import synthetic_digits
from segconv.netdemo.data import write_idx_images, write_idx_labels


def run(argv):
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


def test_verify_default_passes(capsys):
    assert run(["verify"]) == 0
    assert "200 cases" in capsys.readouterr().out


def test_verify_corrupted_subkernel_fails_with_counterexample(capsys):
    assert run(["verify", "--cases", "3", "--seed", "9", "--corrupt-subkernel"]) == 1
    err = capsys.readouterr().err
    assert "MISMATCH case 0 (seed 9)" in err and "N=" in err and "P=" in err


def test_verify_zero_cases_warns(capsys):
    assert run(["verify", "--cases", "0"]) == 0
    assert "warning" in capsys.readouterr().err


def test_verify_bad_ranges():
    assert run(["verify", "--cases", "-1"]) == 2
    assert run(["verify", "--max-kernel", "0"]) == 2


def test_usage_errors():
    assert run([]) == 2
    assert run(["frobnicate"]) == 2
    assert run(["bench", "--preset", "nope"]) == 2
    assert run(["bench", "--reps", "2"]) == 2
    assert run(["bench", "--workers", "0"]) == 2
    assert run(["bench", "--preset", "custom"]) == 2
    assert run(["bench", "--preset", "gan:dcgan", "--kernel", "5"]) == 2


def test_bench_custom_json(tmp_path):
    out = tmp_path / "b.json"
    argv = ["bench", "--preset", "custom", "--size", "8", "--cin", "2", "--cout", "3", "--kernel", "3"]
    assert run(argv + ["--padding", "1", "--reps", "3", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert [r["variant"] for r in doc["records"]] == ["naive", "fused", "fused_parallel"]
    assert doc["metadata"]["preset"] == "custom"


def test_bench_workers_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SEGCONV_THREADS", "3")
    out = tmp_path / "b.csv"
    argv = ["bench", "--preset", "custom", "--size", "6", "--kernel", "2", "--reps", "3", "--out", str(out)]
    assert run(argv) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert rows[2]["workers"] == "3"


def test_flops_csv_and_json_agree(tmp_path, capsys):
    assert run(["flops", "--format", "json", "--out", str(tmp_path / "t.json")]) == 0
    assert run(["flops", "--format", "csv", "--out", str(tmp_path / "t.csv")]) == 0
    rows_json = json.loads((tmp_path / "t.json").read_text())["rows"]
    rows_csv = Table4Report.rows_from_csv((tmp_path / "t.csv").read_text())
    assert rows_json == rows_csv == table4_report().rows
    dc2 = next(r for r in rows_csv if r["model"] == "DCGAN" and r["layer"] == 2)
    assert dc2["mults_naive"] == 536_870_912
    assert "note:" in capsys.readouterr().err


def test_apply_identity_pipeline(tmp_path):
    (tmp_path / "one.pgm").write_bytes(b"P5\n1 1\n255\n\xff")
    argv = ["apply", str(tmp_path / "one.pgm"), "--kernel", "ones", "--kernel-size", "1", "--out", str(tmp_path / "o")]
    assert run(argv) == 0
    assert read_tensor(tmp_path / "o").tolist() == [[[1.0]]]


def test_apply_ppm_5x5_p2(tmp_path):
    img = np.random.default_rng(0).uniform(0, 1, (224, 224, 3)).astype(np.float32)
    write_image(tmp_path / "a.ppm", img)
    argv = ["apply", str(tmp_path / "a.ppm"), "--padding", "2", "--out", str(tmp_path / "o"), "--image-out", str(tmp_path / "o.ppm")]
    assert run(argv) == 0
    assert read_tensor(tmp_path / "o").shape == (447, 447, 3)
    assert (tmp_path / "o.ppm").read_bytes().startswith(b"P6\n447 447\n")


def test_apply_variants_agree(tmp_path):
    write_image(tmp_path / "a.pgm", np.random.default_rng(1).uniform(0, 1, (9, 7, 1)))
    outs = []
    for variant in ("naive", "fused", "fused_parallel"):
        path = tmp_path / variant
        argv = ["apply", str(tmp_path / "a.pgm"), "--kernel", "random:3", "--variant", variant, "--padding", "1"]
        assert run(argv + ["--workers", "2", "--out", str(path)]) == 0
        outs.append(read_tensor(path))
    assert outs[0].tobytes() == outs[1].tobytes() == outs[2].tobytes()


def test_apply_kernel_file(tmp_path):
    write_image(tmp_path / "a.ppm", np.full((2, 2, 3), 1.0))
    k = np.zeros((1, 1, 3 * 2), np.float32)
    k[0, 0, 0] = 2.0  # input channel 0 -> output channel 0
    write_tensor(tmp_path / "k", k)
    assert run(["apply", str(tmp_path / "a.ppm"), "--kernel", str(tmp_path / "k"), "--out", str(tmp_path / "o")]) == 0
    out = read_tensor(tmp_path / "o")
    assert out.shape == (3, 3, 2) and out[0, 0].tolist() == [2.0, 0.0]


def test_apply_errors(tmp_path):
    (tmp_path / "t.ppm").write_bytes(b"P6\n4 4\n255\n" + b"\0" * 10)
    (tmp_path / "one.pgm").write_bytes(b"P5\n1 1\n255\n\xff")
    write_tensor(tmp_path / "k", np.ones((1, 1, 5), np.float32))
    out = str(tmp_path / "o")
    assert run(["apply", str(tmp_path / "t.ppm"), "--out", out]) == 3
    assert run(["apply", str(tmp_path / "missing.ppm"), "--out", out]) == 3
    assert run(["apply", str(tmp_path / "one.pgm"), "--kernel", str(tmp_path / "nokernel"), "--out", out]) == 3
    assert run(["apply", str(tmp_path / "one.pgm"), "--kernel", "random:x", "--out", out]) == 2
    write_image(tmp_path / "c.ppm", np.zeros((2, 2, 3)))
    assert run(["apply", str(tmp_path / "c.ppm"), "--kernel", str(tmp_path / "k"), "--out", out]) == 2
    # 1x1 input cannot fit a 5x5 kernel without padding
    assert run(["apply", str(tmp_path / "one.pgm"), "--out", out]) == 2


def test_train_demo_zero_iterations_csv(capsys):
    assert run(["train-demo", "--iterations", "0", "--samples", "20", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["model"] for r in rows] == ["conventional", "proposed"]
    assert all(float(r["wall_seconds"]) == 0.0 for r in rows)
    assert rows[0]["initial_loss"] == rows[0]["final_loss"] == rows[1]["final_loss"]


def test_train_demo_deterministic_curves(tmp_path):
    docs = []
    for n in range(2):
        path = tmp_path / f"r{n}.json"
        assert run(["train-demo", "--iterations", "60", "--samples", "30", "--seed", "3", "--out", str(path)]) == 0
        docs.append(json.loads(path.read_text()))
    for model in ("conventional", "proposed"):
        assert docs[0][model]["loss_curve"] == docs[1][model]["loss_curve"]
    assert docs[0]["conventional"]["loss_curve"] == pytest.approx(docs[0]["proposed"]["loss_curve"], rel=1e-4)
    assert docs[0]["ratio"] > 0


def test_train_demo_idx_and_errors(tmp_path):
    images, labels = synthetic_digits(12, seed=0)
    write_idx_images(tmp_path / "i", images)
    write_idx_labels(tmp_path / "l", labels)
    argv = ["train-demo", "--iterations", "5", "--images", str(tmp_path / "i"), "--labels", str(tmp_path / "l")]
    assert run(argv + ["--out", str(tmp_path / "r.json")]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["proposed"]["iterations"] == 5
    assert run(["train-demo", "--images", str(tmp_path / "nope"), "--labels", str(tmp_path / "nope")]) == 3
    assert run(["train-demo", "--images", str(tmp_path / "l"), "--labels", str(tmp_path / "l")]) == 3
    assert run(["train-demo", "--images", str(tmp_path / "i")]) == 2


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "segconv", "verify", "--cases", "5"], capture_output=True, text=True)
    assert done.returncode == 0 and "5 cases" in done.stdout
