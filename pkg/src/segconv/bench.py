"""Timing harness: naive vs fused vs fused_parallel on seeded random data.

Timings depend only on shapes, so every preset feeds seeded random tensors of
the right size. Each variant gets one untimed warmup call and then ``reps``
timed calls on a monotonic clock; the median is reported. Timed calls go
round-robin across variants so background load drifts onto all of them alike.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .analysis import GAN_LAYERS, LayerShape, shape_dict
from .exceptions import ContractError
from .fused import transpose_conv_fused, transpose_conv_fused_parallel
from .reference import geometry, transpose_conv_naive
from .segregation import segregate
from .validation import check_positive_int, resolve_dtype

VARIANTS = ("naive", "fused", "fused_parallel")
MIN_REPS = 3

# 224x224x3 input, one 3-channel kernel; P = n - 2 per kernel size n
FLOWERS = tuple((f"flowers {n}x{n}", LayerShape(224, 3, 1, n, n, n - 2)) for n in (3, 4, 5))

GAN_PRESETS = {"dcgan": "DCGAN", "artgan": "Art-GAN", "gpgan": "GP-GAN", "ebgan": "EB-GAN"}

CSV_COLUMNS = (
    "label",
    "n_in",
    "cin",
    "cout",
    "kh",
    "kw",
    "p_orig",
    "variant",
    "workers",
    "wall_seconds",
    "repetitions",
    "speedup_vs_naive",
)


@dataclass(frozen=True)
class BenchRecord:
    label: str
    shape: LayerShape
    variant: str
    workers: int
    wall_seconds: float
    repetitions: int
    speedup_vs_naive: float

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ContractError(f"unknown variant {self.variant!r}")
        if not self.wall_seconds > 0:
            raise ContractError("wall_seconds must be positive")
        if self.repetitions < MIN_REPS:
            raise ContractError(f"repetitions must be at least {MIN_REPS}")

    def to_dict(self):
        d = {"label": self.label, **shape_dict(self.shape)}
        d.update(
            variant=self.variant,
            workers=self.workers,
            wall_seconds=self.wall_seconds,
            repetitions=self.repetitions,
            speedup_vs_naive=self.speedup_vs_naive,
        )
        return d


def preset_shapes(name):
    """``[(label, LayerShape), ...]`` for ``flowers`` or ``gan:<model>``."""
    if name == "flowers":
        return list(FLOWERS)
    if name.startswith("gan:"):
        key = name[4:]
        model = GAN_PRESETS.get(key)
        if model is None:
            raise ContractError(f"unknown GAN preset {key!r}; choose from {', '.join(GAN_PRESETS)}")
        return [(f"{model} layer {layer}", shape) for layer, shape in GAN_LAYERS[model].items()]
    raise ContractError(f"unknown preset {name!r}; use 'flowers' or 'gan:<model>'")


def median_seconds(fns, reps):
    """Median wall time per callable: one warmup each, then ``reps`` round-robin rounds."""
    reps = check_positive_int(reps, "reps")
    for fn in fns.values():
        fn()
    times = {name: [] for name in fns}
    for _ in range(reps):
        for name, fn in fns.items():
            start = time.perf_counter()
            fn()
            times[name].append(time.perf_counter() - start)
    return {name: statistics.median(t) for name, t in times.items()}


def bench_shape(label, shape, *, workers=4, reps=5, seed=0, precision="single", variants=VARIANTS):
    """Time each variant on one shape and return one :class:`BenchRecord` per variant.

    The naive variant is always timed, since every speedup is relative to it.
    """
    reps = check_positive_int(reps, "reps")
    if reps < MIN_REPS:
        raise ContractError(f"reps must be at least {MIN_REPS}, got {reps}")
    workers = check_positive_int(workers, "workers")
    unknown = set(variants) - set(VARIANTS)
    if unknown:
        raise ContractError(f"unknown variants {sorted(unknown)}")
    dtype = resolve_dtype(precision)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((shape.n_in, shape.n_in, shape.cin)).astype(dtype)
    k = rng.standard_normal((shape.kh, shape.kw, shape.cin, shape.cout)).astype(dtype)
    sks = segregate(k, shape.p_orig)
    geom = geometry(shape.n_in, shape.kh, shape.kw, shape.p_orig)
    runs = {
        "naive": lambda: transpose_conv_naive(x, k, shape.p_orig),
        "fused": lambda: transpose_conv_fused(x, sks, geom),
        "fused_parallel": lambda: transpose_conv_fused_parallel(x, sks, geom, workers),
    }
    timed = ["naive"] + [v for v in variants if v != "naive"]
    medians = median_seconds({v: runs[v] for v in timed}, reps)
    return [
        BenchRecord(
            label=label,
            shape=shape,
            variant=v,
            workers=workers if v == "fused_parallel" else 1,
            wall_seconds=medians[v],
            repetitions=reps,
            speedup_vs_naive=medians["naive"] / medians[v],
        )
        for v in variants
    ]


def run_bench(preset, *, workers=4, reps=5, seed=0, precision="single", shapes=None):
    """Benchmark every shape of ``preset``, or the explicit ``[(label, LayerShape)]`` list."""
    records = []
    for label, shape in preset_shapes(preset) if shapes is None else shapes:
        records.extend(bench_shape(label, shape, workers=workers, reps=reps, seed=seed, precision=precision))
    return records


def bench_metadata(preset, *, workers, reps, seed, precision):
    meta = {
        "preset": preset,
        "workers": workers,
        "repetitions": reps,
        "seed": seed,
        "precision": precision,
        "timing": "median of round-robin reps after one warmup, time.perf_counter",
    }
    if preset == "flowers":
        meta["padding_rule"] = "P = n - 2 for an n x n kernel"
    return meta


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec.to_dict())
    return buf.getvalue()


def records_to_json(records, metadata=None, **kwargs):
    return json.dumps({"metadata": metadata or {}, "records": [rec.to_dict() for rec in records]}, **kwargs)


def records_from_csv(text):
    """Parse :func:`records_to_csv` output back into plain dicts with typed values."""
    ints = {"n_in", "cin", "cout", "kh", "kw", "p_orig", "workers", "repetitions"}
    floats = {"wall_seconds", "speedup_vs_naive"}
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(
            {k: int(v) if k in ints else float(v) if k in floats else v for k, v in rec.items()}
        )
    return rows
